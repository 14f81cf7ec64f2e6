#pragma once

// Text key-point files:
//   # sri-sck v1 n=<n> sf=<sf>
//   # image=<width>x<height>        (optional)
//   x y size sigma level cm sm      (one key-point per line)

#include "detector.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace srisck {

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct KeyPointFile {
  std::size_t block_size = 0;
  double scale_factor = 0.0;
  std::optional<std::size_t> image_width, image_height;
  std::vector<KeyPoint> keypoints;
};

inline std::string format_header(std::size_t n, double sf) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "# sri-sck v1 n=%zu sf=%g", n, sf);
  return buf;
}

inline std::string format_keypoint(const KeyPoint &kp) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f %zu %zu %.6f", kp.x, kp.y,
                kp.size, kp.sigma, kp.level, kp.cm, kp.sm);
  return buf;
}

inline void write_keypoints(std::ostream &out, const KeyPointFile &file) {
  out << format_header(file.block_size, file.scale_factor) << '\n';
  if (file.image_width && file.image_height)
    out << "# image=" << *file.image_width << 'x' << *file.image_height << '\n';
  for (const auto &kp : file.keypoints)
    out << format_keypoint(kp) << '\n';
}

inline void write_keypoints(const std::string &path, const KeyPointFile &file) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path);
  write_keypoints(out, file);
  if (!out)
    throw std::runtime_error("write failed: " + path);
}

inline KeyPointFile read_keypoints(std::istream &in) {
  KeyPointFile file;
  std::string line;
  if (!std::getline(in, line) ||
      std::sscanf(line.c_str(), "# sri-sck v1 n=%zu sf=%lf", &file.block_size,
                  &file.scale_factor) != 2)
    throw FormatError("missing '# sri-sck v1' header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    if (line[0] == '#') {
      std::size_t w = 0, h = 0;
      if (std::sscanf(line.c_str(), "# image=%zux%zu", &w, &h) == 2) {
        file.image_width = w;
        file.image_height = h;
      }
      continue;
    }
    std::istringstream ls(line);
    KeyPoint kp;
    std::string extra;
    if (!(ls >> kp.x >> kp.y >> kp.size >> kp.sigma >> kp.level >> kp.cm >> kp.sm) ||
        (ls >> extra))
      throw FormatError("malformed key-point on line " + std::to_string(lineno));
    file.keypoints.push_back(kp);
  }
  return file;
}

inline KeyPointFile read_keypoints(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return read_keypoints(in);
}

} // namespace srisck
