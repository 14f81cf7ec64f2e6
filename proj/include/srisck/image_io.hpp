#pragma once

// PGM/PPM (binary P5/P6) reading and writing. PNG lives in png_io.hpp so that
// only code that needs it links libpng.

#include "image.hpp"

#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>

namespace srisck {

class ImageIoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Decoded file content: one channel or three.
using AnyImage = std::variant<GrayImage, RgbImage>;

inline GrayImage as_gray(const AnyImage &img) {
  if (const auto *g = std::get_if<GrayImage>(&img))
    return *g;
  return to_grayscale(std::get<RgbImage>(img));
}

namespace detail {

inline void skip_pnm_space(std::istream &in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_int(std::istream &in) {
  skip_pnm_space(in);
  long long v = -1;
  if (!(in >> v) || v <= 0)
    throw ImageIoError("corrupt PNM header");
  return static_cast<std::size_t>(v);
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace detail

//! Reads a binary PGM (P5) or PPM (P6) with maxval <= 255.
inline AnyImage read_pnm(std::istream &in, std::size_t max_pixels = 0) {
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw ImageIoError("not a binary PGM/PPM file");
  const bool color = magic[1] == '6';
  const auto w = detail::read_pnm_int(in);
  const auto h = detail::read_pnm_int(in);
  const auto maxval = detail::read_pnm_int(in);
  if (maxval > 255)
    throw ImageIoError("only 8-bit PNM is supported");
  if (max_pixels != 0 && w * h > max_pixels)
    throw ImageIoError("image exceeds pixel limit");
  in.get(); // single whitespace after maxval

  const std::size_t channels = color ? 3 : 1;
  std::vector<unsigned char> raw(w * h * channels);
  in.read(reinterpret_cast<char *>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw ImageIoError("truncated PNM pixel data");

  const double scale = 1.0 / static_cast<double>(maxval);
  if (!color) {
    GrayImage g(w, h);
    auto d = g.data();
    for (std::size_t i = 0; i < raw.size(); ++i)
      d[i] = std::min(1.0, raw[i] * scale);
    return g;
  }
  RgbImage rgb{GrayImage(w, h), GrayImage(w, h), GrayImage(w, h)};
  auto r = rgb.r.data(), g = rgb.g.data(), b = rgb.b.data();
  for (std::size_t i = 0; i < w * h; ++i) {
    r[i] = std::min(1.0, raw[3 * i] * scale);
    g[i] = std::min(1.0, raw[3 * i + 1] * scale);
    b[i] = std::min(1.0, raw[3 * i + 2] * scale);
  }
  return rgb;
}

inline AnyImage read_pnm(const std::string &path, std::size_t max_pixels = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ImageIoError("cannot open " + path);
  return read_pnm(in, max_pixels);
}

inline void write_pgm(std::ostream &out, const GrayImage &img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  for (double v : img.data())
    out.put(static_cast<char>(detail::to_byte(v)));
}

inline void write_ppm(std::ostream &out, const RgbImage &img) {
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  auto r = img.r.data(), g = img.g.data(), b = img.b.data();
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.put(static_cast<char>(detail::to_byte(r[i])));
    out.put(static_cast<char>(detail::to_byte(g[i])));
    out.put(static_cast<char>(detail::to_byte(b[i])));
  }
}

inline void write_pgm(const std::string &path, const GrayImage &img) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ImageIoError("cannot write " + path);
  write_pgm(out, img);
}

inline void write_ppm(const std::string &path, const RgbImage &img) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw ImageIoError("cannot write " + path);
  write_ppm(out, img);
}

} // namespace srisck
