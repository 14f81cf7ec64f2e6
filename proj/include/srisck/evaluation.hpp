#pragma once

// Repeatability of disk-shaped regions under a known homography, and
// synthetic image pairs with exact ground truth.

#include "detector.hpp"
#include "geometry.hpp"
#include "image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace srisck {

//! 3x3 projective map from image-A to image-B pixel coordinates, h[2][2] = 1.
class Homography {
public:
  Homography() : h_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}} {}
  explicit Homography(const std::array<std::array<double, 3>, 3> &h) : h_(h) {
    if (std::abs(h_[2][2]) > 1e-15) {
      const double s = h_[2][2];
      for (auto &row : h_)
        for (double &v : row)
          v /= s;
    }
    if (std::abs(det()) <= 1e-12)
      throw std::invalid_argument("homography is singular");
  }

  static Homography identity() { return {}; }

  double operator()(std::size_t r, std::size_t c) const { return h_[r][c]; }

  double det() const {
    return h_[0][0] * (h_[1][1] * h_[2][2] - h_[1][2] * h_[2][1]) -
           h_[0][1] * (h_[1][0] * h_[2][2] - h_[1][2] * h_[2][0]) +
           h_[0][2] * (h_[1][0] * h_[2][1] - h_[1][1] * h_[2][0]);
  }

  Homography inverse() const {
    const auto &m = h_;
    const double d = det();
    std::array<std::array<double, 3>, 3> inv{};
    inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / d;
    inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / d;
    inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / d;
    inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / d;
    inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / d;
    inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / d;
    inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / d;
    inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / d;
    inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / d;
    return Homography(inv);
  }

  //! Maps (x, y); throws when the point goes to infinity.
  std::array<double, 2> apply(double x, double y) const {
    const double w = h_[2][0] * x + h_[2][1] * y + h_[2][2];
    if (std::abs(w) < 1e-12)
      throw std::domain_error("point maps to infinity");
    return {(h_[0][0] * x + h_[0][1] * y + h_[0][2]) / w,
            (h_[1][0] * x + h_[1][1] * y + h_[1][2]) / w};
  }

  //! Determinant of the local affine approximation at (x, y).
  double jacobian_det(double x, double y) const {
    const double w = h_[2][0] * x + h_[2][1] * y + h_[2][2];
    if (std::abs(w) < 1e-12)
      throw std::domain_error("point maps to infinity");
    const auto [u, v] = apply(x, y);
    const double j00 = (h_[0][0] - u * h_[2][0]) / w;
    const double j01 = (h_[0][1] - u * h_[2][1]) / w;
    const double j10 = (h_[1][0] - v * h_[2][0]) / w;
    const double j11 = (h_[1][1] - v * h_[2][1]) / w;
    return j00 * j11 - j01 * j10;
  }

  const std::array<std::array<double, 3>, 3> &matrix() const { return h_; }

private:
  std::array<std::array<double, 3>, 3> h_;
};

//! Reads three lines of three whitespace-separated numbers.
inline Homography read_homography(std::istream &in) {
  std::array<std::array<double, 3>, 3> h{};
  std::string line;
  std::size_t row = 0;
  while (row < 3 && std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream ls(line);
    std::string extra;
    if (!(ls >> h[row][0] >> h[row][1] >> h[row][2]) || (ls >> extra))
      throw std::runtime_error("homography: expected 3 numbers on row " +
                               std::to_string(row + 1));
    ++row;
  }
  if (row != 3)
    throw std::runtime_error("homography: expected 3 rows");
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw std::runtime_error("homography: trailing data");
  return Homography(h);
}

inline Homography read_homography(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  return read_homography(in);
}

inline void write_homography(std::ostream &out, const Homography &h) {
  char buf[64];
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", h(r, c));
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
}

inline Disk keypoint_disk(const KeyPoint &kp) { return {kp.x, kp.y, kp.size}; }

//! Image of a disk under h: centre mapped, radius scaled by sqrt|det J|.
inline Disk project_region(const Disk &d, const Homography &h) {
  const auto [u, v] = h.apply(d.x, d.y);
  return {u, v, d.radius * std::sqrt(std::abs(h.jacobian_det(d.x, d.y)))};
}

struct ImageSize {
  std::size_t width = 0, height = 0;
};

inline bool inside(const ImageSize &s, double x, double y) {
  return x >= 0.0 && y >= 0.0 && x <= static_cast<double>(s.width) - 1.0 &&
         y <= static_cast<double>(s.height) - 1.0;
}

struct RegionMatch {
  std::size_t index_a = 0, index_b = 0;
  double overlap_error = 0.0;
};

struct Candidate {
  std::size_t a = 0, b = 0;
  double error = 0.0;
};

//! One-to-one matching over candidate pairs. Pairs are taken greedily in
//! ascending error (ties by index); augmenting paths then raise the count to
//! the maximum possible without dropping the criterion that every accepted
//! pair is a candidate.
inline std::vector<Candidate> match_regions(std::vector<Candidate> edges,
                                            std::size_t count_a,
                                            std::size_t count_b) {
  std::sort(edges.begin(), edges.end(), [](const Candidate &x, const Candidate &y) {
    return std::tie(x.error, x.a, x.b) < std::tie(y.error, y.a, y.b);
  });
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> mate_a(count_a, none), mate_b(count_b, none);
  std::vector<std::vector<std::size_t>> adj(count_a); // edge indices, sorted
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto &c = edges[e];
    adj[c.a].push_back(e);
    if (mate_a[c.a] == none && mate_b[c.b] == none) {
      mate_a[c.a] = e;
      mate_b[c.b] = e;
    }
  }

  std::vector<char> visited(count_b);
  // Kuhn's augmenting path search from a free A vertex.
  auto augment = [&](auto &&self, std::size_t a) -> bool {
    for (std::size_t e : adj[a]) {
      const std::size_t b = edges[e].b;
      if (visited[b])
        continue;
      visited[b] = 1;
      if (mate_b[b] == none || self(self, edges[mate_b[b]].a)) {
        mate_a[a] = e;
        mate_b[b] = e;
        return true;
      }
    }
    return false;
  };
  for (std::size_t a = 0; a < count_a; ++a) {
    if (mate_a[a] != none || adj[a].empty())
      continue;
    std::fill(visited.begin(), visited.end(), 0);
    augment(augment, a);
  }

  std::vector<Candidate> out;
  for (std::size_t a = 0; a < count_a; ++a)
    if (mate_a[a] != none)
      out.push_back(edges[mate_a[a]]);
  std::sort(out.begin(), out.end(), [](const Candidate &x, const Candidate &y) {
    return std::tie(x.error, x.a, x.b) < std::tie(y.error, y.a, y.b);
  });
  return out;
}

struct RepeatabilityResult {
  std::optional<double> score; // percent; nullopt when nothing is shared
  std::vector<RegionMatch> matches;
  std::size_t regions_a = 0; // key-points of A inside the shared part
  std::size_t regions_b = 0;
};

//! Count of corresponding regions (overlap error < threshold) relative to the
//! smaller number of regions in the part of the scene both images see.
inline RepeatabilityResult repeatability(const std::vector<KeyPoint> &kps_a,
                                         const std::vector<KeyPoint> &kps_b,
                                         const Homography &h, ImageSize size_a,
                                         ImageSize size_b, double threshold = 0.4) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("overlap threshold must be in (0,1)");
  const Homography hinv = h.inverse();

  std::vector<std::size_t> shared_a, shared_b;
  std::vector<Disk> proj_a;
  for (std::size_t i = 0; i < kps_a.size(); ++i) {
    const Disk d = project_region(keypoint_disk(kps_a[i]), h);
    if (inside(size_b, d.x, d.y)) {
      shared_a.push_back(i);
      proj_a.push_back(d);
    }
  }
  for (std::size_t j = 0; j < kps_b.size(); ++j) {
    const auto [x, y] = hinv.apply(kps_b[j].x, kps_b[j].y);
    if (inside(size_a, x, y))
      shared_b.push_back(j);
  }

  RepeatabilityResult res;
  res.regions_a = shared_a.size();
  res.regions_b = shared_b.size();
  if (shared_a.empty() || shared_b.empty())
    return res;

  std::vector<Candidate> edges;
  for (std::size_t i = 0; i < shared_a.size(); ++i) {
    const Disk &da = proj_a[i];
    for (std::size_t j = 0; j < shared_b.size(); ++j) {
      const Disk db = keypoint_disk(kps_b[shared_b[j]]);
      if (std::hypot(da.x - db.x, da.y - db.y) >= da.radius + db.radius)
        continue;
      const double err = overlap_error(da, db);
      if (err < threshold)
        edges.push_back({i, j, err});
    }
  }
  for (const auto &m : match_regions(std::move(edges), shared_a.size(), shared_b.size()))
    res.matches.push_back({shared_a[m.a], shared_b[m.b], m.error});

  res.score = 100.0 * static_cast<double>(res.matches.size()) /
              static_cast<double>(std::min(shared_a.size(), shared_b.size()));
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic fixtures

//! Smooth random scene: Gaussian blobs of both polarities over a planar
//! gradient, affinely mapped onto [0.1, 0.9] (no clipping).
inline GrayImage make_blob_image(std::uint64_t seed, std::size_t width,
                                 std::size_t height, std::size_t blobs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(width) - 1.0);
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(height) - 1.0);
  std::uniform_real_distribution<double> usig(2.5, 7.0);
  std::uniform_real_distribution<double> uamp(0.6, 1.0);
  std::uniform_real_distribution<double> ugrad(-1.0, 1.0);
  std::bernoulli_distribution polarity(0.5);

  struct Blob {
    double x, y, s, a;
  };
  std::vector<Blob> bs;
  for (std::size_t i = 0; i < blobs; ++i) {
    Blob b{ux(rng), uy(rng), usig(rng), uamp(rng)};
    if (polarity(rng))
      b.a = -b.a;
    bs.push_back(b);
  }
  const double gx = 0.3 * ugrad(rng) / static_cast<double>(width);
  const double gy = 0.3 * ugrad(rng) / static_cast<double>(height);

  GrayImage img(width, height);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double v = gx * static_cast<double>(c) + gy * static_cast<double>(r);
      for (const auto &b : bs) {
        const double dx = c - b.x, dy = r - b.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < 25.0 * b.s * b.s)
          v += b.a * std::exp(-d2 / (2.0 * b.s * b.s));
      }
      img(r, c) = v;
    }
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double mn = *lo, mx = *hi;
  for (double &v : img.data())
    v = mx > mn ? 0.1 + 0.8 * (v - mn) / (mx - mn) : 0.5;
  return img;
}

enum class TransformKind { rotation90, scale, gain_offset };

struct SynthPair {
  GrayImage a, b;
  Homography h; // maps A coordinates to B coordinates
};

struct SynthOptions {
  std::size_t width = 200, height = 200;
  std::size_t blobs = 60;
  double scale = 0.8;
  double gain = 0.6, offset = 0.1;
};

//! Deterministic textured image plus its transformed copy and ground truth.
inline SynthPair synth_pair(std::uint64_t seed, TransformKind kind,
                            const SynthOptions &opt = {}) {
  SynthPair p;
  p.a = make_blob_image(seed, opt.width, opt.height, opt.blobs);
  switch (kind) {
  case TransformKind::rotation90: {
    p.b = rotate90(p.a);
    const double w1 = static_cast<double>(opt.width) - 1.0;
    p.h = Homography({{{0, 1, 0}, {-1, 0, w1}, {0, 0, 1}}});
    break;
  }
  case TransformKind::scale: {
    const auto w = round_half_up(opt.width * opt.scale);
    const auto h = round_half_up(opt.height * opt.scale);
    p.b = resize_bicubic(p.a, w, h);
    const double sx = static_cast<double>(w) / opt.width;
    const double sy = static_cast<double>(h) / opt.height;
    p.h = Homography({{{sx, 0, 0.5 * sx - 0.5}, {0, sy, 0.5 * sy - 0.5}, {0, 0, 1}}});
    break;
  }
  case TransformKind::gain_offset: {
    p.b = p.a;
    for (double &v : p.b.data())
      v = opt.gain * v + opt.offset;
    p.h = Homography::identity();
    break;
  }
  }
  return p;
}

} // namespace srisck
