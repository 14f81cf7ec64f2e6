#pragma once

// Multi-level sparse-coding key-point detection: per-level complexity and
// strength maps, non-maximum suppression, parabolic sub-pixel refinement,
// size assignment across levels, and cross-scale suppression.

#include "dictionary.hpp"
#include "geometry.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "parallel.hpp"
#include "sparse_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace srisck {

enum class SmNormalization { identity, multiply_by_size };
enum class SizeRule { eq3, sqrt2_over_4 };

struct DetectorConfig {
  std::size_t block_size = 21;
  double lambda1 = 0.125;
  double lambda2 = 0.375;
  double scale_factor = 0.8;
  std::optional<std::size_t> cm_lower;
  std::optional<std::size_t> cm_upper;
  std::size_t max_keypoints = 1000;
  std::size_t nms_radius = 5;
  double overlap_suppress_threshold = 0.3;
  SmNormalization sm_normalization = SmNormalization::identity;
  SizeRule size_rule = SizeRule::sqrt2_over_4;
  double blur_sigma = 0.8;   // per-level low-pass before coding
  bool smooth_sm_map = false; // optional SM pre-smoothing before NMS
  double sm_smooth_sigma = 1.0;
  ExtDct2Options dictionary{};

  void validate() const {
    if (block_size < 5 || block_size % 2 == 0)
      throw std::invalid_argument("block size must be odd and >= 5");
    if (!(scale_factor > 0.0 && scale_factor < 1.0))
      throw std::invalid_argument("scale factor must be in (0,1)");
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
      throw std::invalid_argument("lambda1 and lambda2 must be positive");
    if (cm_lower && cm_upper && *cm_lower > *cm_upper)
      throw std::invalid_argument("cm_lower > cm_upper");
    if (nms_radius < 1)
      throw std::invalid_argument("nms radius must be >= 1");
    if (!(overlap_suppress_threshold > 0.0 && overlap_suppress_threshold <= 1.0))
      throw std::invalid_argument("overlap threshold must be in (0,1]");
    if (blur_sigma < 0.0 || sm_smooth_sigma < 0.0)
      throw std::invalid_argument("negative blur sigma");
  }
};

//! 21x21 blocks, lambda = (0.125, 0.375).
inline DetectorConfig preset_sri_sck_1() { return DetectorConfig{}; }

//! 25x25 blocks, lambda = (0.0625, 0.1875).
inline DetectorConfig preset_sri_sck_2() {
  DetectorConfig c;
  c.block_size = 25;
  c.lambda1 = 0.0625;
  c.lambda2 = 0.1875;
  return c;
}

inline std::optional<DetectorConfig> preset_by_name(const std::string &name) {
  if (name == "sri-sck-1")
    return preset_sri_sck_1();
  if (name == "sri-sck-2")
    return preset_sri_sck_2();
  return std::nullopt;
}

struct KeyPoint {
  double x = 0.0; // column, base-level frame
  double y = 0.0; // row, base-level frame
  std::size_t level = 1;
  double size = 0.0;
  double sigma = 0.0;
  double sm = 0.0;
  std::size_t cm = 0;

  bool operator==(const KeyPoint &) const = default;
};

//! Strength and complexity for one pyramid level. Values within `margin` of
//! the border are undefined and stored as zero.
struct SMMap {
  std::size_t width = 0, height = 0, margin = 0;
  std::vector<double> sm;
  std::vector<std::uint32_t> cm;

  double at(std::size_t r, std::size_t c) const { return sm[r * width + c]; }
  bool defined(long r, long c) const {
    const long m = static_cast<long>(margin);
    return r >= m && c >= m && r < static_cast<long>(height) - m &&
           c < static_cast<long>(width) - m;
  }
};

//! Base size s_1 and level size s_l = s_1 / sf^(l-1); sigma = s / sqrt(2).
inline std::pair<double, double> assign_size_scale(std::size_t level,
                                                   const DetectorConfig &cfg) {
  if (level < 1)
    throw std::invalid_argument("level must be >= 1");
  const double n = static_cast<double>(cfg.block_size);
  const double s1 = cfg.size_rule == SizeRule::eq3
                        ? (n / 2.0) * std::numbers::sqrt2
                        : std::numbers::sqrt2 / 4.0 * n;
  const double s = s1 / std::pow(cfg.scale_factor, static_cast<double>(level - 1));
  return {s, s / std::numbers::sqrt2};
}

//! Vertex of the parabola through (-1, minus), (0, centre), (1, plus).
//! Degenerate or out-of-range fits give 0.
inline double subpixel_offset(double minus, double centre, double plus) {
  const double den = 4.0 * centre - 2.0 * (plus + minus);
  if (std::abs(den) < 1e-12)
    return 0.0;
  const double x = (plus - minus) / den;
  if (!(x >= -0.5 && x <= 0.5))
    return 0.0;
  return x;
}

namespace detail {

inline bool cm_in_range(std::size_t cm, const DetectorConfig &cfg) {
  return (!cfg.cm_lower || cm >= *cfg.cm_lower) &&
         (!cfg.cm_upper || cm <= *cfg.cm_upper);
}

// Masked n x n block centred at (row, col); the block must lie inside.
inline void gather_block(const GrayImage &img, const CircularMask &mask,
                         std::size_t row, std::size_t col,
                         std::vector<double> &out) {
  const std::size_t h = mask.side() / 2;
  out.clear();
  for (auto [r, c] : mask.index_map())
    out.push_back(img(row - h + r, col - h + c));
}

} // namespace detail

//! Sparse code of the block centred at (row, col) of an already filtered
//! level image; nullopt for flat blocks.
inline std::optional<SparseCode> code_block_at(const GrayImage &img,
                                               const ElasticNetSolver &solver,
                                               const CircularMask &mask,
                                               std::size_t row,
                                               std::size_t col) {
  const std::size_t h = mask.side() / 2;
  if (row < h || col < h || row + h >= img.height() || col + h >= img.width())
    throw std::out_of_range("code_block_at: block leaves the image");
  std::vector<double> buf;
  detail::gather_block(img, mask, row, col, buf);
  const auto y = normalize_block(buf);
  if (!y)
    return std::nullopt;
  return solver.solve(y->values);
}

//! Dense scan of one filtered level: every pixel whose block lies fully
//! inside the image is coded.
inline SMMap scan_level(const GrayImage &img, const ElasticNetSolver &solver,
                        const DetectorConfig &cfg, std::size_t workers = 1) {
  const std::size_t n = cfg.block_size;
  if (solver.dictionary().block_size() != n)
    throw std::invalid_argument("scan_level: dictionary block size mismatch");
  if (img.width() < n || img.height() < n)
    throw std::invalid_argument("scan_level: image smaller than block");
  const CircularMask mask(n);
  SMMap map;
  map.width = img.width();
  map.height = img.height();
  map.margin = n / 2;
  map.sm.assign(map.width * map.height, 0.0);
  map.cm.assign(map.width * map.height, 0);

  const std::size_t lo = map.margin, hi = map.height - map.margin;
  parallel_for(lo, hi, workers, [&](std::size_t r) {
    std::vector<double> buf;
    buf.reserve(mask.size());
    for (std::size_t c = map.margin; c + map.margin < map.width; ++c) {
      detail::gather_block(img, mask, r, c, buf);
      if (!normalize_in_place(buf))
        continue;
      const auto code = solver.solve(buf);
      const auto cm = complexity_measure(code);
      map.cm[r * map.width + c] = static_cast<std::uint32_t>(cm);
      if (detail::cm_in_range(cm, cfg))
        map.sm[r * map.width + c] = strength_measure(code);
    }
  });
  return map;
}

//! Gaussian smoothing of the defined region of an SM map.
inline SMMap smooth_sm_map(const SMMap &map, double sigma) {
  GrayImage img(map.width, map.height, map.sm);
  img = gaussian_blur(img, sigma);
  SMMap out = map;
  for (std::size_t r = 0; r < map.height; ++r)
    for (std::size_t c = 0; c < map.width; ++c)
      out.sm[r * map.width + c] =
          map.defined(static_cast<long>(r), static_cast<long>(c)) ? img(r, c) : 0.0;
  return out;
}

struct Peak {
  std::size_t row = 0, col = 0;
  double sm = 0.0;
  bool operator==(const Peak &) const = default;
};

//! Local maxima of a strength map within a Chebyshev window. A positive pixel
//! survives if no neighbour is larger and no earlier neighbour (row-major)
//! is equal.
inline std::vector<Peak> non_max_suppression(const SMMap &map,
                                             std::size_t radius) {
  if (radius < 1)
    throw std::invalid_argument("nms radius must be >= 1");
  std::vector<Peak> peaks;
  const long w = static_cast<long>(map.width), h = static_cast<long>(map.height);
  const long rad = static_cast<long>(radius);
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) {
      const double v = map.sm[r * w + c];
      if (!(v > 0.0))
        continue;
      bool keep = true;
      for (long rr = std::max(0L, r - rad); keep && rr <= std::min(h - 1, r + rad); ++rr)
        for (long cc = std::max(0L, c - rad); cc <= std::min(w - 1, c + rad); ++cc) {
          const double q = map.sm[rr * w + cc];
          const bool earlier = rr < r || (rr == r && cc < c);
          if (q > v || (q == v && earlier)) {
            keep = false;
            break;
          }
        }
      if (keep)
        peaks.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), v});
    }
  return peaks;
}

//! Sub-pixel (row, col) offsets of a peak; axes are refined independently and
//! neighbours outside the defined region leave that axis unrefined.
inline std::pair<double, double> refine_peak(const SMMap &map, const Peak &p) {
  const long r = static_cast<long>(p.row), c = static_cast<long>(p.col);
  double dy = 0.0, dx = 0.0;
  if (map.defined(r - 1, c) && map.defined(r + 1, c))
    dy = subpixel_offset(map.at(p.row - 1, p.col), p.sm, map.at(p.row + 1, p.col));
  if (map.defined(r, c - 1) && map.defined(r, c + 1))
    dx = subpixel_offset(map.at(p.row, p.col - 1), p.sm, map.at(p.row, p.col + 1));
  return {dy, dx};
}

inline double normalized_sm(const KeyPoint &kp, const DetectorConfig &cfg) {
  return cfg.sm_normalization == SmNormalization::multiply_by_size ? kp.sm * kp.size
                                                                   : kp.sm;
}

//! Canonical output order: normalised SM descending, then level, row, column.
inline void sort_keypoints(std::vector<KeyPoint> &kps, const DetectorConfig &cfg) {
  std::stable_sort(kps.begin(), kps.end(), [&](const KeyPoint &a, const KeyPoint &b) {
    const double na = normalized_sm(a, cfg), nb = normalized_sm(b, cfg);
    if (na != nb)
      return na > nb;
    return std::tie(a.level, a.y, a.x) < std::tie(b.level, b.y, b.x);
  });
}

//! Removes every key-point that overlaps (relative to the smaller disk, radius
//! = size) a key-point with strictly larger normalised SM, then sorts and
//! truncates to max_keypoints.
inline std::vector<KeyPoint> cross_scale_suppress(std::vector<KeyPoint> candidates,
                                                  const DetectorConfig &cfg) {
  sort_keypoints(candidates, cfg);
  const std::size_t count = candidates.size();
  std::vector<double> nsm(count);
  double max_size = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    nsm[i] = normalized_sm(candidates[i], cfg);
    max_size = std::max(max_size, candidates[i].size);
  }
  std::vector<KeyPoint> kept;
  for (std::size_t i = 0; i < count; ++i) {
    const auto &a = candidates[i];
    const Disk da{a.x, a.y, a.size};
    bool suppressed = false;
    // Sorted descending, so only earlier entries can be stronger.
    for (std::size_t j = 0; j < i && nsm[j] > nsm[i]; ++j) {
      const auto &b = candidates[j];
      if (std::abs(a.x - b.x) >= a.size + b.size ||
          std::abs(a.y - b.y) >= a.size + b.size)
        continue;
      if (overlap_fraction_of_smaller(da, Disk{b.x, b.y, b.size}) >=
          cfg.overlap_suppress_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed)
      kept.push_back(a);
  }
  if (kept.size() > cfg.max_keypoints)
    kept.resize(cfg.max_keypoints);
  return kept;
}

//! Owns the dictionary and solver for one configuration.
class Detector {
public:
  explicit Detector(DetectorConfig cfg)
      : cfg_((cfg.validate(), cfg)),
        ed_(make_ext_dct2(cfg_.block_size, cfg_.dictionary)),
        solver_(ed_, ElasticNetParams{cfg_.lambda1, cfg_.lambda2}) {}

  Detector(DetectorConfig cfg, ExtendedDictionary ed)
      : cfg_((cfg.validate(), cfg)), ed_(std::move(ed)),
        solver_(ed_, ElasticNetParams{cfg_.lambda1, cfg_.lambda2}) {
    if (ed_.block_size() != cfg_.block_size)
      throw std::invalid_argument("dictionary block size != config block size");
  }

  Detector(const Detector &) = delete;
  Detector &operator=(const Detector &) = delete;

  const DetectorConfig &config() const { return cfg_; }
  const ExtendedDictionary &dictionary() const { return ed_; }
  const ElasticNetSolver &solver() const { return solver_; }

  //! Filtered level images, as coded by the scan.
  std::vector<GrayImage> prepare_levels(const GrayImage &img) const {
    const auto pyr = build_pyramid(img, cfg_.scale_factor, cfg_.block_size);
    std::vector<GrayImage> out;
    out.reserve(pyr.size());
    for (const auto &lvl : pyr.levels)
      out.push_back(gaussian_blur(lvl, cfg_.blur_sigma));
    return out;
  }

  //! Key-points of every level before cross-scale suppression.
  std::vector<KeyPoint> candidates(const GrayImage &img,
                                   std::size_t workers = default_worker_count()) const {
    const auto pyr = build_pyramid(img, cfg_.scale_factor, cfg_.block_size);
    std::vector<KeyPoint> out;
    for (std::size_t l = 0; l < pyr.size(); ++l) {
      const auto level_img = gaussian_blur(pyr.levels[l], cfg_.blur_sigma);
      auto map = scan_level(level_img, solver_, cfg_, workers);
      if (cfg_.smooth_sm_map)
        map = smooth_sm_map(map, cfg_.sm_smooth_sigma);
      const auto [s, sigma] = assign_size_scale(l + 1, cfg_);
      for (const auto &p : non_max_suppression(map, cfg_.nms_radius)) {
        const auto [dy, dx] = refine_peak(map, p);
        KeyPoint kp;
        kp.x = pyr.to_base_x(l, static_cast<double>(p.col) + dx);
        kp.y = pyr.to_base_y(l, static_cast<double>(p.row) + dy);
        kp.level = l + 1;
        kp.size = s;
        kp.sigma = sigma;
        kp.sm = p.sm;
        kp.cm = map.cm[p.row * map.width + p.col];
        out.push_back(kp);
      }
    }
    return out;
  }

  std::vector<KeyPoint> detect(const GrayImage &img,
                               std::size_t workers = default_worker_count()) const {
    return cross_scale_suppress(candidates(img, workers), cfg_);
  }

  std::vector<KeyPoint> detect(const AnyImage &img,
                               std::size_t workers = default_worker_count()) const {
    return detect(as_gray(img), workers);
  }

private:
  DetectorConfig cfg_;
  ExtendedDictionary ed_;
  ElasticNetSolver solver_;
};

//! Full pipeline with an explicit dictionary.
inline std::vector<KeyPoint> detect(const GrayImage &img, const ExtendedDictionary &ed,
                                    const DetectorConfig &cfg,
                                    std::size_t workers = default_worker_count()) {
  return Detector(cfg, ed).detect(img, workers);
}

} // namespace srisck
