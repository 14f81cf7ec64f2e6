#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace srisck {

//! Single-channel floating-point image stored row-major.
//! Loaded and converted images hold intensities in [0,1]; resampled pyramid
//! levels may overshoot that range slightly (bicubic ringing is not clipped so
//! that intensity transforms a*I+b commute with resampling).
class GrayImage {
public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0)
      : width_(width), height_(height), data_(width * height, fill) {}
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_)
      throw std::invalid_argument("GrayImage: data length != width*height");
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("GrayImage: non-finite intensity");
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool empty() const { return data_.empty(); }

  double &operator()(std::size_t row, std::size_t col) {
    return data_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const {
    return data_[row * width_ + col];
  }

  //! Edge-replicating access for signed coordinates.
  double clamped(long row, long col) const {
    row = std::clamp(row, 0L, static_cast<long>(height_) - 1);
    col = std::clamp(col, 0L, static_cast<long>(width_) - 1);
    return data_[static_cast<std::size_t>(row) * width_ +
                 static_cast<std::size_t>(col)];
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const GrayImage &) const = default;

private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

//! Three-channel image, channels stored as separate planes.
struct RgbImage {
  GrayImage r, g, b;

  std::size_t width() const { return r.width(); }
  std::size_t height() const { return r.height(); }
};

//! Throws if any intensity lies outside [0,1].
inline void check_unit_range(const GrayImage &img) {
  for (double v : img.data())
    if (v < 0.0 || v > 1.0)
      throw std::invalid_argument("intensity outside [0,1]: " +
                                  std::to_string(v));
}

inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

inline GrayImage to_grayscale(const RgbImage &rgb,
                              std::array<double, 3> weights = kLumaWeights) {
  const auto w = rgb.r.width(), h = rgb.r.height();
  if (rgb.g.width() != w || rgb.g.height() != h || rgb.b.width() != w ||
      rgb.b.height() != h)
    throw std::invalid_argument("to_grayscale: channel dimensions differ");
  double sum = 0.0;
  for (double x : weights) {
    if (x < 0.0)
      throw std::invalid_argument("to_grayscale: negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("to_grayscale: weights must sum to 1");

  GrayImage out(w, h);
  auto r = rgb.r.data(), g = rgb.g.data(), b = rgb.b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i)
    o[i] = std::clamp(weights[0] * r[i] + weights[1] * g[i] + weights[2] * b[i],
                      0.0, 1.0);
  return out;
}

//! Normalized 1-D Gaussian taps on [-ceil(3 sigma), ceil(3 sigma)].
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 0.0)
    throw std::invalid_argument("gaussian_kernel: negative sigma");
  if (sigma == 0.0)
    return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double &v : k)
    v /= sum;
  return k;
}

//! Separable Gaussian convolution with edge replication. sigma == 0 is the
//! identity.
inline GrayImage gaussian_blur(const GrayImage &img, double sigma) {
  if (sigma < 0.0)
    throw std::invalid_argument("gaussian_blur: negative sigma");
  if (sigma == 0.0 || img.empty())
    return img;
  const auto k = gaussian_kernel(sigma);
  const long radius = static_cast<long>(k.size() / 2);
  const long w = static_cast<long>(img.width());
  const long h = static_cast<long>(img.height());

  GrayImage tmp(img.width(), img.height());
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i)
        acc += k[i + radius] * img.clamped(r, c + i);
      tmp(r, c) = acc;
    }
  GrayImage out(img.width(), img.height());
  for (long r = 0; r < h; ++r)
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long i = -radius; i <= radius; ++i)
        acc += k[i + radius] * tmp.clamped(r + i, c);
      out(r, c) = acc;
    }
  return out;
}

namespace detail {

// Keys cubic convolution kernel, a = -0.5.
inline double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t < 1.0)
    return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0)
    return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct CubicTaps {
  long first;
  std::array<double, 4> w;
};

// Pixel-centre aligned source position for destination index i.
inline CubicTaps cubic_taps(std::size_t i, double ratio) {
  const double src = (static_cast<double>(i) + 0.5) * ratio - 0.5;
  const double base = std::floor(src);
  const double frac = src - base;
  CubicTaps t{static_cast<long>(base) - 1, {}};
  for (int j = 0; j < 4; ++j)
    t.w[j] = cubic_weight(frac - (j - 1));
  return t;
}

} // namespace detail

//! Bicubic resampling to (width, height). Pixel centres are aligned so that
//! destination coordinate x maps to source (x + 0.5) * src_w / width - 0.5.
inline GrayImage resize_bicubic(const GrayImage &img, std::size_t width,
                                std::size_t height) {
  if (img.empty() || width == 0 || height == 0)
    throw std::invalid_argument("resize_bicubic: empty image or target");
  const double rx = static_cast<double>(img.width()) / width;
  const double ry = static_cast<double>(img.height()) / height;

  std::vector<detail::CubicTaps> xt(width), yt(height);
  for (std::size_t i = 0; i < width; ++i)
    xt[i] = detail::cubic_taps(i, rx);
  for (std::size_t i = 0; i < height; ++i)
    yt[i] = detail::cubic_taps(i, ry);

  GrayImage tmp(width, img.height());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j)
        acc += xt[c].w[j] * img.clamped(static_cast<long>(r), xt[c].first + j);
      tmp(r, c) = acc;
    }
  GrayImage out(width, height);
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j)
        acc += yt[r].w[j] * tmp.clamped(yt[r].first + j, static_cast<long>(c));
      out(r, c) = acc;
    }
  return out;
}

//! Round half up, used for pyramid level dimensions.
inline std::size_t round_half_up(double v) {
  return static_cast<std::size_t>(std::floor(v + 0.5));
}

struct Pyramid {
  std::vector<GrayImage> levels; // levels[0] is the input-sized base
  double scale_factor = 0.8;

  std::size_t size() const { return levels.size(); }

  //! Maps a level-l pixel coordinate (0-based level index) to the base
  //! frame, per axis, using the actual dimension ratio.
  double to_base_x(std::size_t level, double x) const {
    const double ratio = static_cast<double>(levels.front().width()) /
                         static_cast<double>(levels[level].width());
    return (x + 0.5) * ratio - 0.5;
  }
  double to_base_y(std::size_t level, double y) const {
    const double ratio = static_cast<double>(levels.front().height()) /
                         static_cast<double>(levels[level].height());
    return (y + 0.5) * ratio - 0.5;
  }
};

//! Dimensions of every pyramid level for a width x height input.
inline std::vector<std::array<std::size_t, 2>>
pyramid_dims(std::size_t width, std::size_t height, double sf,
             std::size_t block) {
  if (!(sf > 0.0 && sf < 1.0))
    throw std::invalid_argument("pyramid: scale factor must be in (0,1)");
  if (std::min(width, height) < block)
    throw std::invalid_argument("pyramid: image smaller than block size");
  std::vector<std::array<std::size_t, 2>> dims{{width, height}};
  for (;;) {
    const auto [w, h] = dims.back();
    const auto nw = round_half_up(static_cast<double>(w) * sf);
    const auto nh = round_half_up(static_cast<double>(h) * sf);
    if (std::min(nw, nh) < block || (nw == w && nh == h))
      break;
    dims.push_back({nw, nh});
  }
  return dims;
}

//! Repeated bicubic downscaling by sf until the next level would fall below
//! the block size. Levels are not blurred here.
inline Pyramid build_pyramid(const GrayImage &img, double sf,
                             std::size_t block) {
  const auto dims = pyramid_dims(img.width(), img.height(), sf, block);
  Pyramid p;
  p.scale_factor = sf;
  p.levels.reserve(dims.size());
  p.levels.push_back(img);
  for (std::size_t l = 1; l < dims.size(); ++l)
    p.levels.push_back(resize_bicubic(p.levels.back(), dims[l][0], dims[l][1]));
  return p;
}

//! Exact 90-degree counter-clockwise rotation (no resampling).
inline GrayImage rotate90(const GrayImage &img) {
  GrayImage out(img.height(), img.width());
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c < img.width(); ++c)
      out(img.width() - 1 - c, r) = img(r, c);
  return out;
}

} // namespace srisck
