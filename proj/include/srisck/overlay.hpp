#pragma once

#include "detector.hpp"
#include "image.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace srisck {

//! Grey image with one circle of radius `size` per key-point, coloured by
//! pyramid level.
inline RgbImage render_overlay(const GrayImage &img, const std::vector<KeyPoint> &kps) {
  static constexpr std::array<std::array<double, 3>, 6> palette{{
      {1.0, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.2, 0.4, 1.0},
      {1.0, 0.9, 0.1}, {1.0, 0.2, 1.0}, {0.1, 1.0, 1.0},
  }};
  RgbImage out{img, img, img};
  const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
  auto plot = [&](long x, long y, const std::array<double, 3> &col) {
    if (x < 0 || y < 0 || x >= w || y >= h)
      return;
    out.r(y, x) = col[0];
    out.g(y, x) = col[1];
    out.b(y, x) = col[2];
  };
  for (const auto &kp : kps) {
    const auto &col = palette[(kp.level - 1) % palette.size()];
    const int steps = std::max(16, static_cast<int>(2.0 * std::numbers::pi * kp.size));
    for (int i = 0; i < steps; ++i) {
      const double t = 2.0 * std::numbers::pi * i / steps;
      plot(std::lround(kp.x + kp.size * std::cos(t)),
           std::lround(kp.y + kp.size * std::sin(t)), col);
    }
    plot(std::lround(kp.x), std::lround(kp.y), col);
  }
  return out;
}

} // namespace srisck
