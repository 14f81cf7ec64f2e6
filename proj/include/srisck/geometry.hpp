#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace srisck {

struct Disk {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
};

inline double disk_area(const Disk &d) {
  return std::numbers::pi * d.radius * d.radius;
}

//! Area of the lens formed by two disks.
inline double intersection_area(const Disk &a, const Disk &b) {
  const double d = std::hypot(a.x - b.x, a.y - b.y);
  const double r0 = a.radius, r1 = b.radius;
  if (d >= r0 + r1)
    return 0.0;
  if (d <= std::abs(r0 - r1)) {
    const double r = std::min(r0, r1);
    return std::numbers::pi * r * r;
  }
  const double c0 = std::clamp((d * d + r0 * r0 - r1 * r1) / (2 * d * r0), -1.0, 1.0);
  const double c1 = std::clamp((d * d + r1 * r1 - r0 * r0) / (2 * d * r1), -1.0, 1.0);
  const double k = (-d + r0 + r1) * (d + r0 - r1) * (d - r0 + r1) * (d + r0 + r1);
  return r0 * r0 * std::acos(c0) + r1 * r1 * std::acos(c1) -
         0.5 * std::sqrt(std::max(0.0, k));
}

//! 1 - |A n B| / |A u B|.
inline double overlap_error(const Disk &a, const Disk &b) {
  const double inter = intersection_area(a, b);
  const double uni = disk_area(a) + disk_area(b) - inter;
  return std::clamp(1.0 - inter / uni, 0.0, 1.0);
}

//! |A n B| relative to the smaller disk.
inline double overlap_fraction_of_smaller(const Disk &a, const Disk &b) {
  const double inter = intersection_area(a, b);
  return inter / std::min(disk_area(a), disk_area(b));
}

} // namespace srisck
