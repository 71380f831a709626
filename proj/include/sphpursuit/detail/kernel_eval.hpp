#pragma once

#include <cmath>

#include "sphpursuit/geometry.hpp"

namespace sphpursuit::detail {

inline constexpr double kInvFourPiEval = 1.0 / (4.0 * 3.14159265358979323846);

/// K(y, p) for |y| < 1 and a unit vector p; the distance is formed directly
/// so that y close to p keeps full relative accuracy.
inline double apk_at(const Vec3& y, const Vec3& p) {
  double h = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = y[i] - p[i];
    h += d * d;
  }
  return (1.0 - dot(y, y)) * kInvFourPiEval / (h * std::sqrt(h));
}

/// Value and y-gradient of K(y, p).
inline double apk_at(const Vec3& y, const Vec3& p, Vec3& grad) {
  double h = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double d = y[i] - p[i];
    h += d * d;
  }
  const double q = 1.0 - dot(y, y);
  const double h32 = h * std::sqrt(h);
  const double h52 = h32 * h;
  for (int i = 0; i < 3; ++i) grad[i] = kInvFourPiEval * (-2.0 * y[i] / h32 - 3.0 * q * (y[i] - p[i]) / h52);
  return q * kInvFourPiEval / h32;
}

inline Vec3 scaled(const Vec3& v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

}  // namespace sphpursuit::detail
