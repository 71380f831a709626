#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sphpursuit/dual.hpp"
#include "sphpursuit/geometry.hpp"

namespace sphpursuit {

/// Degree n >= 0 and order j in [-n, n]. Order j <= 0 carries cos(|j| phi),
/// j > 0 carries sin(j phi).
struct ShIndex {
  int n = 0;
  int j = 0;

  /// Position in the degree-major table: n^2 + n + j.
  int linear() const { return n * n + n + j; }
  static ShIndex from_linear(int k);
  bool valid() const { return n >= 0 && j >= -n && j <= n; }

  friend bool operator==(const ShIndex&, const ShIndex&) = default;
};

inline int sh_count(int max_degree) { return (max_degree + 1) * (max_degree + 1); }

/// Coefficients of the fixed-order, ascending-degree recursion for the
/// L2[-1,1]-normalized associated Legendre functions divided by
/// (1 - t^2)^(m/2). Shared read-only across threads.
class LegendreRecursion {
 public:
  explicit LegendreRecursion(int max_degree);
  int max_degree() const { return max_degree_; }

  /// All real fully normalized spherical harmonics up to max_degree at the
  /// unit vector u, written degree-major into out[n^2 + n + j]. T is double
  /// or a Dual; no trigonometric calls are made, so derivatives stay
  /// polynomial in the components of u.
  template <class T>
  void evaluate(const T& ux, const T& uy, const T& uz, std::span<T> out) const;

 private:
  int max_degree_;
  std::vector<double> diag_;   // sqrt((2m+1)/(2m))
  std::vector<double> sub_;    // sqrt(2m+3)
  std::vector<double> a_, b_;  // three-term coefficients, index n(n+1)/2 + m
};

/// Shared recursion for degrees up to max_degree (cached, thread-safe).
const LegendreRecursion& legendre_recursion(int max_degree);

double eval_sh(ShIndex idx, const SurfacePoint& p);

/// All harmonics of degree <= max_degree at p, degree-major.
std::vector<double> eval_sh_all(int max_degree, const SurfacePoint& p);

// ---------------------------------------------------------------------------

template <class T>
void LegendreRecursion::evaluate(const T& ux, const T& uy, const T& uz, std::span<T> out) const {
  const int nmax = max_degree_;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  const double inv_sqrt_pi = 1.0 / std::sqrt(3.14159265358979323846);
  // (ux + i uy)^m carries the longitude dependence times sin(theta)^m.
  T cm = T(1.0), sm = T(0.0);
  double pmm = std::sqrt(0.5);
  for (int m = 0; m <= nmax; ++m) {
    if (m > 0) {
      T c_next = cm * ux - sm * uy;
      T s_next = cm * uy + sm * ux;
      cm = c_next;
      sm = s_next;
      pmm *= diag_[m];
    }
    T p_prev2 = T(0.0);
    T p_prev = T(pmm);
    for (int n = m; n <= nmax; ++n) {
      T p;
      if (n == m) {
        p = p_prev;
      } else if (n == m + 1) {
        p = sub_[m] * uz * p_prev;
      } else {
        const std::size_t k = static_cast<std::size_t>(n) * (n + 1) / 2 + m;
        p = a_[k] * (uz * p_prev - b_[k] * p_prev2);
      }
      if (n > m) {
        p_prev2 = p_prev;
        p_prev = p;
      }
      if (m == 0) {
        out[n * n + n] = p * inv_sqrt_2pi;
      } else {
        out[n * n + n - m] = p * cm * inv_sqrt_pi;
        out[n * n + n + m] = p * sm * inv_sqrt_pi;
      }
    }
  }
}

}  // namespace sphpursuit
