#pragma once

// Closed-form spectral sums over Abel-Poisson kernels and wavelets, templated
// on the scalar so the same code yields values (double) and exact gradients
// (Dual). Everything here is an implementation detail of trial_functions and
// of the learning gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "sphpursuit/dual.hpp"
#include "sphpursuit/harmonics.hpp"
#include "sphpursuit/trial_functions.hpp"

namespace sphpursuit::detail {

inline constexpr double kInvFourPi = 1.0 / (4.0 * 3.14159265358979323846);
inline constexpr double kInvTwoPi = 1.0 / (2.0 * 3.14159265358979323846);

/// Coefficients c_i with (u d/du + 1/2)^5 = sum_i c_i u^i (d/du)^i, already
/// multiplied by i! so they act on Taylor coefficients.
inline const std::array<double, 6>& sobolev_operator_coeffs() {
  static const std::array<double, 6> coeffs = [] {
    // Stirling numbers of the second kind S(k, i), k, i <= 5.
    const double S[6][6] = {{1, 0, 0, 0, 0, 0},  {0, 1, 0, 0, 0, 0},  {0, 1, 1, 0, 0, 0},
                            {0, 1, 3, 1, 0, 0},  {0, 1, 7, 6, 1, 0},  {0, 1, 15, 25, 10, 1}};
    const double binom[6] = {1, 5, 10, 10, 5, 1};
    const double fact[6] = {1, 1, 2, 6, 24, 120};
    std::array<double, 6> c{};
    for (int i = 0; i <= 5; ++i) {
      double acc = 0.0;
      for (int k = i; k <= 5; ++k) acc += binom[k] * std::pow(0.5, 5 - k) * S[k][i];
      c[i] = acc * fact[i];
    }
    return c;
  }();
  return coeffs;
}

/// sum_n (n+1/2)^4 (2n+1)/(4 pi) u^n P_n(s), u in [0, 1). Uses
/// one_minus_s = 1 - s to keep 1 - 2us + u^2 accurate near s = 1.
template <class T>
T sobolev_kernel_sum(const T& u, const T& one_minus_s) {
  using std::sqrt;
  const T s = 1.0 - one_minus_s;
  const T h0 = (1.0 - u) * (1.0 - u) + 2.0 * u * one_minus_s;
  const T h1 = 2.0 * u - 2.0 * s;
  std::array<T, 6> g;
  g[0] = 1.0 / sqrt(h0);
  g[1] = (-0.5 * h1 * g[0]) / h0;
  for (int k = 2; k <= 5; ++k) g[k] = ((0.5 - k) * h1 * g[k - 1] + (1.0 - k) * g[k - 2]) / (k * h0);
  const auto& c = sobolev_operator_coeffs();
  T acc = c[0] * g[0];
  T upow = u;
  for (int i = 1; i <= 5; ++i) {
    acc += c[i] * upow * g[i];
    upow = upow * u;
  }
  return acc * kInvTwoPi;
}

/// sum_n (2n+1)/(4 pi) u^n P_n(s): the Abel-Poisson closed form.
template <class T>
T l2_kernel_sum(const T& u, const T& one_minus_s) {
  using std::sqrt;
  const T h0 = (1.0 - u) * (1.0 - u) + 2.0 * u * one_minus_s;
  return (1.0 - u * u) * kInvFourPi / (h0 * sqrt(h0));
}

struct ProfileTerm {
  int power;
  double sign;
};

/// Profile r^n (APK) or r^n - r^{2n} (APW) as a signed sum of (r^power)^n.
inline std::span<const ProfileTerm> profile_terms(TrialClass kind) {
  static const ProfileTerm apk[] = {{1, 1.0}};
  static const ProfileTerm apw[] = {{1, 1.0}, {2, -1.0}};
  if (kind == TrialClass::APK) return apk;
  if (kind == TrialClass::APW) return apw;
  throw std::invalid_argument("not a kernel class");
}

template <class T>
T ipow(const T& x, int p) {
  T r = T(1.0);
  for (int i = 0; i < p; ++i) r = r * x;
  return r;
}

/// Below this radius wavelet sums are formed degree by degree: the closed
/// forms cancel to O(r^2) there.
inline constexpr double kSeriesRadius = 0.25;

/// Degree-by-degree sum of sum_n w_n (2n+1)/(4pi) p1(n) p2(n) P_n(s) with
/// p(n) the kernel profiles; used for small radii only, where it converges
/// geometrically with ratio below kSeriesRadius.
template <class T>
T kernel_pair_series(TrialClass k1, const T& r1, TrialClass k2, const T& r2, const T& s, bool sobolev) {
  T acc = T(0.0);
  T p_prev = T(1.0), p_cur = s;  // P_0, P_1
  T r1n = T(1.0), r2n = T(1.0);
  for (int n = 0; n <= 400; ++n) {
    T pn;
    if (n == 0) {
      pn = T(1.0);
    } else if (n == 1) {
      pn = s;
    } else {
      pn = ((2.0 * n - 1.0) * s * p_cur - (n - 1.0) * p_prev) / double(n);
      p_prev = p_cur;
      p_cur = pn;
    }
    const T a = (k1 == TrialClass::APK) ? r1n : r1n - r1n * r1n;
    const T b = (k2 == TrialClass::APK) ? r2n : r2n - r2n * r2n;
    const double w = (sobolev ? PenaltyNorm::weight(n) : 1.0) * (2.0 * n + 1.0) * kInvFourPi;
    const T term = w * a * b * pn;
    acc += term;
    // |profile| <= r^n and |P_n| <= 1 bound every later term geometrically.
    if (n > 4 && w * std::abs(value(r1n * r2n)) < 1e-18 * std::abs(value(acc))) break;
    r1n = r1n * r1;
    r2n = r2n * r2;
  }
  return acc;
}

/// Unnormalized squared L2 norm of a kernel/wavelet of radius r.
template <class T>
T kernel_l2_norm_sq(TrialClass kind, const T& r) {
  if (kind == TrialClass::APK) {
    const T u = r * r;
    return (1.0 + u) * kInvFourPi / ((1.0 - u) * (1.0 - u));
  }
  if (value(r) < kSeriesRadius) return kernel_pair_series(kind, r, kind, r, T(1.0), false);
  auto F = [](const T& u) { return (1.0 + u) / ((1.0 - u) * (1.0 - u)); };
  const T r2 = r * r;
  return (F(r2) - 2.0 * F(r2 * r) + F(r2 * r2)) * kInvFourPi;
}

template <class T>
T kernel_l2_norm(TrialClass kind, const T& r) {
  using std::sqrt;
  return sqrt(kernel_l2_norm_sq(kind, r));
}

/// Sobolev inner product of two unnormalized kernels with radii r1, r2 and
/// directions at cosine s = 1 - one_minus_s.
template <class T>
T kernel_pair_sobolev(TrialClass k1, const T& r1, TrialClass k2, const T& r2, const T& one_minus_s) {
  const bool small = (k1 == TrialClass::APW && value(r1) < kSeriesRadius) ||
                     (k2 == TrialClass::APW && value(r2) < kSeriesRadius);
  if (small) return kernel_pair_series(k1, r1, k2, r2, 1.0 - one_minus_s, true);
  T acc = T(0.0);
  for (const auto& a : profile_terms(k1))
    for (const auto& b : profile_terms(k2))
      acc += (a.sign * b.sign) * sobolev_kernel_sum(ipow(r1, a.power) * ipow(r2, b.power), one_minus_s);
  return acc;
}

/// Kernel candidate given in Cartesian coordinates x (|x| < 1).
template <class T>
struct KernelCandidate {
  TrialClass kind;
  std::array<T, 3> x;
  bool normalized;
};

template <class T>
T norm3(const std::array<T, 3>& x) {
  using std::sqrt;
  return sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

/// 1 - cos(angle) between x and y given through their unit vectors, formed
/// from the half-chord to stay accurate for nearby directions.
template <class T>
T one_minus_cos(const std::array<T, 3>& ux, const std::array<T, 3>& uy) {
  T d = T(0.0);
  for (int i = 0; i < 3; ++i) {
    const T e = ux[i] - uy[i];
    d += e * e;
  }
  return 0.5 * d;
}

template <class T>
std::array<T, 3> unit_or_pole(const std::array<T, 3>& x, const T& r) {
  if (value(r) == 0.0) return {T(0.0), T(0.0), T(1.0)};
  return {x[0] / r, x[1] / r, x[2] / r};
}

/// Sobolev norm squared of a kernel candidate.
template <class T>
T candidate_sobolev_norm_sq(const KernelCandidate<T>& c) {
  const T r = norm3(c.x);
  T v = kernel_pair_sobolev(c.kind, r, c.kind, r, T(0.0));
  if (c.normalized) v = v / kernel_l2_norm_sq(c.kind, r);
  return v;
}

/// Sobolev inner product <other, candidate>.
template <class T>
T sobolev_with_candidate(const DictionaryElement& other, const KernelCandidate<T>& c) {
  const T r = norm3(c.x);
  const std::array<T, 3> u = unit_or_pole(c.x, r);
  T result = T(0.0);
  auto spectral = [&](int max_degree, auto&& coeff) {
    std::vector<T> y(sh_count(max_degree));
    legendre_recursion(max_degree).evaluate<T>(u[0], u[1], u[2], std::span<T>(y));
    T acc = T(0.0);
    T rn = T(1.0);
    for (int n = 0; n <= max_degree; ++n) {
      const T prof = (c.kind == TrialClass::APK) ? rn : rn - rn * rn;
      T deg = T(0.0);
      for (int j = -n; j <= n; ++j) {
        const double g = coeff(ShIndex{n, j});
        if (g != 0.0) deg += g * y[n * n + n + j];
      }
      acc += PenaltyNorm::weight(n) * prof * deg;
      rn = rn * r;
    }
    return acc;
  };
  if (const auto* sh = std::get_if<ShElement>(&other)) {
    const ShIndex idx = sh->idx;
    result = spectral(idx.n, [idx](ShIndex k) { return k == idx ? 1.0 : 0.0; });
  } else if (const auto* sl = std::get_if<SlepianElement>(&other)) {
    result = spectral(sl->L, [sl](ShIndex k) { return sl->coeffs[k]; });
  } else {
    const BallPoint* bp = nullptr;
    bool other_normalized = false;
    TrialClass other_kind;
    if (const auto* k = std::get_if<ApkElement>(&other)) {
      bp = &k->x;
      other_normalized = k->normalized;
      other_kind = TrialClass::APK;
    } else {
      const auto& w = std::get<ApwElement>(other);
      bp = &w.x;
      other_normalized = w.normalized;
      other_kind = TrialClass::APW;
    }
    const double r1 = bp->r();
    const auto& d = bp->direction().cart();
    const std::array<T, 3> u1 = {T(d[0]), T(d[1]), T(d[2])};
    const T oms = (r1 == 0.0) ? T(0.0) : one_minus_cos(u1, u);
    result = kernel_pair_sobolev(other_kind, T(r1), c.kind, r, oms);
    if (other_normalized) result = result / std::sqrt(kernel_l2_norm_sq(other_kind, r1));
  }
  if (c.normalized) result = result / kernel_l2_norm(c.kind, r);
  return result;
}

}  // namespace sphpursuit::detail
