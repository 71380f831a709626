#pragma once

#include <string>
#include <variant>
#include <vector>

#include "sphpursuit/geometry.hpp"
#include "sphpursuit/harmonics.hpp"

namespace sphpursuit {

/// Real SH coefficients g_{l,m}, 0 <= l <= L, stored degree-major.
struct SpectralCoeffs {
  int L = 0;
  std::vector<double> table;

  SpectralCoeffs() : table(1, 0.0) {}
  explicit SpectralCoeffs(int bandlimit) : L(bandlimit), table(sh_count(bandlimit), 0.0) {}

  double operator[](ShIndex idx) const { return idx.n <= L ? table[idx.linear()] : 0.0; }
  double& at(ShIndex idx) { return table.at(idx.linear()); }

  friend bool operator==(const SpectralCoeffs&, const SpectralCoeffs&) = default;
};

enum class TrialClass { SH, SL, APK, APW };

struct ShElement {
  ShIndex idx;
  friend bool operator==(const ShElement&, const ShElement&) = default;
};

/// Member k (1-based, sorted by concentration) of the band-limit-L Slepian
/// basis for a cap, with its rotated coefficients.
struct SlepianElement {
  CapRegion region;
  int k = 1;
  int L = 0;
  SpectralCoeffs coeffs;
  friend bool operator==(const SlepianElement&, const SlepianElement&) = default;
};

/// Abel-Poisson kernel K(x, .).
struct ApkElement {
  BallPoint x;
  bool normalized = true;
  friend bool operator==(const ApkElement&, const ApkElement&) = default;
};

/// Abel-Poisson wavelet W(x, .) = K(x, .) - K(|x| x, .).
struct ApwElement {
  BallPoint x;
  bool normalized = true;
  friend bool operator==(const ApwElement&, const ApwElement&) = default;
};

using DictionaryElement = std::variant<ShElement, SlepianElement, ApkElement, ApwElement>;

TrialClass trial_class(const DictionaryElement& e);
std::string to_string(TrialClass c);

/// Sobolev penalty with degree weights (n + 0.5)^4. The truncation and tail
/// tolerance only govern the series route.
struct PenaltyNorm {
  int truncation = 300;
  double tail_tolerance = 1e-12;

  static double weight(int n) {
    const double h = n + 0.5;
    return h * h * h * h;
  }
};

/// Unnormalized kernel and wavelet values; x.r() < 1 is guaranteed by BallPoint.
double eval_apk(const BallPoint& x, const SurfacePoint& p);
double eval_apw(const BallPoint& x, const SurfacePoint& p);

/// Surface value of any element (normalized kernels divided by their norm).
double evaluate(const DictionaryElement& e, const SurfacePoint& p);

/// <e, Y_idx> in L2 of the sphere.
double fourier_coeff(const DictionaryElement& e, ShIndex idx);

double l2_norm(const DictionaryElement& e);

/// Sobolev inner product via exact closed forms (no truncation).
double inner_sobolev(const DictionaryElement& a, const DictionaryElement& b);
inline double sobolev_norm_sq(const DictionaryElement& e) { return inner_sobolev(e, e); }

/// Same inner product by direct summation over degrees. Kernel pairs are
/// summed until a geometric tail bound certifies pen.tail_tolerance (relative
/// to the absolute partial sum); throws NonConvergence past pen.truncation.
double inner_sobolev_series(const DictionaryElement& a, const DictionaryElement& b,
                            const PenaltyNorm& pen = {});

/// Upward continuation to radius sigma > 1 evaluated at sigma * p.
double upward_eval(const DictionaryElement& e, double sigma, const SurfacePoint& p);

/// Gradient in Cartesian x of (1/sigma) K(x/sigma, p) and of the analogous
/// upward-continued wavelet, both unnormalized.
Vec3 grad_x_apk(const BallPoint& x, const SurfacePoint& p, double sigma = 1.0);
Vec3 grad_x_apw(const BallPoint& x, const SurfacePoint& p, double sigma = 1.0);

/// Per-degree radial profile of a kernel: r^n (APK) or r^n - r^2n (APW).
double kernel_profile(TrialClass kind, double r, int n);

/// Unnormalized L2 norm of a kernel or wavelet of radius r.
double kernel_l2_norm(TrialClass kind, double r);

}  // namespace sphpursuit
