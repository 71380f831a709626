#include "sphpursuit/trial_functions.hpp"

#include <cmath>
#include <stdexcept>

#include "sphpursuit/detail/kernel_eval.hpp"
#include "sphpursuit/detail/kernel_sums.hpp"
#include "sphpursuit/error.hpp"

namespace sphpursuit {

namespace {

using detail::kInvFourPi;

using detail::apk_at;
using detail::scaled;

Vec3 apk_grad_at(const Vec3& y, const Vec3& p) {
  Vec3 g;
  apk_at(y, p, g);
  return g;
}

detail::KernelCandidate<double> as_candidate(const DictionaryElement& e) {
  if (const auto* k = std::get_if<ApkElement>(&e)) return {TrialClass::APK, k->x.cart(), k->normalized};
  const auto& w = std::get<ApwElement>(e);
  return {TrialClass::APW, w.x.cart(), w.normalized};
}

bool is_kernel(const DictionaryElement& e) {
  return std::holds_alternative<ApkElement>(e) || std::holds_alternative<ApwElement>(e);
}

struct KernelView {
  TrialClass kind;
  const BallPoint* x;
  bool normalized;
};

KernelView kernel_view(const DictionaryElement& e) {
  if (const auto* k = std::get_if<ApkElement>(&e)) return {TrialClass::APK, &k->x, k->normalized};
  const auto& w = std::get<ApwElement>(e);
  return {TrialClass::APW, &w.x, w.normalized};
}

/// Continuation to any sigma >= 1 (sigma = 1 is the surface value).
double continued(const DictionaryElement& e, double sigma, const SurfacePoint& p);

double kernel_scale(const KernelView& k) {
  return k.normalized ? 1.0 / kernel_l2_norm(k.kind, k.x->r()) : 1.0;
}

}  // namespace

TrialClass trial_class(const DictionaryElement& e) {
  switch (e.index()) {
    case 0: return TrialClass::SH;
    case 1: return TrialClass::SL;
    case 2: return TrialClass::APK;
    default: return TrialClass::APW;
  }
}

std::string to_string(TrialClass c) {
  switch (c) {
    case TrialClass::SH: return "SH";
    case TrialClass::SL: return "SL";
    case TrialClass::APK: return "APK";
    case TrialClass::APW: return "APW";
  }
  return "?";
}

double kernel_profile(TrialClass kind, double r, int n) {
  const double rn = std::pow(r, n);
  if (kind == TrialClass::APK) return rn;
  if (kind == TrialClass::APW) return rn - rn * rn;
  throw std::invalid_argument("not a kernel class");
}

double kernel_l2_norm(TrialClass kind, double r) { return detail::kernel_l2_norm(kind, r); }

double eval_apk(const BallPoint& x, const SurfacePoint& p) { return apk_at(x.cart(), p.cart()); }

double eval_apw(const BallPoint& x, const SurfacePoint& p) {
  return eval_apk(x, p) - eval_apk(BallPoint(x.r() * x.r(), x.phi(), x.t()), p);
}

double evaluate(const DictionaryElement& e, const SurfacePoint& p) { return continued(e, 1.0, p); }

double fourier_coeff(const DictionaryElement& e, ShIndex idx) {
  if (!idx.valid()) throw std::invalid_argument("invalid spherical harmonic index");
  if (const auto* sh = std::get_if<ShElement>(&e)) return sh->idx == idx ? 1.0 : 0.0;
  if (const auto* sl = std::get_if<SlepianElement>(&e)) return sl->coeffs[idx];
  const KernelView k = kernel_view(e);
  const double y = eval_sh(idx, k.x->direction());
  return kernel_profile(k.kind, k.x->r(), idx.n) * y * kernel_scale(k);
}

double l2_norm(const DictionaryElement& e) {
  if (std::holds_alternative<ShElement>(e)) return 1.0;
  if (const auto* sl = std::get_if<SlepianElement>(&e)) {
    double s = 0.0;
    for (double g : sl->coeffs.table) s += g * g;
    return std::sqrt(s);
  }
  const KernelView k = kernel_view(e);
  return k.normalized ? 1.0 : kernel_l2_norm(k.kind, k.x->r());
}

double inner_sobolev(const DictionaryElement& a, const DictionaryElement& b) {
  if (is_kernel(b)) return detail::sobolev_with_candidate(a, as_candidate(b));
  if (is_kernel(a)) return detail::sobolev_with_candidate(b, as_candidate(a));
  // Both band-limited.
  if (const auto* sa = std::get_if<ShElement>(&a)) {
    if (const auto* sb = std::get_if<ShElement>(&b))
      return sa->idx == sb->idx ? PenaltyNorm::weight(sa->idx.n) : 0.0;
    return PenaltyNorm::weight(sa->idx.n) * std::get<SlepianElement>(b).coeffs[sa->idx];
  }
  const auto& la = std::get<SlepianElement>(a);
  if (const auto* sb = std::get_if<ShElement>(&b)) return PenaltyNorm::weight(sb->idx.n) * la.coeffs[sb->idx];
  const auto& lb = std::get<SlepianElement>(b);
  const int L = std::min(la.L, lb.L);
  double acc = 0.0;
  for (int n = 0; n <= L; ++n) {
    double deg = 0.0;
    for (int j = -n; j <= n; ++j) deg += la.coeffs[{n, j}] * lb.coeffs[{n, j}];
    acc += PenaltyNorm::weight(n) * deg;
  }
  return acc;
}

double inner_sobolev_series(const DictionaryElement& a, const DictionaryElement& b, const PenaltyNorm& pen) {
  auto bandlimit = [](const DictionaryElement& e) -> int {
    if (const auto* sh = std::get_if<ShElement>(&e)) return sh->idx.n;
    if (const auto* sl = std::get_if<SlepianElement>(&e)) return sl->L;
    return -1;
  };
  const int la = bandlimit(a), lb = bandlimit(b);
  if (la >= 0 || lb >= 0) {
    const int L = (la >= 0 && lb >= 0) ? std::min(la, lb) : std::max(la, lb);
    double acc = 0.0;
    for (int n = 0; n <= L; ++n) {
      double deg = 0.0;
      for (int j = -n; j <= n; ++j) deg += fourier_coeff(a, {n, j}) * fourier_coeff(b, {n, j});
      acc += PenaltyNorm::weight(n) * deg;
    }
    return acc;
  }
  const KernelView ka = kernel_view(a), kb = kernel_view(b);
  const double r1 = ka.x->r(), r2 = kb.x->r();
  const double scale = kernel_scale(ka) * kernel_scale(kb);
  const double s = dot(ka.x->direction().cart(), kb.x->direction().cart());
  const double q = r1 * r2;
  double acc = 0.0, abs_acc = 0.0;
  double p_prev = 1.0, p_cur = s;
  for (int n = 0; n <= pen.truncation; ++n) {
    double pn;
    if (n == 0) {
      pn = 1.0;
    } else if (n == 1) {
      pn = s;
    } else {
      pn = ((2.0 * n - 1.0) * s * p_cur - (n - 1.0) * p_prev) / n;
      p_prev = p_cur;
      p_cur = pn;
    }
    const double w = PenaltyNorm::weight(n) * (2.0 * n + 1.0) * kInvFourPi;
    const double term = w * kernel_profile(ka.kind, r1, n) * kernel_profile(kb.kind, r2, n) * pn * scale;
    acc += term;
    abs_acc += std::abs(term);
    // Certified tail: bound_m = 2 (m+1/2)^5 q^m / (4 pi) * scale has ratios
    // decreasing in m.
    const int m = n + 1;
    const double bound = 2.0 * std::pow(m + 0.5, 5) * std::pow(q, m) * kInvFourPi * scale;
    const double ratio = q * std::pow((m + 1.5) / (m + 0.5), 5);
    if (ratio < 1.0) {
      const double tail = bound / (1.0 - ratio);
      if (tail <= pen.tail_tolerance * abs_acc || tail == 0.0) return acc;
    }
    if (n == pen.truncation) {
      const double achieved = ratio < 1.0 ? bound / (1.0 - ratio) / abs_acc : INFINITY;
      throw NonConvergence("Sobolev series did not reach its tail tolerance within the truncation degree",
                           achieved);
    }
  }
  return acc;
}

double upward_eval(const DictionaryElement& e, double sigma, const SurfacePoint& p) {
  if (!(sigma > 1.0)) throw std::invalid_argument("upward continuation needs sigma > 1");
  return continued(e, sigma, p);
}

namespace {

double continued(const DictionaryElement& e, double sigma, const SurfacePoint& p) {
  if (const auto* sh = std::get_if<ShElement>(&e))
    return std::pow(sigma, -sh->idx.n - 1) * eval_sh(sh->idx, p);
  if (const auto* sl = std::get_if<SlepianElement>(&e)) {
    const std::vector<double> y = eval_sh_all(sl->L, p);
    double acc = 0.0;
    for (int n = 0; n <= sl->L; ++n) {
      double deg = 0.0;
      for (int j = -n; j <= n; ++j) deg += sl->coeffs.table[n * n + n + j] * y[n * n + n + j];
      acc += std::pow(sigma, -n - 1) * deg;
    }
    return acc;
  }
  const KernelView k = kernel_view(e);
  const Vec3 y = scaled(k.x->cart(), 1.0 / sigma);
  double v = apk_at(y, p.cart());
  if (k.kind == TrialClass::APW) v -= apk_at(scaled(y, k.x->r()), p.cart());
  return v / sigma * kernel_scale(k);
}

}  // namespace

Vec3 grad_x_apk(const BallPoint& x, const SurfacePoint& p, double sigma) {
  const Vec3 g = apk_grad_at(scaled(x.cart(), 1.0 / sigma), p.cart());
  return scaled(g, 1.0 / (sigma * sigma));
}

Vec3 grad_x_apw(const BallPoint& x, const SurfacePoint& p, double sigma) {
  const Vec3& xc = x.cart();
  const double r = x.r();
  Vec3 out = grad_x_apk(x, p, sigma);
  if (r == 0.0) return out;  // d(|x| x)/dx vanishes at the origin
  // Second term K(|x| x / sigma, p) / sigma; the Jacobian of z = |x| x is
  // |x| I + x x^T / |x| (symmetric).
  const Vec3 z = scaled(xc, r / sigma);
  const Vec3 gz = scaled(apk_grad_at(z, p.cart()), 1.0 / (sigma * sigma));
  const double xg = dot(xc, gz);
  for (int i = 0; i < 3; ++i) out[i] -= r * gz[i] + xc[i] * xg / r;
  return out;
}

}  // namespace sphpursuit
