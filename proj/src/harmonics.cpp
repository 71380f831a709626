#include "sphpursuit/harmonics.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace sphpursuit {

ShIndex ShIndex::from_linear(int k) {
  if (k < 0) throw std::invalid_argument("negative harmonic index");
  int n = static_cast<int>(std::sqrt(static_cast<double>(k)));
  while (n * n > k) --n;
  while ((n + 1) * (n + 1) <= k) ++n;
  return {n, k - n * n - n};
}

LegendreRecursion::LegendreRecursion(int max_degree) : max_degree_(max_degree) {
  if (max_degree < 0) throw std::invalid_argument("negative maximal degree");
  diag_.assign(max_degree + 1, 0.0);
  sub_.assign(max_degree + 1, 0.0);
  for (int m = 1; m <= max_degree; ++m) diag_[m] = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
  for (int m = 0; m <= max_degree; ++m) sub_[m] = std::sqrt(2.0 * m + 3.0);
  const std::size_t size = static_cast<std::size_t>(max_degree + 1) * (max_degree + 2) / 2;
  a_.assign(size, 0.0);
  b_.assign(size, 0.0);
  for (int n = 2; n <= max_degree; ++n) {
    for (int m = 0; m <= n - 2; ++m) {
      const std::size_t k = static_cast<std::size_t>(n) * (n + 1) / 2 + m;
      const double nn = n, mm = m;
      a_[k] = std::sqrt((4.0 * nn * nn - 1.0) / (nn * nn - mm * mm));
      b_[k] = std::sqrt(((nn - 1.0) * (nn - 1.0) - mm * mm) / (4.0 * (nn - 1.0) * (nn - 1.0) - 1.0));
    }
  }
}

const LegendreRecursion& legendre_recursion(int max_degree) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<LegendreRecursion>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[max_degree];
  if (!slot) slot = std::make_unique<LegendreRecursion>(max_degree);
  return *slot;
}

double eval_sh(ShIndex idx, const SurfacePoint& p) {
  if (!idx.valid()) throw std::invalid_argument("invalid spherical harmonic index");
  std::vector<double> all = eval_sh_all(idx.n, p);
  return all[idx.linear()];
}

std::vector<double> eval_sh_all(int max_degree, const SurfacePoint& p) {
  std::vector<double> out(sh_count(max_degree));
  const auto& u = p.cart();
  legendre_recursion(max_degree).evaluate<double>(u[0], u[1], u[2], out);
  return out;
}

}  // namespace sphpursuit
