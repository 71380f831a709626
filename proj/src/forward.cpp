#include "sphpursuit/forward.hpp"

#include <cmath>
#include <stdexcept>

#include "sphpursuit/detail/kernel_eval.hpp"
#include "sphpursuit/detail/kernel_sums.hpp"
#include "sphpursuit/dual.hpp"
#include "sphpursuit/harmonics.hpp"

namespace sphpursuit {

ForwardModel::ForwardModel(Grid grid, double sigma, PenaltyNorm pen)
    : grid_(std::move(grid)), sigma_(sigma), pen_(pen) {
  if (!(sigma >= 1.0)) throw std::invalid_argument("satellite radius sigma must be >= 1");
  if (grid_.size() == 0) throw std::invalid_argument("forward model needs at least one grid point");
  points_.resize(static_cast<Eigen::Index>(grid_.size()), 3);
  for (std::size_t i = 0; i < grid_.size(); ++i)
    for (int k = 0; k < 3; ++k) points_(static_cast<Eigen::Index>(i), k) = grid_.points[i].cart()[k];
}

std::shared_ptr<const Eigen::MatrixXd> ForwardModel::sh_table(int max_degree) const {
  std::lock_guard lock(table_mutex_);
  if (table_ && table_->cols() >= sh_count(max_degree)) return table_;
  const Eigen::Index rows = static_cast<Eigen::Index>(size());
  auto table = std::make_shared<Eigen::MatrixXd>(rows, sh_count(max_degree));
  const LegendreRecursion& rec = legendre_recursion(max_degree);
  std::vector<double> damp(max_degree + 1);
  for (int n = 0; n <= max_degree; ++n) damp[n] = std::pow(sigma_, -n - 1);
#pragma omp parallel
  {
    std::vector<double> y(sh_count(max_degree));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) {
      rec.evaluate<double>(points_(i, 0), points_(i, 1), points_(i, 2), y);
      for (int n = 0; n <= max_degree; ++n)
        for (int k = n * n; k < (n + 1) * (n + 1); ++k) (*table)(i, k) = damp[n] * y[k];
    }
  }
  table_ = table;
  return table_;
}

Eigen::VectorXd ForwardModel::kernel_column(TrialClass kind, const Vec3& x, bool normalized,
                                            Eigen::MatrixXd* dcol) const {
  if (kind != TrialClass::APK && kind != TrialClass::APW) throw std::invalid_argument("not a kernel class");
  const double r = std::sqrt(dot(x, x));
  if (!(r < 1.0)) throw std::invalid_argument("kernel centre must lie in the open unit ball");
  const Eigen::Index rows = static_cast<Eigen::Index>(size());
  const bool wavelet = kind == TrialClass::APW;
  const double inv_sigma = 1.0 / sigma_;
  const Vec3 y1 = detail::scaled(x, inv_sigma);
  const Vec3 y2 = detail::scaled(x, r * inv_sigma);
  Eigen::VectorXd col(rows);
  if (dcol) dcol->resize(rows, 3);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vec3 p{points_(i, 0), points_(i, 1), points_(i, 2)};
    if (!dcol) {
      double v = detail::apk_at(y1, p);
      if (wavelet) v -= detail::apk_at(y2, p);
      col[i] = v * inv_sigma;
      continue;
    }
    Vec3 g1, g2;
    double v = detail::apk_at(y1, p, g1);
    Vec3 g = detail::scaled(g1, inv_sigma * inv_sigma);
    if (wavelet) {
      v -= detail::apk_at(y2, p, g2);
      if (r > 0.0) {
        // d(|x| x)/dx = |x| I + x x^T / |x|
        const Vec3 gz = detail::scaled(g2, inv_sigma * inv_sigma);
        const double xg = dot(x, gz);
        for (int k = 0; k < 3; ++k) g[k] -= r * gz[k] + x[k] * xg / r;
      }
    }
    col[i] = v * inv_sigma;
    for (int k = 0; k < 3; ++k) (*dcol)(i, k) = g[k];
  }
  if (normalized) {
    const Dual<1> nr = detail::kernel_l2_norm(kind, Dual<1>::variable(r, 0));
    const double scale = 1.0 / nr.v;
    if (dcol) {
      // d(1/N(|x|))/dx = -N'(r) / N^2 * x / r
      Eigen::RowVector3d ds = Eigen::RowVector3d::Zero();
      if (r > 0.0)
        for (int k = 0; k < 3; ++k) ds[k] = -nr.d[0] / (nr.v * nr.v) * x[k] / r;
      *dcol = *dcol * scale + col * ds;
    }
    col *= scale;
  }
  return col;
}

Eigen::VectorXd ForwardModel::column(const DictionaryElement& e) const {
  if (const auto* k = std::get_if<ApkElement>(&e)) return kernel_column(TrialClass::APK, k->x.cart(), k->normalized, nullptr);
  if (const auto* w = std::get_if<ApwElement>(&e)) return kernel_column(TrialClass::APW, w->x.cart(), w->normalized, nullptr);
  const Eigen::Index rows = static_cast<Eigen::Index>(size());
  Eigen::VectorXd col(rows);
  if (const auto* sh = std::get_if<ShElement>(&e)) {
    const int n = sh->idx.n;
    const double damp = std::pow(sigma_, -n - 1);
    const LegendreRecursion& rec = legendre_recursion(n);
#pragma omp parallel
    {
      std::vector<double> y(sh_count(n));
#pragma omp for schedule(static)
      for (Eigen::Index i = 0; i < rows; ++i) {
        rec.evaluate<double>(points_(i, 0), points_(i, 1), points_(i, 2), y);
        col[i] = damp * y[sh->idx.linear()];
      }
    }
    return col;
  }
  const auto& sl = std::get<SlepianElement>(e);
  const LegendreRecursion& rec = legendre_recursion(sl.L);
  std::vector<double> damped(sl.coeffs.table.size());
  for (int n = 0; n <= sl.L; ++n)
    for (int k = n * n; k < (n + 1) * (n + 1); ++k) damped[k] = std::pow(sigma_, -n - 1) * sl.coeffs.table[k];
#pragma omp parallel
  {
    std::vector<double> y(sh_count(sl.L));
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) {
      rec.evaluate<double>(points_(i, 0), points_(i, 1), points_(i, 2), y);
      double acc = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) acc += damped[k] * y[k];
      col[i] = acc;
    }
  }
  return col;
}

}  // namespace sphpursuit
