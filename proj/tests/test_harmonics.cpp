#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sphpursuit/harmonics.hpp"

using namespace sphpursuit;

TEST_CASE("index bookkeeping") {
  for (int k = 0; k < 500; ++k) {
    const ShIndex idx = ShIndex::from_linear(k);
    CHECK(idx.valid());
    CHECK(idx.linear() == k);
  }
  CHECK(sh_count(10) == 121);
  CHECK_FALSE((ShIndex{2, 3}.valid()));
}

TEST_CASE("low-degree values") {
  const SurfacePoint p(1.1, 0.3);
  CHECK(eval_sh({0, 0}, p) == doctest::Approx(0.28209479177387814));
  CHECK(eval_sh({1, 0}, SurfacePoint(0.0, 1.0)) == doctest::Approx(std::sqrt(3.0 / (4.0 * kPi))));
  const double c1 = std::sqrt(3.0 / (4.0 * kPi));
  const double s = std::sqrt(1 - 0.09);
  CHECK(eval_sh({1, -1}, p) == doctest::Approx(c1 * s * std::cos(1.1)));
  CHECK(eval_sh({1, 1}, p) == doctest::Approx(c1 * s * std::sin(1.1)));
}

TEST_CASE("matches the standard library special functions up to degree 100") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const SurfacePoint p = oracle::random_point(rng);
    const auto all = eval_sh_all(100, p);
    for (int n = 0; n <= 100; n += 7)
      for (int j = -n; j <= n; ++j)
        CHECK(all[ShIndex{n, j}.linear()] ==
              doctest::Approx(oracle::sh(n, j, p.phi(), p.t())).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("addition theorem") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SurfacePoint p = oracle::random_point(rng), q = oracle::random_point(rng);
    const auto yp = eval_sh_all(20, p), yq = eval_sh_all(20, q);
    for (int n = 0; n <= 20; ++n) {
      double sq = 0.0, cross = 0.0;
      for (int j = -n; j <= n; ++j) {
        sq += yp[n * n + n + j] * yp[n * n + n + j];
        cross += yp[n * n + n + j] * yq[n * n + n + j];
      }
      const double c = (2.0 * n + 1.0) / (4.0 * kPi);
      CHECK(sq == doctest::Approx(c).epsilon(1e-12));
      CHECK(cross == doctest::Approx(c * std::legendre(n, dot(p.cart(), q.cart()))).scale(1.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("orthonormality by quadrature") {
  const auto q = oracle::sphere_quadrature(12, 24);
  const int N = 8;
  std::vector<std::vector<double>> vals;
  for (const auto& p : q.points) vals.push_back(eval_sh_all(N, p));
  for (int a = 0; a < sh_count(N); ++a)
    for (int b = a; b < sh_count(N); ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < q.points.size(); ++i) acc += q.weights[i] * vals[i][a] * vals[i][b];
      CHECK(acc == doctest::Approx(a == b ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dual evaluation gives directional derivatives") {
  const SurfacePoint p(0.4, -0.2);
  const auto& u = p.cart();
  using D = Dual<1>;
  std::vector<D> y(sh_count(6));
  const double h = 1e-6;
  legendre_recursion(6).evaluate<D>(D::variable(u[0], 0), D(u[1]), D(u[2]), y);
  std::vector<double> yp(sh_count(6)), ym(sh_count(6));
  legendre_recursion(6).evaluate<double>(u[0] + h, u[1], u[2], yp);
  legendre_recursion(6).evaluate<double>(u[0] - h, u[1], u[2], ym);
  for (int k = 0; k < sh_count(6); ++k) CHECK(y[k].d[0] == doctest::Approx((yp[k] - ym[k]) / (2 * h)).epsilon(1e-6).scale(1.0));
}
