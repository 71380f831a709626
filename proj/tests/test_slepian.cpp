#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "sphpursuit/slepian.hpp"

using namespace sphpursuit;

namespace {

double eval_coeffs(const SpectralCoeffs& g, const SurfacePoint& p) {
  const auto y = eval_sh_all(g.L, p);
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) acc += g.table[k] * y[k];
  return acc;
}

SurfacePoint apply_transpose(const std::array<double, 9>& A, const SurfacePoint& p) {
  const Vec3& v = p.cart();
  Vec3 w{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) w[i] += A[k * 3 + i] * v[k];
  return SurfacePoint::from_cartesian(w);
}

const double kCaps[] = {-0.5, 0.0, std::cos(kPi / 4), std::cos(kPi / 2)};

}  // namespace

TEST_CASE("gauss-legendre rule") {
  std::vector<double> x, w;
  gauss_legendre(5, 0.0, 2.0, x, w);
  double s = 0.0, s8 = 0.0;
  for (int i = 0; i < 5; ++i) {
    s += w[i];
    s8 += w[i] * std::pow(x[i], 9);
  }
  CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s8 == doctest::Approx(1024.0 / 10.0).epsilon(1e-13));
}

TEST_CASE("concentration matrix limits") {
  for (int m = 0; m <= 4; ++m) {
    const auto full = concentration_matrix(4, -1.0, m);
    CHECK((full - Eigen::MatrixXd::Identity(full.rows(), full.cols())).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(concentration_matrix(4, 1.0, m).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS(concentration_matrix(3, 0.0, 4));
}

TEST_CASE("concentration matrix against dense surface quadrature") {
  // L = 2, m = 0, c = 0: integrate Y_{l,0} Y_{l',0} over the northern
  // hemisphere with a fine midpoint rule in theta and phi.
  const int nt = 2000, np = 8;
  Eigen::Matrix3d ref = Eigen::Matrix3d::Zero();
  for (int i = 0; i < nt; ++i) {
    const double theta = (i + 0.5) * (kPi / 2) / nt;
    const double dA = std::sin(theta) * (kPi / 2) / nt * (2 * kPi / np);
    for (int k = 0; k < np; ++k) {
      const double phi = 2 * kPi * k / np;
      double y[3];
      for (int l = 0; l <= 2; ++l) y[l] = oracle::sh(l, 0, phi, std::cos(theta));
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) ref(a, b) += y[a] * y[b] * dA;
    }
  }
  const auto D = concentration_matrix(2, 0.0, 0);
  CHECK((D - ref).cwiseAbs().maxCoeff() < 1e-6);  // midpoint rule error ~ h^2
  // Exact values: D00 = 1/2, D11 = 1/2, D01 = sqrt(3)/4, D22 = 1/2, D02 = 0.
  CHECK(D(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(D(0, 1) == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-13));
  CHECK(std::abs(D(0, 2)) < 1e-14);
  CHECK(D(2, 2) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("polar cap basis invariants") {
  for (int L = 0; L <= 8; ++L)
    for (double c : kCaps) {
      const PolarCapBasis b = build_polar_cap(L, c);
      REQUIRE(b.functions.size() == static_cast<std::size_t>(sh_count(L)));
      double total = 0.0;
      for (std::size_t k = 0; k < b.functions.size(); ++k) {
        total += b.concentrations[k];
        CHECK(b.concentrations[k] >= 0.0);
        CHECK(b.concentrations[k] <= 1.0);
        if (k > 0) CHECK(b.concentrations[k] <= b.concentrations[k - 1]);
        double n2 = 0.0;
        for (double g : b.functions[k].table) n2 += g * g;
        CHECK(std::abs(n2 - 1.0) < 1e-10);
      }
      CHECK(total == doctest::Approx(sh_count(L) * (1.0 - c) / 2.0).epsilon(1e-6).scale(1.0));
      // Pairwise orthogonality of a few members.
      for (std::size_t a = 0; a < b.functions.size(); a += 3)
        for (std::size_t k = a + 1; k < b.functions.size(); k += 2) {
          double ip = 0.0;
          for (std::size_t i = 0; i < b.functions[a].table.size(); ++i) ip += b.functions[a].table[i] * b.functions[k].table[i];
          CHECK(std::abs(ip) < 1e-8);
        }
    }
}

TEST_CASE("commuting eigenvectors diagonalize the concentration matrix") {
  for (int L = 0; L <= 8; ++L)
    for (double c : kCaps)
      for (int m = 0; m <= L; ++m) {
        const auto D = concentration_matrix(L, c, m);
        const auto T = commuting_matrix(L, c, m);
        // Commutation is the structural reason the eigenvectors agree.
        CHECK((T * D - D * T).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, T.cwiseAbs().maxCoeff()));
      }
}

TEST_CASE("whole sphere basis") {
  const PolarCapBasis b = build_polar_cap(3, -1.0);
  for (double mu : b.concentrations) CHECK(mu == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rotation of coefficients") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi), half(0.0, kPi);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    SpectralCoeffs c(7);
    for (double& v : c.table) v = g(rng);
    CHECK(rotate_coeffs(c, 0, 0, 0).table == c.table);
    const double a = ang(rng), b = half(rng), gm = ang(rng);
    const SpectralCoeffs r = rotate_coeffs(c, a, b, gm);
    double n0 = 0.0, n1 = 0.0;
    for (std::size_t i = 0; i < c.table.size(); ++i) {
      n0 += c.table[i] * c.table[i];
      n1 += r.table[i] * r.table[i];
    }
    CHECK(std::abs(n1 - n0) < 1e-12 * n0);
    const auto A = euler_rotation(a, b, gm);
    for (int i = 0; i < 50; ++i) {
      const SurfacePoint p = oracle::random_point(rng);
      CHECK(std::abs(eval_coeffs(r, p) - eval_coeffs(c, apply_transpose(A, p))) < 1e-8);
    }
  }
}

TEST_CASE("make slepian") {
  const CapRegion cap{std::cos(kPi / 4), 1.0, 0.8, 2.5};
  const SlepianElement e = make_slepian(cap, 1, 5);
  double n2 = 0.0;
  for (double v : e.coeffs.table) n2 += v * v;
  CHECK(std::abs(n2 - 1.0) < 1e-10);
  // The most concentrated member peaks near the cap centre.
  const SurfacePoint centre = SurfacePoint::from_cartesian(cap.centre());
  const SurfacePoint anti = SurfacePoint::from_cartesian({-cap.centre()[0], -cap.centre()[1], -cap.centre()[2]});
  CHECK(std::abs(eval_coeffs(e.coeffs, centre)) > 5 * std::abs(eval_coeffs(e.coeffs, anti)));
  // beta = 0 with gamma = 2pi - alpha is the identity rotation.
  const SlepianElement id = make_slepian({0.3, 1.2, 0.0, 2 * kPi - 1.2}, 4, 5);
  const auto polar = polar_cap(5, 0.3);
  for (std::size_t i = 0; i < id.coeffs.table.size(); ++i)
    CHECK(std::abs(id.coeffs.table[i] - polar->functions[3].table[i]) < 1e-12);
  CHECK_THROWS(make_slepian(cap, 0, 5));
  CHECK_THROWS(make_slepian(cap, 37, 5));
  CHECK_THROWS(make_slepian({2.0, 0, 0, 0}, 1, 5));
}

TEST_CASE("cache is transparent") {
  clear_slepian_cache();
  const auto a = polar_cap(5, 0.25);
  const auto b = polar_cap(5, 0.25);
  CHECK(a.get() == b.get());
  const PolarCapBasis fresh = build_polar_cap(5, 0.25);
  for (std::size_t k = 0; k < fresh.functions.size(); ++k) CHECK(fresh.functions[k] == a->functions[k]);
  CHECK(slepian_cache_size() == 1);
}
