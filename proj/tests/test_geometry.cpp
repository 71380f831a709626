#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sphpursuit/error.hpp"
#include "sphpursuit/geometry.hpp"

using namespace sphpursuit;

TEST_CASE("surface point invariants") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const SurfacePoint p = oracle::random_point(rng);
    CHECK(std::abs(std::sqrt(dot(p.cart(), p.cart())) - 1.0) < 1e-12);
    const SurfacePoint q(p.phi(), p.t());
    CHECK(q.cart() == p.cart());
  }
  CHECK(SurfacePoint(-0.5, 0.0).phi() == doctest::Approx(kTwoPi - 0.5));
  CHECK_THROWS_AS(SurfacePoint(0.0, 1.5), std::invalid_argument);
}

TEST_CASE("ball point invariants") {
  const BallPoint x(0.3, 1.0, 0.2);
  CHECK(std::sqrt(dot(x.cart(), x.cart())) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK_THROWS(BallPoint(1.0, 0.0, 0.0));
  CHECK_THROWS(BallPoint(-0.1, 0.0, 0.0));
  const BallPoint y = BallPoint::from_cartesian(x.cart());
  CHECK(y.r() == doctest::Approx(0.3));
  CHECK(y.t() == doctest::Approx(0.2));
}

TEST_CASE("cap region validation and centre") {
  CapRegion cap{0.5, 1.0, 0.7, 2.0};
  CHECK_NOTHROW(cap.validate());
  const auto A = euler_rotation(cap.alpha, cap.beta, cap.gamma);
  const Vec3 c = cap.centre();
  // A e3 is the third column.
  CHECK(A[2] == doctest::Approx(c[0]));
  CHECK(A[5] == doctest::Approx(c[1]));
  CHECK(A[8] == doctest::Approx(c[2]));
  CHECK_THROWS((CapRegion{1.5, 0, 0, 0}.validate()));
  CHECK_THROWS((CapRegion{0.0, 0, 4.0, 0}.validate()));
}

TEST_CASE("reuter grid") {
  const Grid g2 = reuter_grid(2);
  REQUIRE(g2.size() == 6);
  CHECK(g2.points.front().t() == 1.0);
  CHECK(g2.points.back().t() == -1.0);
  for (std::size_t i = 1; i + 1 < g2.size(); ++i) CHECK(std::abs(g2.points[i].t()) < 1e-15);
  CHECK_THROWS(reuter_grid(1));

  // Counts cited for the experiments, located by scanning.
  int found123 = -1, found12684 = -1;
  std::size_t prev = 0;
  for (int g = 2; g <= 120; ++g) {
    const std::size_t n = reuter_grid(g).size();
    CHECK(n >= prev);
    prev = n;
    if (n == 123) found123 = g;
    if (n == 12684) found12684 = g;
  }
  CHECK(found123 == 10);
  CHECK(found12684 == 100);
}

TEST_CASE("grid points are valid, distinct and deterministic") {
  for (const Grid& g : {reuter_grid(17), driscoll_healy_grid(6)}) {
    std::set<std::pair<double, double>> seen;
    for (const auto& p : g.points) {
      CHECK(std::abs(dot(p.cart(), p.cart()) - 1.0) < 1e-12);
      seen.insert({p.phi(), p.t()});
    }
    CHECK(seen.size() == g.size());
  }
  const Grid a = reuter_grid(31), b = reuter_grid(31);
  CHECK(a.points == b.points);
  // North to south ordering.
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.points[i].t() <= a.points[i - 1].t());
}

TEST_CASE("driscoll-healy grid") {
  CHECK(driscoll_healy_grid(1).size() == 15);
  int found = -1;
  for (int b = 1; b <= 120; ++b)
    if (driscoll_healy_grid(b).size() == 65341) found = b;
  CHECK(found == 90);
  CHECK_THROWS(driscoll_healy_grid(0));
}

TEST_CASE("squared distance") {
  const SurfacePoint a(0.3, 0.4);
  CHECK(squared_distance(a, a) == 0.0);
  const SurfacePoint north(0.0, 1.0), south(0.0, -1.0);
  CHECK(squared_distance(north, south) == doctest::Approx(4.0));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::random_point(rng), q = oracle::random_point(rng);
    double d = 0.0;
    for (int k = 0; k < 3; ++k) d += (p.cart()[k] - q.cart()[k]) * (p.cart()[k] - q.cart()[k]);
    CHECK(squared_distance(p, q) == doctest::Approx(d).epsilon(1e-14));
  }
  const double u[] = {1, 2, 3, 4}, v[] = {0, 2, 5, 4};
  CHECK(squared_distance(std::span<const double>(u), std::span<const double>(v)) == 5.0);
}

TEST_CASE("grid csv round trip") {
  const Grid g = reuter_grid(5);
  std::stringstream ss;
  write_grid_csv(ss, g);
  CHECK(ss.str().rfind("phi,t\n", 0) == 0);
  const Grid h = read_grid_csv(ss);
  CHECK(h.points == g.points);
  std::stringstream bad("phi,t\n0.1,0.2\n0.3,abc\n");
  try {
    read_grid_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}
