#include <cmath>
#include <random>

#include "doctest.h"
#include "sphpursuit/optimize.hpp"

using namespace sphpursuit;
using Eigen::VectorXd;

namespace {

Box unit_box(int n) { return Box(VectorXd::Zero(n), VectorXd::Ones(n)); }

}  // namespace

TEST_CASE("box projection") {
  Box b(VectorXd::Zero(2), VectorXd::Constant(2, 2 * M_PI), {false, true});
  const VectorXd p = b.project(VectorXd{{-1.0, -0.5}});
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(2 * M_PI - 0.5));
  CHECK(b.project(VectorXd{{7.0, 7.0}})[1] == doctest::Approx(7.0 - 2 * M_PI));
  CHECK_THROWS(Box(VectorXd::Ones(1), VectorXd::Zero(1)));
}

TEST_CASE("global maximization") {
  SUBCASE("budget one evaluates the centre") {
    Box b(VectorXd{{-1.0, 0.0, 2.0}}, VectorXd{{1.0, 4.0, 3.0}});
    int calls = 0;
    const auto r = global_maximize([&](const VectorXd&) { ++calls; return 1.0; }, b, {1, 10.0});
    CHECK(calls == 1);
    CHECK(r.x == b.center());
  }
  SUBCASE("concave quadratic oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 2 + trial % 3;
      VectorXd z0(n);
      for (auto& v : z0) v = u(rng);
      const Box b = unit_box(n);
      int outside = 0;
      const auto r = global_maximize(
          [&](const VectorXd& z) {
            if (!b.contains(z)) ++outside;
            return -(z - z0).squaredNorm();
          },
          b, {2000, 60.0});
      CHECK(outside == 0);
      CHECK(r.evaluations <= 2000);
      CHECK((r.x - z0).norm() < 1e-2);
    }
  }
  SUBCASE("constant") {
    const auto r = global_maximize([](const VectorXd&) { return 3.5; }, unit_box(3), {100, 10.0});
    CHECK(r.value == 3.5);
    CHECK(unit_box(3).contains(r.x));
  }
  SUBCASE("multimodal with a narrow global peak") {
    auto f = [](const VectorXd& z) {
      return std::exp(-((z[0] - 0.8) * (z[0] - 0.8) + (z[1] - 0.15) * (z[1] - 0.15)) / 0.002) +
             0.5 * std::exp(-((z[0] - 0.3) * (z[0] - 0.3) + (z[1] - 0.6) * (z[1] - 0.6)) / 0.1);
    };
    const auto r = global_maximize(f, unit_box(2), {3000, 60.0});
    CHECK(r.value > 0.9);
  }
  SUBCASE("deterministic") {
    auto f = [](const VectorXd& z) { return std::sin(7 * z[0]) * std::cos(5 * z[1]) - z.squaredNorm(); };
    const auto a = global_maximize(f, unit_box(2), {500, 60.0});
    const auto b = global_maximize(f, unit_box(2), {500, 60.0});
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
  }
}

TEST_CASE("local maximization") {
  SUBCASE("concave quadratic with an interior optimum") {
    const VectorXd z0{{0.3, 0.7, 0.45}};
    const VectorXd w{{1.0, 20.0, 3.0}};
    auto f = [&](const VectorXd& z, VectorXd* g) {
      const VectorXd d = z - z0;
      if (g) *g = -2.0 * w.cwiseProduct(d);
      return -d.dot(w.cwiseProduct(d));
    };
    LocalOptions opt;
    opt.ftol = 1e-14;
    opt.xtol = 1e-9;
    const auto r = local_maximize(f, unit_box(3), VectorXd::Constant(3, 0.9), opt);
    CHECK((r.x - z0).norm() < 1e-6);
  }
  SUBCASE("corner with an outward gradient stays put") {
    auto f = [](const VectorXd& z, VectorXd* g) {
      if (g) *g = VectorXd::Ones(z.size());
      return z.sum();
    };
    const VectorXd corner = VectorXd::Ones(2);
    const auto r = local_maximize(f, unit_box(2), corner);
    CHECK(r.x == corner);
    CHECK(r.value == 2.0);
  }
  SUBCASE("never below the start, gradient failures fall back to differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      const VectorXd s{{u(rng), u(rng)}};
      auto f = [](const VectorXd& z, VectorXd* g) -> double {
        if (g) throw std::runtime_error("no gradient");
        return std::sin(9 * z[0]) + std::cos(6 * z[1] * z[0]);
      };
      const auto r = local_maximize(f, unit_box(2), s);
      CHECK(r.value >= f(s, nullptr));
      CHECK(unit_box(2).contains(r.x));
    }
    auto fd_only = [](const VectorXd& z, VectorXd* g) {
      if (g) *g = VectorXd::Constant(2, NAN);
      return -(z - VectorXd::Constant(2, 0.4)).squaredNorm();
    };
    CHECK((local_maximize(fd_only, unit_box(2), VectorXd::Constant(2, 0.9)).x - VectorXd::Constant(2, 0.4)).norm() < 1e-3);
  }
  SUBCASE("periodic coordinate crosses the seam") {
    Box b(VectorXd::Zero(1), VectorXd::Constant(1, 2 * M_PI), {true});
    auto f = [](const VectorXd& z, VectorXd* g) {
      if (g) *g = VectorXd::Constant(1, -std::sin(z[0] - 0.1));
      return std::cos(z[0] - 0.1);
    };
    LocalOptions opt;
    opt.ftol = 1e-15;
    const auto r = local_maximize(f, b, VectorXd::Constant(1, 6.0), opt);
    CHECK(r.x[0] == doctest::Approx(0.1).epsilon(1e-4));
  }
}
