#include <random>

#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"
#include "sphpursuit/pursuit.hpp"

using namespace sphpursuit;

TEST_CASE("forward columns") {
  const ForwardModel fm(reuter_grid(8), 1.2);
  const Eigen::VectorXd c = fm.column(ShElement{{0, 0}});
  for (Eigen::Index i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(1.0 / 1.2 / std::sqrt(4 * kPi)));
  const BallPoint x(0.7, 1.0, 0.3);
  const Eigen::VectorXd a = fm.column(ApkElement{x, true}), b = fm.column(ApkElement{x, true});
  CHECK(a == b);
  const Eigen::VectorXd u = fm.column(ApkElement{x, false});
  CHECK((a - u / kernel_l2_norm(TrialClass::APK, 0.7)).cwiseAbs().maxCoeff() <= 1e-12 * u.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < fm.size(); i += 17) {
    CHECK(u[static_cast<Eigen::Index>(i)] == doctest::Approx(upward_eval(ApkElement{x, false}, 1.2, fm.grid().points[i])).epsilon(1e-13));
    const DictionaryElement w = ApwElement{x, true};
    CHECK(fm.column(w)[static_cast<Eigen::Index>(i)] == doctest::Approx(upward_eval(w, 1.2, fm.grid().points[i])).epsilon(1e-12));
  }
  const auto table = fm.sh_table(6);
  CHECK((table->col(ShIndex{5, -2}.linear()) - fm.column(ShElement{{5, -2}})).cwiseAbs().maxCoeff() < 1e-15);
  const ForwardModel surface(reuter_grid(4), 1.0);
  CHECK(surface.column(ApkElement{x, false})[3] == doctest::Approx(eval_apk(x, surface.grid().points[3])));
  CHECK_THROWS(ForwardModel(reuter_grid(4), 0.9));
}

TEST_CASE("kernel column derivatives") {
  const ForwardModel fm(reuter_grid(6), 1.1);
  const Vec3 x{0.3, -0.4, 0.5};
  const double h = 1e-6;
  for (TrialClass kind : {TrialClass::APK, TrialClass::APW})
    for (bool normalized : {false, true}) {
      Eigen::MatrixXd d;
      fm.kernel_column(kind, x, normalized, &d);
      for (int k = 0; k < 3; ++k) {
        Vec3 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const Eigen::VectorXd fd =
            (fm.kernel_column(kind, xp, normalized, nullptr) - fm.kernel_column(kind, xm, normalized, nullptr)) / (2 * h);
        CHECK((d.col(k) - fd).norm() <= 1e-6 * fd.norm());
      }
    }
}

TEST_CASE("objective basics") {
  std::mt19937_64 rng(1);
  const ForwardModel fm(instances::random_grid(rng, 40), 1.1);
  const DictionaryElement d0 = ApkElement{BallPoint(0.6, 2.0, 0.1), true};
  const Eigen::VectorXd t0 = fm.column(d0);
  for (Variant v : {Variant::RFMP, Variant::ROFMP}) {
    PursuitConfig cfg;
    cfg.variant = v;
    cfg.noise_threshold = 0.0;
    PursuitState st(fm, t0, cfg);
    CHECK(st.tikhonov_value() == doctest::Approx(t0.squaredNorm()));
    const DictionaryElement d1 = ShElement{{2, 1}};
    const Eigen::VectorXd t1 = fm.column(d1);
    const Objective o = st.objective(st.terms(d1, t1));
    CHECK(o.value == doctest::Approx(std::pow(t0.dot(t1), 2) / t1.squaredNorm()));
    // Exact match: the planted element is selected with alpha = 1.
    FiniteDictionary dict({d1, ShElement{{0, 0}}, d0, ApwElement{BallPoint(0.5, 1.0, 0.0), true}}, fm);
    const auto best = dict.argmax(st);
    REQUIRE(best);
    CHECK(best->index == 2);
    st.step(d0, t0);
    CHECK(st.chosen()[0].alpha == doctest::Approx(1.0));
    CHECK(st.rel_data_error() < 1e-12);
    CHECK(st.terminated() == StopReason::DataError);
  }
}

TEST_CASE("ROFMP projection bookkeeping") {
  std::mt19937_64 rng(2);
  const ForwardModel fm(instances::random_grid(rng, 30), 1.05);
  PursuitConfig cfg;
  cfg.variant = Variant::ROFMP;
  cfg.noise_threshold = 0.0;
  std::normal_distribution<double> g;
  Eigen::VectorXd y(30);
  for (auto& v : y) v = g(rng);
  PursuitState st(fm, y, cfg);
  const DictionaryElement d1 = ShElement{{1, 0}}, d = ApkElement{BallPoint(0.5, 0.3, 0.2), true};
  const Eigen::VectorXd t1 = fm.column(d1), t = fm.column(d);
  st.step(d1, t1);
  const Objective o = st.objective(st.terms(d, t));
  REQUIRE(o.ok());
  CHECK(o.beta[0] == doctest::Approx(t.dot(t1) / t1.squaredNorm()).epsilon(1e-12));
  // Candidate already chosen: in the span.
  CHECK(st.objective(st.terms(d1, t1)).status == ObjectiveStatus::InSpan);
  // Projection idempotence.
  const Eigen::VectorXd p1 = st.project_out(t);
  CHECK((st.project_out(p1) - p1).norm() <= 1e-12 * t.norm());
  // N = 0 ROFMP equals RFMP.
  PursuitConfig rcfg = cfg;
  rcfg.variant = Variant::RFMP;
  PursuitState a(fm, y, cfg), b(fm, y, rcfg);
  CHECK(a.objective(a.terms(d, t)).value == b.objective(b.terms(d, t)).value);
}

TEST_CASE("selection matches the dense oracle and bookkeeping stays exact") {
  std::mt19937_64 rng(3);
  for (int inst = 0; inst < 12; ++inst) {
    const int ell = 30 + inst;
    const ForwardModel fm(instances::random_grid(rng, ell), 1.0 + 0.05 * (inst % 3));
    const auto elements = instances::mixed_dictionary(rng, 40);
    const Eigen::VectorXd y = instances::random_data(rng, fm, elements);
    PursuitConfig cfg;
    cfg.variant = inst % 2 ? Variant::ROFMP : Variant::RFMP;
    cfg.lambda0 = (inst / 2) % 2 ? 1e-3 : 0.0;
    cfg.noise_threshold = 0.0;
    cfg.restart_period = 4;
    FiniteDictionary dict(elements, fm);
    PursuitState st(fm, y, cfg);
    double prev = st.tikhonov_value();
    for (int it = 0; it < 9; ++it) {
      if (st.restart_due()) {
        st.restart();
        Eigen::VectorXd R = y;
        for (const auto& c : st.chosen()) R -= c.alpha * c.column;
        CHECK((st.residual() - R).norm() <= 1e-12 * y.norm());
      }
      const auto best = dict.argmax(st);
      REQUIRE(best);
      std::size_t oracle_best = 0;
      double oracle_value = -1.0;
      for (std::size_t i = 0; i < elements.size(); ++i) {
        const double v = instances::oracle_objective(st, elements[i], dict.column(i));
        if (v > oracle_value * (1 + 1e-12)) {
          oracle_value = v;
          oracle_best = i;
        }
      }
      CHECK(best->index == oracle_best);
      CHECK(best->objective.value == doctest::Approx(oracle_value).epsilon(1e-8));
      st.step(elements[best->index], dict.column(best->index));
      const double lam = st.lambda();
      const double tv = st.tikhonov_value(lam);
      CHECK(tv <= prev + 1e-12 * y.squaredNorm());
      CHECK(tv == doctest::Approx(instances::oracle_tikhonov(st, lam)).epsilon(1e-10));
      prev = tv;
      if (cfg.variant == Variant::ROFMP) {
        const Eigen::MatrixXd Q = st.window_basis();
        CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff() < 1e-12);
        if (cfg.lambda0 == 0.0) CHECK((Q.transpose() * st.residual()).cwiseAbs().maxCoeff() <= 1e-10 * y.norm());
      } else {
        Eigen::VectorXd R = y;
        for (const auto& c : st.chosen()) R -= c.alpha * c.column;
        CHECK((st.residual() - R).norm() <= 1e-10 * y.norm());
      }
    }
  }
}

TEST_CASE("ROFMP without regularization is a least-squares projection") {
  std::mt19937_64 rng(4);
  const ForwardModel fm(instances::random_grid(rng, 45), 1.1);
  const auto elements = instances::mixed_dictionary(rng, 30);
  const Eigen::VectorXd y = instances::random_data(rng, fm, elements);
  PursuitConfig cfg;
  cfg.variant = Variant::ROFMP;
  cfg.noise_threshold = 0.0;
  FiniteDictionary dict(elements, fm);
  PursuitState st(fm, y, cfg);
  for (int it = 0; it < 8; ++it) {
    const auto best = dict.argmax(st);
    REQUIRE(best);
    st.step(elements[best->index], dict.column(best->index));
  }
  Eigen::MatrixXd W(y.size(), st.iteration());
  for (int i = 0; i < st.iteration(); ++i) W.col(i) = st.chosen()[static_cast<std::size_t>(i)].column;
  const Eigen::VectorXd coef = W.colPivHouseholderQr().solve(y);
  CHECK((st.residual() - (y - W * coef)).norm() <= 1e-10 * y.norm());
  CHECK((st.coefficients() - coef).norm() <= 1e-8 * coef.norm());
  Eigen::VectorXd R = y - W * st.coefficients();
  CHECK((R - st.residual()).norm() <= 1e-10 * y.norm());
}

TEST_CASE("restart semantics") {
  std::mt19937_64 rng(5);
  const ForwardModel fm(instances::random_grid(rng, 25), 1.1);
  const auto elements = instances::mixed_dictionary(rng, 25);
  const Eigen::VectorXd y = instances::random_data(rng, fm, elements);
  PursuitConfig cfg;
  cfg.variant = Variant::ROFMP;
  cfg.lambda0 = 1e-4;
  PursuitState st(fm, y, cfg);
  st.restart();
  CHECK(st.window_size() == 0);
  CHECK(st.residual() == y);
  FiniteDictionary dict(elements, fm);
  for (int it = 0; it < 3; ++it) {
    const auto b = dict.argmax(st);
    st.step(elements[b->index], dict.column(b->index));
  }
  st.restart();
  // After a restart the ROFMP objective is the RFMP objective on the carried state.
  PursuitConfig rcfg = cfg;
  rcfg.variant = Variant::RFMP;
  const DictionaryElement d = elements[7];
  const Eigen::VectorXd t = fm.column(d);
  const Objective o = st.objective(st.terms(d, t));
  const double A = st.residual().dot(t) - st.lambda() * st.coefficients().dot(st.sobolev_products(d));
  const double B = t.squaredNorm() + st.lambda() * sobolev_norm_sq(d);
  CHECK(o.value == doctest::Approx(A * A / B).epsilon(1e-12));
}

TEST_CASE("termination and lambda schedule") {
  std::mt19937_64 rng(6);
  const ForwardModel fm(instances::random_grid(rng, 10), 1.1);
  PursuitConfig cfg;
  cfg.max_iterations = 0;
  Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  CHECK(PursuitState(fm, y, cfg).terminated() == StopReason::MaxIterations);
  CHECK(PursuitState(fm, Eigen::VectorXd::Zero(10), cfg).terminated() == StopReason::DataError);
  cfg.max_iterations = 5;
  cfg.noise_threshold = 0.05;
  PursuitState st(fm, y, cfg);
  CHECK(st.terminated() == StopReason::None);
  cfg.lambda0 = 2.0;
  cfg.schedule = LambdaSchedule::NonStationary;
  PursuitState ns(fm, y, cfg);
  CHECK(ns.lambda() == doctest::Approx(2.0 * y.norm()));
  ns.step(ShElement{{0, 0}}, fm.column(ShElement{{0, 0}}));
  CHECK(ns.lambda() == doctest::Approx(2.0 * y.norm() / 2));
}

TEST_CASE("data error threshold is inclusive") {
  std::mt19937_64 rng(7);
  const ForwardModel fm(instances::random_grid(rng, 12), 1.1);
  Eigen::VectorXd y = fm.column(ShElement{{1, 1}});
  const Eigen::VectorXd t = fm.column(ShElement{{0, 0}});
  // Place 0.049999 of the data norm orthogonally to t.
  Eigen::VectorXd r = fm.column(ShElement{{2, 0}});
  r -= t * (t.dot(r) / t.squaredNorm());
  y -= t * (t.dot(y) / t.squaredNorm());
  Eigen::VectorXd data = 0.049999 / std::sqrt(1 - 0.049999 * 0.049999) * r / r.norm() * 1.0 + t / t.norm();
  PursuitConfig cfg;
  PursuitState st(fm, data, cfg);
  st.step(ShElement{{0, 0}}, t);
  CHECK(st.rel_data_error() == doctest::Approx(0.049999).epsilon(1e-9));
  CHECK(st.terminated() == StopReason::DataError);
}
