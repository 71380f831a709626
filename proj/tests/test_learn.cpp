#include <random>

#include "doctest.h"
#include "instances.hpp"
#include "oracles.hpp"
#include "sphpursuit/learn.hpp"

using namespace sphpursuit;
using Eigen::VectorXd;

namespace {

LearnConfig quick_config(int evals = 600) {
  LearnConfig lc;
  lc.global.max_evaluations = evals;
  lc.global.max_seconds = 60.0;
  return lc;
}

BallPoint random_ball_point(std::mt19937_64& rng, double rmin, double rmax) {
  std::uniform_real_distribution<double> r(rmin, rmax);
  const auto p = oracle::random_point(rng);
  return BallPoint(r(rng), p.phi(), p.t());
}

}  // namespace

TEST_CASE("avoidance spline") {
  const double eps = 5e-4;
  CHECK(spline_factor(eps, eps) == 0.0);
  CHECK(spline_factor(2 * eps, eps) == 1.0);
  CHECK(spline_factor(1.5 * eps, eps) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(spline_factor(0.0, eps) == 0.0);
  CHECK(spline_factor(1.9, eps) == 1.0);
  const VectorXd z = VectorXd::Constant(3, 0.2);
  CHECK(spline_penalty(z, {}, eps) == 1.0);
  CHECK(spline_penalty(z, {z}, eps) == 0.0);
  VectorXd near = z;
  near[0] += std::sqrt(1.5 * eps);
  CHECK(spline_penalty(z, {near, VectorXd::Zero(3)}, eps) == doctest::Approx(0.5).epsilon(1e-12));
  for (double tau : {1.1 * eps, 1.37 * eps, 1.8 * eps}) {
    const double h = 1e-9;
    const double fd = (spline_factor(tau + h, eps) - spline_factor(tau - h, eps)) / (2 * h);
    CHECK(spline_factor_derivative(tau, eps) == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS(spline_penalty(z, {}, 0.0));
}

TEST_CASE("parameters round-trip through elements") {
  const LearnConfig lc;
  const VectorXd zk = Eigen::Vector3d(0.6, 1.2, -0.3);
  CHECK(parameters(element_at(TrialClass::APK, zk)) .isApprox(zk, 1e-15));
  CHECK(parameters(element_at(TrialClass::APW, zk)).isApprox(zk, 1e-15));
  const VectorXd zs = Eigen::Vector4d(0.3, 1.0, 2.0, 3.0);
  const auto sl = element_at(TrialClass::SL, zs, 4, 3);
  CHECK(parameters(sl) == zs);
  CHECK(std::get<SlepianElement>(sl).k == 4);
  CHECK(parameter_box(TrialClass::APK, lc).contains(zk));
  CHECK(parameter_box(TrialClass::SL, lc).contains(zs));
  CHECK(parameter_box(TrialClass::APK, lc).hi[0] == 1.0 - 1e-8);
  CHECK_THROWS(parameter_box(TrialClass::SH, lc));
}

TEST_CASE("harmonic candidate") {
  std::mt19937_64 rng(21);
  const ForwardModel fm(instances::random_grid(rng, 120), 1.08);
  InfiniteDictionarySpec spec;
  spec.max_sh_degree = 6;
  spec.use_sl = spec.use_apk = spec.use_apw = false;
  PursuitConfig cfg;
  cfg.noise_threshold = 0.0;
  {
    Learner learner(fm, spec, quick_config());
    PursuitState st(fm, fm.column(ShElement{{3, -1}}), cfg);
    const auto c = learner.sh_candidate(st);
    REQUIRE(c);
    CHECK(std::get<ShElement>(c->element).idx == ShIndex{3, -1});
    // Only harmonics enabled: the learning step is the harmonic search.
    const auto step = learner.step(st);
    REQUIRE(step.chosen);
    CHECK(step.chosen->element == c->element);
    CHECK(step.candidates.size() == 1);
  }
  {
    InfiniteDictionarySpec zero = spec;
    zero.max_sh_degree = 0;
    Learner learner(fm, zero, quick_config());
    PursuitState st(fm, fm.column(ShElement{{2, 1}}) + 0.3 * fm.column(ShElement{{0, 0}}), cfg);
    CHECK(std::get<ShElement>(learner.sh_candidate(st)->element).idx == ShIndex{0, 0});
  }
  for (Variant v : {Variant::RFMP, Variant::ROFMP}) {
    InfiniteDictionarySpec five = spec;
    five.max_sh_degree = 5;
    Learner learner(fm, five, quick_config());
    const auto dict = instances::mixed_dictionary(rng, 20);
    cfg.variant = v;
    cfg.lambda0 = 1e-3;
    PursuitState st(fm, instances::random_data(rng, fm, dict), cfg);
    for (int it = 0; it < 4; ++it) {
      const auto c = learner.sh_candidate(st);
      REQUIRE(c);
      int best = -1;
      double best_v = -1.0;
      for (int k = 0; k < 36; ++k) {
        const DictionaryElement e = ShElement{ShIndex::from_linear(k)};
        const double val = instances::oracle_objective(st, e, fm.column(e));
        if (val > best_v * (1 + 1e-12)) {
          best_v = val;
          best = k;
        }
      }
      CHECK(std::get<ShElement>(c->element).idx.linear() == best);
      st.step(c->element, c->column);
    }
  }
}

TEST_CASE("continuous objective agrees with concrete elements") {
  std::mt19937_64 rng(22);
  const ForwardModel fm(instances::random_grid(rng, 90), 1.1);
  InfiniteDictionarySpec spec;
  spec.slepian_bandlimit = 3;
  const LearnConfig lc;
  const auto dict = instances::mixed_dictionary(rng, 24);
  for (Variant v : {Variant::RFMP, Variant::ROFMP}) {
    PursuitConfig cfg;
    cfg.variant = v;
    cfg.lambda0 = 1e-3;
    cfg.noise_threshold = 0.0;
    PursuitState st(fm, instances::random_data(rng, fm, dict), cfg);
    for (int i = 0; i < 5; ++i) st.step(dict[static_cast<std::size_t>(4 + 3 * i)], fm.column(dict[static_cast<std::size_t>(4 + 3 * i)]));
    for (TrialClass kind : {TrialClass::APK, TrialClass::APW}) {
      const ContinuousObjective f(st, kind, spec, lc);
      for (int s = 0; s < 10; ++s) {
        const BallPoint b = random_ball_point(rng, 0.1, 0.9);
        const VectorXd z = Eigen::Vector3d(b.r(), b.phi(), b.t());
        const auto e = element_at(kind, z);
        CHECK(f(z) == doctest::Approx(learning_value(st, e, fm.column(e), lc.epsilon)).epsilon(1e-12));
      }
    }
    ContinuousObjective f(st, TrialClass::SL, spec, lc);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int s = 0; s < 10; ++s) {
      const VectorXd z = Eigen::Vector4d(2 * u(rng) - 1, 2 * kPi * u(rng), kPi * u(rng), 2 * kPi * u(rng));
      const int k = 1 + s % 16;
      f.set_slepian_member(k);
      const auto e = element_at(TrialClass::SL, z, k, 3);
      CHECK(f(z) == doctest::Approx(learning_value(st, e, fm.column(e), lc.epsilon)).epsilon(1e-9));
      int best_k = 0;
      const double bv = f.best_member(z, &best_k);
      for (int m = 1; m <= 16; ++m) {
        const auto em = element_at(TrialClass::SL, z, m, 3);
        CHECK(learning_value(st, em, fm.column(em), lc.epsilon) <= bv * (1 + 1e-9) + 1e-14);
      }
    }
  }
}

TEST_CASE("objective gradients match central differences") {
  std::mt19937_64 rng(23);
  InfiniteDictionarySpec spec;
  const LearnConfig lc;
  int checked = 0;
  for (int inst = 0; inst < 10; ++inst) {
    const ForwardModel fm(instances::random_grid(rng, 60), 1.0 + 0.1 * (inst % 3));
    const auto dict = instances::mixed_dictionary(rng, 20);
    PursuitConfig cfg;
    cfg.variant = inst % 2 ? Variant::ROFMP : Variant::RFMP;
    cfg.lambda0 = inst % 4 < 2 ? 1e-2 : 0.0;
    cfg.noise_threshold = 0.0;
    PursuitState st(fm, instances::random_data(rng, fm, dict), cfg);
    for (int i = 0; i < inst % 5; ++i) st.step(dict[static_cast<std::size_t>(5 + 2 * i)], fm.column(dict[static_cast<std::size_t>(5 + 2 * i)]));
    for (TrialClass kind : {TrialClass::APK, TrialClass::APW}) {
      const ContinuousObjective f(st, kind, spec, lc);
      for (int s = 0; s < 5; ++s) {
        const BallPoint b = random_ball_point(rng, 0.2, 0.9);
        const Vec3 x = b.cart();
        Eigen::Vector3d g;
        f.plain_cartesian(x, &g);
        Eigen::Vector3d fd;
        const double h = 1e-6;
        for (int k = 0; k < 3; ++k) {
          Vec3 xp = x, xm = x;
          xp[k] += h;
          xm[k] -= h;
          fd[k] = (f.plain_cartesian(xp, nullptr) - f.plain_cartesian(xm, nullptr)) / (2 * h);
        }
        CHECK((g - fd).norm() <= 1e-5 * std::max(fd.norm(), 1e-8 * st.data_norm() * st.data_norm()));
        // Chain rule to (r, phi, t) including the spline.
        const VectorXd z = Eigen::Vector3d(b.r(), b.phi(), b.t());
        VectorXd gz;
        f(z, &gz);
        VectorXd fz(3);
        for (int k = 0; k < 3; ++k) {
          VectorXd zp = z, zm = z;
          zp[k] += h;
          zm[k] -= h;
          fz[k] = (f(zp) - f(zm)) / (2 * h);
        }
        CHECK((gz - fz).norm() <= 1e-5 * std::max(fz.norm(), 1e-8 * st.data_norm() * st.data_norm()));
        ++checked;
      }
    }
  }
  CHECK(checked == 100);
}

TEST_CASE("quotient-rule oracle at the first iteration") {
  std::mt19937_64 rng(24);
  const ForwardModel fm(instances::random_grid(rng, 70), 1.05);
  PursuitConfig cfg;
  const auto dict = instances::mixed_dictionary(rng, 15);
  const VectorXd y = instances::random_data(rng, fm, dict);
  PursuitState st(fm, y, cfg);
  InfiniteDictionarySpec spec;
  const ContinuousObjective f(st, TrialClass::APK, spec, LearnConfig{});
  const Vec3 x{0.2, -0.5, 0.4};
  Eigen::MatrixXd dcol;
  const VectorXd t = fm.kernel_column(TrialClass::APK, x, true, &dcol);
  const double A = y.dot(t), B = t.squaredNorm();
  const Eigen::Vector3d dA = dcol.transpose() * y, dB = 2.0 * dcol.transpose() * t;
  const Eigen::Vector3d expect = (2 * A * dA * B - A * A * dB) / (B * B);
  Eigen::Vector3d g;
  CHECK(f.plain_cartesian(x, &g) == doctest::Approx(A * A / B).epsilon(1e-13));
  CHECK((g - expect).norm() <= 1e-12 * expect.norm());
}

TEST_CASE("spline zeroes the neighbourhood of chosen kernels under ROFMP") {
  std::mt19937_64 rng(25);
  const ForwardModel fm(instances::random_grid(rng, 80), 1.1);
  const auto dict = instances::mixed_dictionary(rng, 20);
  InfiniteDictionarySpec spec;
  const LearnConfig lc;
  PursuitConfig cfg;
  cfg.variant = Variant::ROFMP;
  cfg.noise_threshold = 0.0;
  PursuitState st(fm, instances::random_data(rng, fm, dict), cfg);
  const DictionaryElement k = ApkElement{BallPoint(0.7, 1.0, 0.2), true};
  st.step(k, fm.column(k));
  const ContinuousObjective f(st, TrialClass::APK, spec, lc);
  VectorXd z = parameters(k);
  z[0] += 0.01;  // |dx|^2 = 1e-4 <= eps
  CHECK(f(z) == 0.0);
  const DictionaryElement near = element_at(TrialClass::APK, z);
  CHECK(learning_value(st, near, fm.column(near), lc.epsilon) == 0.0);
  const ContinuousObjective fw(st, TrialClass::APW, spec, lc);
  CHECK(fw(z) > 0.0);  // other classes are unaffected
  cfg.variant = Variant::RFMP;
  PursuitState rs(fm, st.data(), cfg);
  rs.step(k, fm.column(k));
  CHECK(ContinuousObjective(rs, TrialClass::APK, spec, lc)(z) > 0.0);
}

TEST_CASE("planted kernel is recovered") {
  std::mt19937_64 rng(26);
  const ForwardModel fm(reuter_grid(20), 1.0 + 500.0 / 6371.0);
  InfiniteDictionarySpec spec;
  spec.max_sh_degree = 4;
  spec.use_sl = spec.use_apw = false;
  std::vector<DictionaryElement> start;
  for (const auto& p : reuter_grid(2).points) start.push_back(ApkElement{BallPoint(0.94, p.phi(), p.t()), true});
  Learner learner(fm, spec, quick_config(1500), start);
  PursuitConfig cfg;
  cfg.noise_threshold = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const auto p = oracle::random_point(rng);
    const BallPoint plant(0.8, p.phi(), p.t());
    const DictionaryElement e = ApkElement{plant, true};
    PursuitState st(fm, fm.column(e), cfg);
    const auto res = learner.step(st);
    REQUIRE(res.chosen);
    const auto& got = std::get<ApkElement>(res.chosen->element).x;
    const Vec3 d{got.cart()[0] - plant.cart()[0], got.cart()[1] - plant.cart()[1], got.cart()[2] - plant.cart()[2]};
    CHECK(std::sqrt(dot(d, d)) < 1e-2);
    CHECK(res.chosen->value >= res.starting_best);
    st.step(res.chosen->element, res.chosen->column);
    CHECK(st.rel_data_error() <= 1e-4);
  }
}

TEST_CASE("candidates dominate the start and the step is deterministic") {
  std::mt19937_64 rng(27);
  const ForwardModel fm(instances::random_grid(rng, 150), 1.08);
  InfiniteDictionarySpec spec;
  spec.max_sh_degree = 6;
  spec.slepian_bandlimit = 2;
  std::vector<DictionaryElement> start;
  for (const auto& p : reuter_grid(2).points) {
    start.push_back(ApkElement{BallPoint(0.94, p.phi(), p.t()), true});
    start.push_back(ApwElement{BallPoint(0.94, p.phi(), p.t()), true});
  }
  for (int k = 1; k <= 9; ++k) start.push_back(make_slepian({std::cos(kPi / 4), 0.0, kPi / 2, 0.0}, k, 2));
  const auto dict = instances::mixed_dictionary(rng, 20);
  const VectorXd y = instances::random_data(rng, fm, dict);
  for (Variant v : {Variant::RFMP, Variant::ROFMP}) {
    PursuitConfig cfg;
    cfg.variant = v;
    cfg.lambda0 = 1e-4;
    cfg.noise_threshold = 0.0;
    Learner a(fm, spec, quick_config(300), start), b(fm, spec, quick_config(300), start);
    PursuitState sa(fm, y, cfg), sb(fm, y, cfg);
    for (int it = 0; it < 4; ++it) {
      const auto ra = a.step(sa), rb = b.step(sb);
      REQUIRE(ra.chosen);
      REQUIRE(rb.chosen);
      CHECK(ra.chosen->element == rb.chosen->element);
      CHECK(ra.chosen->value >= ra.starting_best);
      // Every continuous class: best candidate at least as good as its start.
      for (TrialClass kind : {TrialClass::SL, TrialClass::APK, TrialClass::APW}) {
        double best = 0.0, st_v = 0.0;
        for (const auto& c : ra.candidates) {
          if (trial_class(c.element) != kind) continue;
          best = std::max(best, c.value);
          if (c.provenance == Provenance::Start) st_v = c.value;
        }
        CHECK(best >= st_v);
      }
      sa.step(ra.chosen->element, ra.chosen->column);
      sb.step(rb.chosen->element, rb.chosen->column);
    }
  }
}

TEST_CASE("whole-sphere Slepian functions reach the best harmonic") {
  std::mt19937_64 rng(28);
  const ForwardModel fm(instances::random_grid(rng, 120), 1.05);
  InfiniteDictionarySpec spec;
  spec.slepian_bandlimit = 3;
  spec.max_sh_degree = 3;
  spec.use_apk = spec.use_apw = false;
  LearnConfig lc = quick_config(800);
  lc.narrowing = 0.0;
  lc.local.ftol = 1e-15;
  lc.local.xtol = 1e-14;
  lc.local.max_iterations = 2000;
  PursuitConfig cfg;
  PursuitState st(fm, fm.column(ShElement{{3, 3}}), cfg);
  Learner learner(fm, spec, lc);
  const auto sh = learner.sh_candidate(st);
  const auto cands = learner.continuous_candidates(st, TrialClass::SL, std::nullopt);
  double best = 0.0;
  for (const auto& c : cands) best = std::max(best, c.value);
  CHECK(best >= sh->value * (1 - 1e-9));
}

TEST_CASE("learnt dictionary bookkeeping") {
  std::mt19937_64 rng(29);
  const ForwardModel fm(instances::random_grid(rng, 30), 1.1);
  PursuitConfig cfg;
  cfg.variant = Variant::ROFMP;
  cfg.noise_threshold = 0.0;
  const auto dict = instances::mixed_dictionary(rng, 20);
  PursuitState st(fm, instances::random_data(rng, fm, dict), cfg);
  std::vector<double> sel;
  for (std::size_t i : {2u, 17u, 9u}) {
    st.step(dict[i], fm.column(dict[i]));
    sel.push_back(st.chosen().back().alpha);
  }
  const auto ld = LearntDictionary::from_state(st, sel);
  REQUIRE(ld.entries.size() == 3);
  CHECK(ld.entries[1].element == dict[17]);
  CHECK(ld.entries[2].iteration == 3);
  CHECK(ld.entries[0].alpha_selected == sel[0]);
  CHECK(ld.entries[0].alpha_final == st.chosen()[0].alpha);
  CHECK(ld.max_sh_degree() == 3);  // dict[2] is Y_{1,1}, dict[9] is Y_{3,-3}
  CHECK(LearntDictionary{}.max_sh_degree() == -1);
}
