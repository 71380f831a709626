#include "sphpursuit/learn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sphpursuit/detail/kernel_sums.hpp"
#include "sphpursuit/dual.hpp"
#include "sphpursuit/slepian.hpp"

namespace sphpursuit {

void InfiniteDictionarySpec::validate() const {
  if (max_sh_degree < 0) throw std::invalid_argument("maximal SH degree must be non-negative");
  if (slepian_bandlimit < 0) throw std::invalid_argument("Slepian band-limit must be non-negative");
  if (!(use_sh || use_sl || use_apk || use_apw)) throw std::invalid_argument("no trial-function class enabled");
}

bool InfiniteDictionarySpec::enabled(TrialClass c) const {
  switch (c) {
    case TrialClass::SH: return use_sh;
    case TrialClass::SL: return use_sl;
    case TrialClass::APK: return use_apk;
    case TrialClass::APW: return use_apw;
  }
  return false;
}

void LearnConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("avoidance radius must be positive");
  if (!(narrowing >= 0.0 && narrowing < 0.1)) throw std::invalid_argument("domain narrowing out of range");
  if (global.max_evaluations < 1 || !(global.max_seconds > 0.0)) throw std::invalid_argument("global budget must be positive");
  if (local.max_iterations < 1) throw std::invalid_argument("local budget must be positive");
  if (!(sl_fd_step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
}

double spline_factor(double tau, double epsilon) {
  if (tau <= epsilon) return 0.0;
  if (tau >= 2.0 * epsilon) return 1.0;
  const double u = tau / epsilon - 1.0;
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double spline_factor_derivative(double tau, double epsilon) {
  if (tau <= epsilon || tau >= 2.0 * epsilon) return 0.0;
  const double u = tau / epsilon - 1.0;
  return 30.0 * u * u * (1.0 - u) * (1.0 - u) / epsilon;
}

double spline_penalty(const Eigen::VectorXd& z, const std::vector<Eigen::VectorXd>& history, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("avoidance radius must be positive");
  double p = 1.0;
  for (const auto& h : history) {
    p *= spline_factor((z - h).squaredNorm(), epsilon);
    if (p == 0.0) break;
  }
  return p;
}

Eigen::VectorXd spline_vector(const DictionaryElement& e) {
  if (const auto* sl = std::get_if<SlepianElement>(&e))
    return Eigen::Vector4d(sl->region.c, sl->region.alpha, sl->region.beta, sl->region.gamma);
  const BallPoint* x = nullptr;
  if (const auto* k = std::get_if<ApkElement>(&e)) x = &k->x;
  else if (const auto* w = std::get_if<ApwElement>(&e)) x = &w->x;
  else throw std::invalid_argument("harmonics carry no spline vector");
  return Eigen::Vector3d(x->cart()[0], x->cart()[1], x->cart()[2]);
}

Eigen::VectorXd parameters(const DictionaryElement& e) {
  if (std::holds_alternative<SlepianElement>(e)) return spline_vector(e);
  const BallPoint* x = nullptr;
  if (const auto* k = std::get_if<ApkElement>(&e)) x = &k->x;
  else if (const auto* w = std::get_if<ApwElement>(&e)) x = &w->x;
  else throw std::invalid_argument("harmonics have no continuous parameters");
  return Eigen::Vector3d(x->r(), x->phi(), x->t());
}

Box parameter_box(TrialClass kind, const LearnConfig& lc) {
  const double d = lc.narrowing;
  if (kind == TrialClass::SL)
    return Box(Eigen::Vector4d(-1.0 + d, d, d, d), Eigen::Vector4d(1.0 - d, kTwoPi - d, kPi - d, kTwoPi - d),
               {false, true, false, true});
  if (kind == TrialClass::SH) throw std::invalid_argument("harmonics have no parameter box");
  return Box(Eigen::Vector3d(d, d, -1.0 + d), Eigen::Vector3d(1.0 - d, kTwoPi - d, 1.0 - d), {false, true, false});
}

DictionaryElement element_at(TrialClass kind, const Eigen::VectorXd& z, int slepian_k, int slepian_L) {
  switch (kind) {
    case TrialClass::APK: return ApkElement{BallPoint(z[0], z[1], z[2]), true};
    case TrialClass::APW: return ApwElement{BallPoint(z[0], z[1], z[2]), true};
    case TrialClass::SL: return make_slepian({z[0], z[1], z[2], z[3]}, slepian_k, slepian_L);
    case TrialClass::SH: break;
  }
  throw std::invalid_argument("harmonics have no continuous parameters");
}

std::vector<Eigen::VectorXd> spline_history(const PursuitState& st, TrialClass kind) {
  std::vector<Eigen::VectorXd> h;
  if (st.config().variant != Variant::ROFMP || kind == TrialClass::SH) return h;
  const auto& ch = st.chosen();
  for (std::size_t i = st.window_start(); i < ch.size(); ++i)
    if (trial_class(ch[i].element) == kind) h.push_back(spline_vector(ch[i].element));
  return h;
}

namespace {

double spline_of(const PursuitState& st, const DictionaryElement& d, double epsilon) {
  const TrialClass kind = trial_class(d);
  if (st.config().variant != Variant::ROFMP || kind == TrialClass::SH) return 1.0;
  return spline_penalty(spline_vector(d), spline_history(st, kind), epsilon);
}

}  // namespace

double learning_value(const PursuitState& st, const DictionaryElement& d, const Eigen::VectorXd& column,
                      double epsilon, Objective* plain) {
  const Objective o = st.objective(st.terms(d, column));
  if (plain) *plain = o;
  if (!o.ok()) return 0.0;
  return o.value * spline_of(st, d, epsilon);
}

// ---------------------------------------------------------------------------

ContinuousObjective::ContinuousObjective(const PursuitState& st, TrialClass kind, const InfiniteDictionarySpec& spec,
                                         const LearnConfig& lc)
    : st_(&st),
      kind_(kind),
      L_(spec.slepian_bandlimit),
      epsilon_(lc.epsilon),
      fd_step_(lc.sl_fd_step),
      box_(parameter_box(kind, lc)),
      use_spline_(st.config().variant == Variant::ROFMP),
      history_(spline_history(st, kind)) {
  if (kind_ != TrialClass::SL) return;
  const auto table = st.model().sh_table(L_);
  const Eigen::Index n = sh_count(L_);
  const auto T = table->leftCols(n);
  h_tR_ = T.transpose() * st.residual();
  h_tt_ = T.transpose() * T;
  h_a_ = st.config().variant == Variant::ROFMP && st.window_size() > 0 ? Eigen::MatrixXd(st.window_basis().transpose() * T)
                                                                         : Eigen::MatrixXd(0, n);
  h_k_.resize(st.iteration(), n);
  for (int i = 0; i < st.iteration(); ++i)
    h_k_.row(i) = sobolev_with_harmonics(st.chosen()[static_cast<std::size_t>(i)].element, L_).transpose();
  h_w_.resize(n);
  for (int l = 0; l <= L_; ++l) h_w_.segment(l * l, 2 * l + 1).setConstant(PenaltyNorm::weight(l));
}

double ContinuousObjective::plain_cartesian(const Vec3& x, Eigen::Vector3d* grad) const {
  if (kind_ != TrialClass::APK && kind_ != TrialClass::APW) throw std::logic_error("not a kernel class");
  const PursuitState& st = *st_;
  Eigen::MatrixXd dcol;
  const Eigen::VectorXd col = st.model().kernel_column(kind_, x, true, grad ? &dcol : nullptr);
  CandidateTerms c;
  c.tR = col.dot(st.residual());
  c.tt = col.squaredNorm();
  c.a = st.project_coefficients(col);
  c.column = col.data();
  const auto& chosen = st.chosen();
  const Eigen::Index N = static_cast<Eigen::Index>(chosen.size());
  c.k.resize(N);
  TermDerivatives td;
  if (!grad) {
    const detail::KernelCandidate<double> kc{kind_, x, true};
    for (Eigen::Index i = 0; i < N; ++i)
      c.k[i] = detail::sobolev_with_candidate(chosen[static_cast<std::size_t>(i)].element, kc);
    c.s = detail::candidate_sobolev_norm_sq(kc);
  } else {
    using D3 = Dual<3>;
    const detail::KernelCandidate<D3> kc{kind_, {D3::variable(x[0], 0), D3::variable(x[1], 1), D3::variable(x[2], 2)}, true};
    td.dk.resize(N, 3);
    for (Eigen::Index i = 0; i < N; ++i) {
      const D3 v = detail::sobolev_with_candidate(chosen[static_cast<std::size_t>(i)].element, kc);
      c.k[i] = v.v;
      for (int j = 0; j < 3; ++j) td.dk(i, j) = v.d[j];
    }
    const D3 s = detail::candidate_sobolev_norm_sq(kc);
    c.s = s.v;
    td.ds = Eigen::Vector3d(s.d[0], s.d[1], s.d[2]);
    td.dcolumn = std::move(dcol);
  }
  const Objective o = st.objective(c);
  if (!o.ok()) {
    if (grad) grad->setZero();
    return 0.0;
  }
  if (grad) *grad = st.objective_gradient(c, o, td);
  return o.value;
}

double ContinuousObjective::kernel_value(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  const BallPoint bp(z[0], z[1], z[2]);
  const Vec3& x = bp.cart();
  Eigen::Vector3d gx;
  const double plain = plain_cartesian(x, grad ? &gx : nullptr);
  double spline = 1.0;
  Eigen::Vector3d gs = Eigen::Vector3d::Zero();
  if (use_spline_) {
    const Eigen::Vector3d xv(x[0], x[1], x[2]);
    std::vector<double> factors, slopes;
    for (const auto& h : history_) {
      const double tau = (xv - h).squaredNorm();
      factors.push_back(spline_factor(tau, epsilon_));
      slopes.push_back(spline_factor_derivative(tau, epsilon_));
      spline *= factors.back();
    }
    if (grad) {
      for (std::size_t i = 0; i < history_.size(); ++i) {
        double others = 1.0;
        for (std::size_t j = 0; j < history_.size(); ++j)
          if (j != i) others *= factors[j];
        gs += slopes[i] * others * 2.0 * (xv - history_[i]);
      }
    }
  }
  if (grad) {
    const Eigen::Vector3d g = gx * spline + plain * gs;
    const double r = bp.r(), phi = bp.phi(), t = bp.t();
    const double s = std::sqrt((1.0 - t) * (1.0 + t));
    const double cp = std::cos(phi), sp = std::sin(phi);
    Eigen::Matrix3d J;
    J.col(0) << s * cp, s * sp, t;
    J.col(1) << -r * s * sp, r * s * cp, 0.0;
    J.col(2) << -r * t * cp / s, -r * t * sp / s, r;
    *grad = J.transpose() * g;
  }
  return plain * spline;
}

Eigen::MatrixXd ContinuousObjective::slepian_members(const Eigen::VectorXd& z) const {
  const auto basis = polar_cap(L_, z[0]);
  const auto blocks = sh_rotation_blocks(L_, euler_rotation(z[1], z[2], z[3]));
  const Eigen::Index n = sh_count(L_);
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& g = basis->functions[static_cast<std::size_t>(k)];
    for (int l = 0; l <= L_; ++l) {
      Eigen::VectorXd in(2 * l + 1);
      for (int m = -l; m <= l; ++m) in[m + l] = g[{l, -m}];
      const Eigen::VectorXd rot = blocks[static_cast<std::size_t>(l)] * in;
      for (int m = -l; m <= l; ++m) G(ShIndex{l, -m}.linear(), k) = rot[m + l];
    }
  }
  return G;
}

double ContinuousObjective::slepian_value(const Eigen::MatrixXd& G, int k) const {
  const Eigen::VectorXd g = G.col(k - 1);
  CandidateTerms c;
  c.tR = g.dot(h_tR_);
  c.tt = g.dot(h_tt_ * g);
  c.a = h_a_ * g;
  c.k = h_k_ * g;
  c.s = g.dot(h_w_.cwiseProduct(g));
  const Objective o = st_->objective(c);
  return o.ok() ? o.value : 0.0;
}

double ContinuousObjective::best_member(const Eigen::VectorXd& z, int* k) const {
  if (kind_ != TrialClass::SL) throw std::logic_error("best_member needs the Slepian class");
  const Eigen::MatrixXd G = slepian_members(z);
  double best = -1.0;
  int best_k = 1;
  for (int m = 1; m <= G.cols(); ++m) {
    const double v = slepian_value(G, m);
    if (v > best) {
      best = v;
      best_k = m;
    }
  }
  if (k) *k = best_k;
  return best * (use_spline_ ? spline_penalty(z, history_, epsilon_) : 1.0);
}

double ContinuousObjective::operator()(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  if (kind_ != TrialClass::SL) return kernel_value(z, grad);
  const double v = slepian_value(slepian_members(z), member_) * (use_spline_ ? spline_penalty(z, history_, epsilon_) : 1.0);
  if (grad) *grad = fd_gradient([this](const Eigen::VectorXd& p) { return (*this)(p, nullptr); }, box_, z, fd_step_);
  return v;
}

// ---------------------------------------------------------------------------

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Harmonic: return "harmonic";
    case Provenance::Start: return "start";
    case Provenance::Global: return "global";
    case Provenance::Local: return "local";
  }
  return "?";
}

namespace {

std::vector<DictionaryElement> starting_elements(const InfiniteDictionarySpec& spec, std::vector<DictionaryElement> extra) {
  spec.validate();
  std::vector<DictionaryElement> out;
  if (spec.use_sh)
    for (int n = 0; n <= spec.max_sh_degree; ++n)
      for (int j = -n; j <= n; ++j) out.push_back(ShElement{{n, j}});
  for (auto& e : extra) {
    const TrialClass c = trial_class(e);
    if (c == TrialClass::SH) continue;  // every harmonic up to Nbar is already present
    if (!spec.enabled(c)) continue;
    if (const auto* sl = std::get_if<SlepianElement>(&e); sl && sl->L != spec.slepian_bandlimit)
      throw std::invalid_argument("starting Slepian function with a band-limit other than L");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

Learner::Learner(const ForwardModel& fm, InfiniteDictionarySpec spec, LearnConfig lc, std::vector<DictionaryElement> start)
    : fm_(&fm), spec_(spec), lc_(lc), start_(starting_elements(spec, std::move(start)), fm) {
  lc_.validate();
}

std::optional<Candidate> Learner::sh_candidate(const PursuitState& st) {
  if (!spec_.use_sh) return std::nullopt;
  const std::size_t nsh = static_cast<std::size_t>(sh_count(spec_.max_sh_degree));
  const auto objs = start_.evaluate_all(st, nsh);
  std::optional<Candidate> best;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].ok() || !(objs[i].value > 0.0)) continue;
    if (!best || objs[i].value > best->value)
      best = Candidate{start_.element(i), Provenance::Harmonic, objs[i].value, objs[i], Eigen::VectorXd()};
  }
  if (best) best->column = fm_->sh_table(spec_.max_sh_degree)->col(std::get<ShElement>(best->element).idx.linear());
  return best;
}

std::vector<Candidate> Learner::continuous_candidates(const PursuitState& st, TrialClass kind,
                                                      const std::optional<Candidate>& start) {
  ContinuousObjective f(st, kind, spec_, lc_);
  const Box& box = f.box();
  std::vector<Candidate> out;
  auto make = [&](const Eigen::VectorXd& z, int k, Provenance p) {
    Candidate c;
    c.element = element_at(kind, z, k, spec_.slepian_bandlimit);
    c.provenance = p;
    c.column = fm_->column(c.element);
    c.value = learning_value(st, c.element, c.column, lc_.epsilon, &c.objective);
    return c;
  };

  OptimizeResult glob;
  int k_global = 1;
  if (kind == TrialClass::SL) {
    glob = global_maximize([&](const Eigen::VectorXd& z) { return f.best_member(z, nullptr); }, box, lc_.global);
    f.best_member(glob.x, &k_global);
  } else {
    glob = global_maximize([&](const Eigen::VectorXd& z) { return f(z, nullptr); }, box, lc_.global);
  }
  const Candidate global_c = make(glob.x, k_global, Provenance::Global);

  // The local ascent starts from the global solution unless the start is better.
  Eigen::VectorXd z0 = glob.x;
  if (start && start->value > global_c.value) z0 = box.project(parameters(start->element));
  OptimizeResult loc;
  int k_local = 1;
  if (kind == TrialClass::SL) {
    const ScalarFn best = [&](const Eigen::VectorXd& z) { return f.best_member(z, nullptr); };
    loc = local_maximize(
        [&](const Eigen::VectorXd& z, Eigen::VectorXd* g) {
          if (g) *g = fd_gradient(best, box, z, lc_.sl_fd_step);
          return best(z);
        },
        box, z0, lc_.local);
    f.best_member(loc.x, &k_local);
  } else {
    loc = local_maximize([&](const Eigen::VectorXd& z, Eigen::VectorXd* g) { return f(z, g); }, box, z0, lc_.local);
  }
  out.push_back(make(loc.x, k_local, Provenance::Local));
  out.push_back(global_c);
  return out;
}

LearnStepResult Learner::step(const PursuitState& st) {
  LearnStepResult res;
  const auto objs = start_.evaluate_all(st);
  std::vector<double> values(objs.size(), 0.0);
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!objs[i].ok()) continue;
    values[i] = objs[i].value * spline_of(st, start_.element(i), lc_.epsilon);
    res.starting_best = std::max(res.starting_best, values[i]);
  }
  if (auto sh = sh_candidate(st)) res.candidates.push_back(std::move(*sh));
  for (TrialClass kind : {TrialClass::SL, TrialClass::APK, TrialClass::APW}) {
    if (!spec_.enabled(kind)) continue;
    std::optional<Candidate> start;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      if (trial_class(start_.element(i)) != kind || !(values[i] > 0.0)) continue;
      if (!start || values[i] > start->value) start = Candidate{start_.element(i), Provenance::Start, values[i], objs[i], start_.column(i)};
    }
    for (auto& c : continuous_candidates(st, kind, start)) res.candidates.push_back(std::move(c));
    if (start) res.candidates.push_back(std::move(*start));
  }
  for (const auto& c : res.candidates) {
    if (!c.objective.ok() || !(c.value > 0.0)) continue;
    if (!res.chosen || c.value > res.chosen->value) res.chosen = c;
  }
  return res;
}

// ---------------------------------------------------------------------------

std::vector<DictionaryElement> LearntDictionary::elements() const {
  std::vector<DictionaryElement> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.element);
  return out;
}

int LearntDictionary::max_sh_degree() const {
  int nu = -1;
  for (const auto& e : entries)
    if (const auto* sh = std::get_if<ShElement>(&e.element)) nu = std::max(nu, sh->idx.n);
  return nu;
}

LearntDictionary LearntDictionary::from_state(const PursuitState& st, const std::vector<double>& alpha_selected) {
  LearntDictionary d;
  const auto& ch = st.chosen();
  for (std::size_t i = 0; i < ch.size(); ++i)
    d.entries.push_back({ch[i].element, ch[i].iteration, i < alpha_selected.size() ? alpha_selected[i] : ch[i].alpha,
                         ch[i].alpha});
  return d;
}

}  // namespace sphpursuit
