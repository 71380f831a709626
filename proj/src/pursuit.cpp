#include "sphpursuit/pursuit.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "sphpursuit/harmonics.hpp"

namespace sphpursuit {

namespace {

using ConstMap = Eigen::Map<const Eigen::VectorXd>;

// Relative size of a projected column below which the candidate counts as
// lying in the span of the window.
constexpr double kInSpanRelative = 1e-12;
constexpr double kDegenerateB = 1e-14;

}  // namespace

void PursuitConfig::validate() const {
  if (!(lambda0 >= 0.0)) throw std::invalid_argument("lambda0 must be non-negative");
  if (!(noise_threshold >= 0.0)) throw std::invalid_argument("noise threshold must be non-negative");
  if (max_iterations < 0) throw std::invalid_argument("max_iterations must be non-negative");
  if (restart_period < 1) throw std::invalid_argument("restart period must be at least 1");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "running";
    case StopReason::DataError: return "data_error";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::Exhausted: return "dictionary_exhausted";
  }
  return "?";
}

PursuitState::PursuitState(const ForwardModel& fm, Eigen::VectorXd y, PursuitConfig cfg)
    : fm_(&fm), cfg_(cfg), y_(std::move(y)) {
  static std::atomic<std::uint64_t> next_id{1};
  id_ = next_id++;
  cfg_.validate();
  if (static_cast<std::size_t>(y_.size()) != fm.size())
    throw std::invalid_argument("data vector length does not match the grid");
  y_norm_ = y_.norm();
  residual_ = y_;
  gram_alpha_.resize(0);
  if (cfg_.variant == Variant::ROFMP) {
    Q_.resize(y_.size(), cfg_.restart_period);
    Rfac_ = Eigen::MatrixXd::Zero(cfg_.restart_period, cfg_.restart_period);
  }
}

Eigen::VectorXd PursuitState::coefficients() const {
  Eigen::VectorXd a(chosen_.size());
  for (std::size_t i = 0; i < chosen_.size(); ++i) a[static_cast<Eigen::Index>(i)] = chosen_[i].alpha;
  return a;
}

double PursuitState::lambda() const {
  double l = cfg_.lambda0 * (cfg_.lambda_relative ? y_norm_ : 1.0);
  if (cfg_.schedule == LambdaSchedule::NonStationary) l /= static_cast<double>(chosen_.size() + 1);
  return l;
}

Eigen::VectorXd PursuitState::sobolev_products(const DictionaryElement& d) const {
  Eigen::VectorXd k(chosen_.size());
  for (std::size_t i = 0; i < chosen_.size(); ++i)
    k[static_cast<Eigen::Index>(i)] = inner_sobolev(chosen_[i].element, d);
  return k;
}

Eigen::VectorXd PursuitState::project_coefficients(const Eigen::VectorXd& v) const {
  const int M = window_size();
  if (cfg_.variant != Variant::ROFMP || M == 0) return Eigen::VectorXd(0);
  return Q_.leftCols(M).transpose() * v;
}

Eigen::VectorXd PursuitState::project_out(const Eigen::VectorXd& v) const {
  const int M = window_size();
  if (cfg_.variant != Variant::ROFMP || M == 0) return v;
  const auto Q = Q_.leftCols(M);
  Eigen::VectorXd p = v - Q * (Q.transpose() * v);
  p -= Q * (Q.transpose() * p);
  return p;
}

CandidateTerms PursuitState::terms(const DictionaryElement& d, const Eigen::VectorXd& column) const {
  CandidateTerms c;
  c.tR = column.dot(residual_);
  c.tt = column.squaredNorm();
  c.a = project_coefficients(column);
  c.k = sobolev_products(d);
  c.s = sobolev_norm_sq(d);
  c.column = column.data();
  return c;
}

Objective PursuitState::objective(const CandidateTerms& c) const {
  return cfg_.variant == Variant::ROFMP ? rofmp_objective(c) : rfmp_objective(c);
}

Objective PursuitState::rfmp_objective(const CandidateTerms& c) const {
  Objective o;
  const double lam = lambda();
  const Eigen::VectorXd alpha = coefficients();
  o.A = c.tR - (lam != 0.0 && alpha.size() ? lam * alpha.dot(c.k) : 0.0);
  o.B = c.tt + lam * c.s;
  o.projected_norm_sq = c.tt;
  if (!(o.B > kDegenerateB)) {
    o.status = ObjectiveStatus::Degenerate;
    return o;
  }
  o.status = ObjectiveStatus::Ok;
  o.value = o.A * o.A / o.B;
  return o;
}

Objective PursuitState::rofmp_objective(const CandidateTerms& c) const {
  const int M = window_size();
  if (M == 0) return rfmp_objective(c);
  Objective o;
  const double lam = lambda();
  double pn2 = c.tt - c.a.squaredNorm();
  if (pn2 < 1e-6 * c.tt && c.column) {
    const Eigen::VectorXd t = ConstMap(c.column, y_.size());
    pn2 = project_out(t).squaredNorm();
  }
  o.projected_norm_sq = pn2;
  if (!(pn2 > kInSpanRelative * kInSpanRelative * c.tt) || !(c.tt > 0.0)) {
    o.status = ObjectiveStatus::InSpan;
    return o;
  }
  const auto R = Rfac_.topLeftCorner(M, M).triangularView<Eigen::Upper>();
  o.beta = R.solve(c.a);
  const std::size_t w0 = window_start_;
  const Eigen::VectorXd alpha = coefficients();
  double A = c.tR - QtR_.dot(c.a);
  double pen = 0.0;
  if (lam != 0.0) {
    const Eigen::VectorXd kw = c.k.segment(static_cast<Eigen::Index>(w0), M);
    const Eigen::MatrixXd Gw = gram_.block(static_cast<Eigen::Index>(w0), static_cast<Eigen::Index>(w0), M, M);
    const Eigen::VectorXd galpha_w = gram_alpha_.segment(static_cast<Eigen::Index>(w0), M);
    A -= lam * (alpha.dot(c.k) - o.beta.dot(galpha_w));
    pen = c.s - 2.0 * o.beta.dot(kw) + o.beta.dot(Gw * o.beta);
    if (pen < 0.0) pen = 0.0;
  }
  o.A = A;
  o.B = pn2 + lam * pen;
  if (!(o.B > kDegenerateB)) {
    o.status = ObjectiveStatus::Degenerate;
    return o;
  }
  o.status = ObjectiveStatus::Ok;
  o.value = o.A * o.A / o.B;
  return o;
}

Eigen::VectorXd PursuitState::objective_gradient(const CandidateTerms& c, const Objective& o,
                                                 const TermDerivatives& d) const {
  if (!c.column) throw std::invalid_argument("objective gradient needs the candidate column");
  const Eigen::Index P = d.dcolumn.cols();
  if (!o.ok()) return Eigen::VectorXd::Zero(P);
  const ConstMap t(c.column, y_.size());
  const double lam = lambda();
  const Eigen::VectorXd alpha = coefficients();
  const int M = (cfg_.variant == Variant::ROFMP) ? window_size() : 0;
  Eigen::VectorXd dA = d.dcolumn.transpose() * residual_;
  Eigen::VectorXd dB = 2.0 * (d.dcolumn.transpose() * t);
  if (lam != 0.0 && alpha.size()) dA -= lam * (d.dk.transpose() * alpha);
  if (lam != 0.0) dB += lam * d.ds;
  if (M > 0) {
    const auto Q = Q_.leftCols(M);
    const Eigen::MatrixXd da = Q.transpose() * d.dcolumn;  // M x P
    const Eigen::MatrixXd dbeta = Rfac_.topLeftCorner(M, M).triangularView<Eigen::Upper>().solve(da);
    dA -= da.transpose() * QtR_;
    dB -= 2.0 * (da.transpose() * c.a);
    if (lam != 0.0) {
      const auto w0 = static_cast<Eigen::Index>(window_start_);
      const Eigen::VectorXd kw = c.k.segment(w0, M);
      const Eigen::MatrixXd dkw = d.dk.middleRows(w0, M);
      const Eigen::MatrixXd Gw = gram_.block(w0, w0, M, M);
      dA += lam * (dbeta.transpose() * gram_alpha_.segment(w0, M));
      dB += lam * (-2.0 * (dbeta.transpose() * kw + dkw.transpose() * o.beta) + 2.0 * (dbeta.transpose() * (Gw * o.beta)));
    }
  }
  return (2.0 * o.A * o.B * dA - o.A * o.A * dB) / (o.B * o.B);
}

bool PursuitState::restart_due() const {
  return cfg_.variant == Variant::ROFMP && window_size() >= cfg_.restart_period;
}

Objective PursuitState::step(const DictionaryElement& d, const Eigen::VectorXd& column) {
  if (static_cast<std::size_t>(column.size()) != fm_->size()) throw std::invalid_argument("column length mismatch");
  if (restart_due()) restart();
  const CandidateTerms c = terms(d, column);
  const Objective o = objective(c);
  if (!o.ok()) throw std::invalid_argument("cannot step with a degenerate candidate");
  const double alpha = o.A / o.B;
  const int M = (cfg_.variant == Variant::ROFMP) ? window_size() : 0;
  if (cfg_.variant == Variant::ROFMP) {
    const auto Q = Q_.leftCols(M);
    Eigen::VectorXd coef = Q.transpose() * column;
    Eigen::VectorXd p = column - Q * coef;
    const Eigen::VectorXd again = Q.transpose() * p;
    p -= Q * again;
    coef += again;
    const double rho = p.norm();
    residual_ -= alpha * p;
    for (int m = 0; m < M; ++m) chosen_[window_start_ + m].alpha -= alpha * o.beta[m];
    Q_.col(M) = p / rho;
    Rfac_.col(M).setZero();
    Rfac_.col(M).head(M) = coef;
    Rfac_(M, M) = rho;
  } else {
    residual_ -= alpha * column;
  }
  chosen_.push_back({d, column, alpha, static_cast<int>(chosen_.size()) + 1});
  const Eigen::Index N = static_cast<Eigen::Index>(chosen_.size());
  gram_.conservativeResize(N, N);
  gram_.row(N - 1).head(N - 1) = c.k.transpose();
  gram_.col(N - 1).head(N - 1) = c.k;
  gram_(N - 1, N - 1) = c.s;
  gram_alpha_ = gram_ * coefficients();
  if (cfg_.variant == Variant::ROFMP) QtR_ = Q_.leftCols(window_size()).transpose() * residual_;
  return o;
}

void PursuitState::restart() {
  residual_ = y_;
  for (const auto& ch : chosen_) residual_ -= ch.alpha * ch.column;
  window_start_ = chosen_.size();
  QtR_.resize(0);
  ++restarts_;
}

double PursuitState::tikhonov_value() const { return tikhonov_value(lambda()); }

double PursuitState::tikhonov_value(double lam) const {
  double v = residual_.squaredNorm();
  if (!chosen_.empty() && lam != 0.0) v += lam * coefficients().dot(gram_alpha_);
  return v;
}

double PursuitState::rel_data_error() const { return y_norm_ > 0.0 ? residual_.norm() / y_norm_ : 0.0; }

StopReason PursuitState::terminated() const {
  if (rel_data_error() <= cfg_.noise_threshold) return StopReason::DataError;
  if (iteration() >= cfg_.max_iterations) return StopReason::MaxIterations;
  return StopReason::None;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd sobolev_with_harmonics(const DictionaryElement& e, int max_degree) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sh_count(max_degree));
  if (const auto* sh = std::get_if<ShElement>(&e)) {
    if (sh->idx.n <= max_degree) out[sh->idx.linear()] = PenaltyNorm::weight(sh->idx.n);
    return out;
  }
  if (const auto* sl = std::get_if<SlepianElement>(&e)) {
    for (int n = 0; n <= std::min(max_degree, sl->L); ++n)
      for (int k = n * n; k < (n + 1) * (n + 1); ++k) out[k] = PenaltyNorm::weight(n) * sl->coeffs.table[k];
    return out;
  }
  // Kernels: weight(n) * profile(n) * Y_{n,j}(direction) / norm.
  const BallPoint& x = std::holds_alternative<ApkElement>(e) ? std::get<ApkElement>(e).x : std::get<ApwElement>(e).x;
  const TrialClass kind = trial_class(e);
  const bool normalized =
      std::holds_alternative<ApkElement>(e) ? std::get<ApkElement>(e).normalized : std::get<ApwElement>(e).normalized;
  const double scale = normalized ? 1.0 / kernel_l2_norm(kind, x.r()) : 1.0;
  const std::vector<double> y = eval_sh_all(max_degree, x.direction());
  for (int n = 0; n <= max_degree; ++n) {
    const double f = PenaltyNorm::weight(n) * kernel_profile(kind, x.r(), n) * scale;
    for (int k = n * n; k < (n + 1) * (n + 1); ++k) out[k] = f * y[k];
  }
  return out;
}

FiniteDictionary::FiniteDictionary(std::vector<DictionaryElement> elements, const ForwardModel& fm)
    : elements_(std::move(elements)) {
  const Eigen::Index n = static_cast<Eigen::Index>(elements_.size());
  columns_.resize(static_cast<Eigen::Index>(fm.size()), n);
  int max_sh = -1;
  for (const auto& e : elements_)
    if (const auto* sh = std::get_if<ShElement>(&e)) max_sh = std::max(max_sh, sh->idx.n);
  std::shared_ptr<const Eigen::MatrixXd> table;
  if (max_sh >= 0) table = fm.sh_table(max_sh);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& e = elements_[static_cast<std::size_t>(i)];
    if (const auto* sh = std::get_if<ShElement>(&e))
      columns_.col(i) = table->col(sh->idx.linear());
    else
      columns_.col(i) = fm.column(e);
  }
  col_norm_sq_ = columns_.colwise().squaredNorm().transpose();
  sob_norm_sq_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) sob_norm_sq_[i] = sobolev_norm_sq(elements_[static_cast<std::size_t>(i)]);
}

void FiniteDictionary::sync(const PursuitState& st) {
  const Eigen::Index n = static_cast<Eigen::Index>(elements_.size());
  if (synced_state_ != st.id() || st.iteration() < synced_chosen_) {
    synced_state_ = st.id();
    synced_chosen_ = 0;
    synced_window_ = 0;
    synced_restarts_ = st.restarts();
    sob_.resize(0, n);
    proj_.resize(0, n);
  }
  const int N = st.iteration();
  if (N > synced_chosen_) {
    int max_sh = -1;
    for (const auto& e : elements_)
      if (const auto* sh = std::get_if<ShElement>(&e)) max_sh = std::max(max_sh, sh->idx.n);
    sob_.conservativeResize(N, n);
    for (int r = synced_chosen_; r < N; ++r) {
      const auto& d = st.chosen()[static_cast<std::size_t>(r)].element;
      Eigen::VectorXd with_sh;
      if (max_sh >= 0) with_sh = sobolev_with_harmonics(d, max_sh);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& e = elements_[static_cast<std::size_t>(i)];
        if (const auto* sh = std::get_if<ShElement>(&e))
          sob_(r, i) = with_sh[sh->idx.linear()];
        else
          sob_(r, i) = inner_sobolev(d, e);
      }
    }
    synced_chosen_ = N;
  }
  if (st.restarts() != synced_restarts_) {
    synced_restarts_ = st.restarts();
    synced_window_ = 0;
    proj_.resize(0, n);
  }
  const int M = st.config().variant == Variant::ROFMP ? st.window_size() : 0;
  if (M > synced_window_) {
    const Eigen::MatrixXd Q = st.window_basis();
    proj_.conservativeResize(M, n);
    proj_.bottomRows(M - synced_window_) = Q.rightCols(M - synced_window_).transpose() * columns_;
    synced_window_ = M;
  }
}

CandidateTerms FiniteDictionary::terms(const PursuitState& st, std::size_t i) {
  sync(st);
  const auto j = static_cast<Eigen::Index>(i);
  CandidateTerms c;
  c.tR = columns_.col(j).dot(st.residual());
  c.tt = col_norm_sq_[j];
  c.a = proj_.col(j).head(synced_window_);
  c.k = sob_.col(j).head(synced_chosen_);
  c.s = sob_norm_sq_[j];
  c.column = columns_.col(j).data();
  return c;
}

Objective FiniteDictionary::evaluate(const PursuitState& st, std::size_t i) { return st.objective(terms(st, i)); }

std::vector<Objective> FiniteDictionary::evaluate_all(const PursuitState& st, std::size_t limit) {
  sync(st);
  const std::size_t n = std::min(limit, elements_.size());
  const Eigen::VectorXd tR = columns_.leftCols(static_cast<Eigen::Index>(n)).transpose() * st.residual();
  std::vector<Objective> out(n);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto j = static_cast<Eigen::Index>(ii);
    CandidateTerms c;
    c.tR = tR[j];
    c.tt = col_norm_sq_[j];
    c.a = proj_.col(j).head(synced_window_);
    c.k = sob_.col(j).head(synced_chosen_);
    c.s = sob_norm_sq_[j];
    c.column = columns_.col(j).data();
    out[static_cast<std::size_t>(ii)] = st.objective(c);
  }
  return out;
}

std::optional<FiniteDictionary::Choice> FiniteDictionary::argmax(const PursuitState& st, std::size_t limit) {
  const auto all = evaluate_all(st, limit);
  std::optional<Choice> best;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (!all[i].ok() || !(all[i].value > 0.0)) continue;
    if (!best || all[i].value > best->objective.value) best = Choice{i, all[i]};
  }
  return best;
}

}  // namespace sphpursuit
