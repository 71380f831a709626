#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sphpursuit/forward.hpp"
#include "sphpursuit/trial_functions.hpp"

namespace sphpursuit {

enum class Variant { RFMP, ROFMP };
enum class LambdaSchedule { Stationary, NonStationary };

struct PursuitConfig {
  Variant variant = Variant::RFMP;
  double lambda0 = 0.0;
  /// When true the effective lambda is lambda0 * ||y||.
  bool lambda_relative = true;
  LambdaSchedule schedule = LambdaSchedule::Stationary;
  /// Stop once ||R|| / ||y|| <= noise_threshold.
  double noise_threshold = 0.05;
  int max_iterations = 1000;
  /// ROFMP: number of steps between restarts of the orthogonalization.
  int restart_period = 100;

  void validate() const;
};

enum class ObjectiveStatus { Ok, Degenerate, InSpan };

/// Everything the selection objective needs to know about a candidate d.
struct CandidateTerms {
  double tR = 0.0;     // <R, T d>
  double tt = 0.0;     // ||T d||^2
  Eigen::VectorXd a;   // Q^T T d over the current orthogonalization window
  Eigen::VectorXd k;   // Sobolev products <d_n, d> with every chosen element
  double s = 0.0;      // ||d||^2 in the Sobolev norm
  const double* column = nullptr;  // T d (model size entries), for exact projections
};

struct Objective {
  double value = 0.0;
  double A = 0.0;
  double B = 0.0;
  ObjectiveStatus status = ObjectiveStatus::Degenerate;
  Eigen::VectorXd beta;  // projection coefficients over the window (ROFMP)
  double projected_norm_sq = 0.0;

  bool ok() const { return status == ObjectiveStatus::Ok; }
};

/// Derivatives of a candidate's terms with respect to P parameters.
struct TermDerivatives {
  Eigen::MatrixXd dcolumn;  // size x P
  Eigen::MatrixXd dk;       // chosen x P
  Eigen::VectorXd ds;       // P
};

enum class StopReason { None, DataError, MaxIterations, Exhausted };
std::string to_string(StopReason r);

struct ChosenElement {
  DictionaryElement element;
  Eigen::VectorXd column;
  double alpha = 0.0;
  int iteration = 0;  // 1-based selection iteration
};

struct IterationRecord {
  int iteration = 0;
  DictionaryElement element;
  double alpha = 0.0;
  double objective = 0.0;
  double rel_data_error = 0.0;
  double tikhonov = 0.0;
  double wall_seconds = 0.0;
  bool restarted = false;
};

/// The R(O)FMP iteration state: residual, chosen elements with their
/// current coefficients, the Sobolev Gram matrix of the chosen elements and,
/// for ROFMP, the orthonormal basis of the projected columns of the current
/// window together with the triangular factor that maps Q^T t to the
/// projection coefficients beta.
class PursuitState {
 public:
  PursuitState(const ForwardModel& fm, Eigen::VectorXd y, PursuitConfig cfg);

  const ForwardModel& model() const { return *fm_; }
  const PursuitConfig& config() const { return cfg_; }
  const Eigen::VectorXd& data() const { return y_; }
  const Eigen::VectorXd& residual() const { return residual_; }
  double data_norm() const { return y_norm_; }
  int iteration() const { return static_cast<int>(chosen_.size()); }
  const std::vector<ChosenElement>& chosen() const { return chosen_; }
  Eigen::VectorXd coefficients() const;
  const Eigen::MatrixXd& gram() const { return gram_; }

  /// Index of the first chosen element in the current window.
  std::size_t window_start() const { return window_start_; }
  int window_size() const { return static_cast<int>(chosen_.size() - window_start_); }
  /// Orthonormal window basis (size x window_size).
  Eigen::MatrixXd window_basis() const { return Q_.leftCols(window_size()); }
  /// Number of restarts performed so far.
  int restarts() const { return restarts_; }
  /// Process-unique identity, used by caches keyed on a state.
  std::uint64_t id() const { return id_; }

  /// Regularization parameter used for the next selection.
  double lambda() const;

  /// Sobolev products of d with every chosen element.
  Eigen::VectorXd sobolev_products(const DictionaryElement& d) const;

  /// Computes all terms of d from scratch given its column.
  CandidateTerms terms(const DictionaryElement& d, const Eigen::VectorXd& column) const;

  /// RFMP or ROFMP objective, depending on the configured variant.
  Objective objective(const CandidateTerms& c) const;
  Objective rfmp_objective(const CandidateTerms& c) const;
  Objective rofmp_objective(const CandidateTerms& c) const;

  /// Gradient of objective(c).value given term derivatives.
  Eigen::VectorXd objective_gradient(const CandidateTerms& c, const Objective& o, const TermDerivatives& d) const;

  /// Q^T v over the current window.
  Eigen::VectorXd project_coefficients(const Eigen::VectorXd& v) const;
  /// v minus its projection onto the window span.
  Eigen::VectorXd project_out(const Eigen::VectorXd& v) const;

  /// Appends d with the optimal coefficient; returns the objective used.
  /// Throws std::invalid_argument for degenerate candidates.
  Objective step(const DictionaryElement& d, const Eigen::VectorXd& column);

  /// Clears the orthogonalization window and recomputes the residual.
  void restart();
  /// True when a ROFMP run should restart before the next selection.
  bool restart_due() const;

  /// ||R||^2 + lambda ||f||^2 (Sobolev) with the current lambda.
  double tikhonov_value() const;
  double tikhonov_value(double lambda) const;
  double rel_data_error() const;

  StopReason terminated() const;

 private:
  const ForwardModel* fm_;
  PursuitConfig cfg_;
  Eigen::VectorXd y_;
  double y_norm_;
  Eigen::VectorXd residual_;
  std::vector<ChosenElement> chosen_;
  Eigen::MatrixXd gram_;      // Sobolev Gram of chosen elements
  Eigen::VectorXd gram_alpha_;
  Eigen::MatrixXd Q_;         // size x restart_period
  Eigen::MatrixXd Rfac_;      // restart_period x restart_period, upper triangular
  Eigen::VectorXd QtR_;       // Q^T residual over the window
  std::size_t window_start_ = 0;
  int restarts_ = 0;
  std::uint64_t id_;
};

/// A finite dictionary with cached columns and incrementally maintained
/// candidate terms.
class FiniteDictionary {
 public:
  FiniteDictionary(std::vector<DictionaryElement> elements, const ForwardModel& fm);

  std::size_t size() const { return elements_.size(); }
  const DictionaryElement& element(std::size_t i) const { return elements_[i]; }
  const std::vector<DictionaryElement>& elements() const { return elements_; }
  Eigen::VectorXd column(std::size_t i) const { return columns_.col(static_cast<Eigen::Index>(i)); }

  struct Choice {
    std::size_t index = 0;
    Objective objective;
  };

  /// Objective of element i against the state (caches are synced first).
  Objective evaluate(const PursuitState& st, std::size_t i);
  /// Objectives of all elements in [0, limit).
  std::vector<Objective> evaluate_all(const PursuitState& st, std::size_t limit = std::numeric_limits<std::size_t>::max());

  /// Argmax over the first `limit` elements (replay mode uses limit = N).
  /// Ties go to the lowest index; empty when every candidate is degenerate
  /// or has zero objective.
  std::optional<Choice> argmax(const PursuitState& st, std::size_t limit = std::numeric_limits<std::size_t>::max());

  /// Terms of element i (after sync).
  CandidateTerms terms(const PursuitState& st, std::size_t i);

 private:
  void sync(const PursuitState& st);

  std::vector<DictionaryElement> elements_;
  Eigen::MatrixXd columns_;   // size x n
  Eigen::VectorXd col_norm_sq_;
  Eigen::VectorXd sob_norm_sq_;
  Eigen::MatrixXd sob_;       // chosen x n Sobolev products
  Eigen::MatrixXd proj_;      // window x n, Q^T columns
  int synced_chosen_ = 0;
  int synced_window_ = 0;
  int synced_restarts_ = 0;
  std::uint64_t synced_state_ = 0;
};

/// Sobolev products of e with every harmonic of degree <= max_degree,
/// indexed linearly.
Eigen::VectorXd sobolev_with_harmonics(const DictionaryElement& e, int max_degree);

}  // namespace sphpursuit
