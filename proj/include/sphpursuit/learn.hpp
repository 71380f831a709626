#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sphpursuit/optimize.hpp"
#include "sphpursuit/pursuit.hpp"

namespace sphpursuit {

/// Which trial-function classes the learner may draw from, and their
/// discrete parameters.
struct InfiniteDictionarySpec {
  int max_sh_degree = 100;    // Nbar
  int slepian_bandlimit = 5;  // L
  bool use_sh = true;
  bool use_sl = true;
  bool use_apk = true;
  bool use_apw = true;

  void validate() const;
  bool enabled(TrialClass c) const;
};

struct LearnConfig {
  double epsilon = 5e-4;     // avoidance radius for the spline
  double narrowing = 1e-8;   // distance kept from every box face
  GlobalBudget global;
  LocalOptions local;
  double sl_fd_step = 1e-6;

  void validate() const;
};

/// Quintic smoothstep: 0 on [0, eps], 1 from 2 eps on.
double spline_factor(double tau, double epsilon);
double spline_factor_derivative(double tau, double epsilon);

/// Product of spline factors over the squared distances to `history`.
double spline_penalty(const Eigen::VectorXd& z, const std::vector<Eigen::VectorXd>& history, double epsilon);

/// Vector entering the spline distance: the Cartesian centre for kernels and
/// (c, alpha, beta, gamma) for Slepian functions.
Eigen::VectorXd spline_vector(const DictionaryElement& e);

/// Optimization coordinates: (r, phi, t) for kernels and
/// (c, alpha, beta, gamma) for Slepian functions.
Eigen::VectorXd parameters(const DictionaryElement& e);
Box parameter_box(TrialClass kind, const LearnConfig& lc);
/// Normalized kernel, or Slepian member k of band-limit L, at parameters z.
DictionaryElement element_at(TrialClass kind, const Eigen::VectorXd& z, int slepian_k = 1, int slepian_L = 0);

/// Spline vectors of same-class elements chosen in the current window
/// (ROFMP only; empty otherwise).
std::vector<Eigen::VectorXd> spline_history(const PursuitState& st, TrialClass kind);

/// Learning objective of a concrete element: the active objective, times
/// the avoidance spline for continuous classes under ROFMP.
double learning_value(const PursuitState& st, const DictionaryElement& d, const Eigen::VectorXd& column,
                      double epsilon, Objective* plain = nullptr);

/// Learning objective of one continuous class as a function of its
/// parameters, bound to a frozen pursuit state.
class ContinuousObjective {
 public:
  ContinuousObjective(const PursuitState& st, TrialClass kind, const InfiniteDictionarySpec& spec,
                      const LearnConfig& lc);

  TrialClass kind() const { return kind_; }
  const Box& box() const { return box_; }

  /// Value at z; fills the gradient in the optimization coordinates when
  /// requested. Slepian functions use member slepian_member().
  double operator()(const Eigen::VectorXd& z, Eigen::VectorXd* grad = nullptr) const;

  /// Slepian only: the best member at z and its value.
  double best_member(const Eigen::VectorXd& z, int* k) const;
  void set_slepian_member(int k) { member_ = k; }
  int slepian_member() const { return member_; }

  /// Plain objective (spline excluded) with its gradient in Cartesian x.
  /// Kernel classes only.
  double plain_cartesian(const Vec3& x, Eigen::Vector3d* grad) const;

 private:
  double kernel_value(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;
  double slepian_value(const Eigen::MatrixXd& coeffs, int k) const;
  Eigen::MatrixXd slepian_members(const Eigen::VectorXd& z) const;

  const PursuitState* st_;
  TrialClass kind_;
  int L_ = 0;
  double epsilon_;
  double fd_step_;
  Box box_;
  bool use_spline_;
  std::vector<Eigen::VectorXd> history_;
  int member_ = 1;
  // Reduced Slepian terms over the damped harmonic columns of degree <= L.
  Eigen::VectorXd h_tR_;
  Eigen::MatrixXd h_tt_;
  Eigen::MatrixXd h_a_;
  Eigen::MatrixXd h_k_;
  Eigen::VectorXd h_w_;
};

enum class Provenance { Harmonic, Start, Global, Local };
std::string to_string(Provenance p);

struct Candidate {
  DictionaryElement element;
  Provenance provenance = Provenance::Start;
  double value = 0.0;  // learning objective
  Objective objective;  // plain objective
  Eigen::VectorXd column;
};

struct LearnStepResult {
  std::optional<Candidate> chosen;  // empty when every candidate is degenerate
  double starting_best = 0.0;       // best learning value over the starting dictionary
  std::vector<Candidate> candidates;
};

/// The learning add-on: builds the candidate set for each iteration from the
/// starting dictionary, global and local searches, and picks its argmax.
class Learner {
 public:
  /// The starting dictionary always holds every harmonic up to Nbar (when
  /// the class is enabled); `start` adds elements of the continuous classes.
  Learner(const ForwardModel& fm, InfiniteDictionarySpec spec, LearnConfig lc,
          std::vector<DictionaryElement> start = {});

  const InfiniteDictionarySpec& spec() const { return spec_; }
  const LearnConfig& config() const { return lc_; }
  const FiniteDictionary& starting_dictionary() const { return start_; }

  /// Exhaustive harmonic search; ties go to lower degree, then lower order.
  std::optional<Candidate> sh_candidate(const PursuitState& st);

  /// Start, global and local candidates of one continuous class. The start
  /// is the best starting-dictionary element of the class, or the box
  /// centre when the class has none.
  std::vector<Candidate> continuous_candidates(const PursuitState& st, TrialClass kind,
                                               const std::optional<Candidate>& start);

  /// One selection. Does not modify the state.
  LearnStepResult step(const PursuitState& st);

 private:
  const ForwardModel* fm_;
  InfiniteDictionarySpec spec_;
  LearnConfig lc_;
  FiniteDictionary start_;
};

/// Selected elements in order, with the coefficient at selection and the
/// final coefficient.
struct LearntDictionary {
  struct Entry {
    DictionaryElement element;
    int iteration = 0;
    double alpha_selected = 0.0;
    double alpha_final = 0.0;
  };
  std::vector<Entry> entries;

  std::vector<DictionaryElement> elements() const;
  /// Maximal harmonic degree present (-1 without harmonics).
  int max_sh_degree() const;
  static LearntDictionary from_state(const PursuitState& st, const std::vector<double>& alpha_selected);
};

}  // namespace sphpursuit
