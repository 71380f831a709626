#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace sphpursuit {

/// Axis-aligned box; periodic coordinates wrap instead of clamping during
/// local ascent.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  std::vector<bool> periodic;

  Box() = default;
  Box(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<bool> wrap = {});

  Eigen::Index dim() const { return lo.size(); }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  bool contains(const Eigen::VectorXd& x) const;
  /// Clamps non-periodic coordinates and wraps periodic ones into [lo, hi].
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;
};

using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
/// Value with an optional gradient; the gradient pointer may be null.
using ValueGradFn = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct GlobalBudget {
  int max_evaluations = 5000;
  double max_seconds = 200.0;
};

/// Locally biased DIRECT (rectangle trisection) maximization of f over box.
/// Every evaluated point lies in the box; the first evaluation is the center.
OptimizeResult global_maximize(const ScalarFn& f, const Box& box, const GlobalBudget& budget = {});

struct LocalOptions {
  double ftol = 1e-8;
  double xtol = 1e-8;
  int max_iterations = 200;
  double fd_step = 1e-6;
};

/// Projected gradient ascent with Barzilai-Borwein trial steps and Armijo
/// backtracking. Objective values along the iterates never decrease. When
/// the gradient throws or is not finite, central differences are used for
/// that step.
OptimizeResult local_maximize(const ValueGradFn& f, const Box& box, const Eigen::VectorXd& start,
                              const LocalOptions& opt = {});

/// Central finite-difference gradient, one-sided at box faces.
Eigen::VectorXd fd_gradient(const ScalarFn& f, const Box& box, const Eigen::VectorXd& x, double h);

}  // namespace sphpursuit
