#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>

#include "sphpursuit/geometry.hpp"
#include "sphpursuit/trial_functions.hpp"

namespace sphpursuit {

/// Discretized upward continuation: evaluation of sigma-continued trial
/// functions at sigma * eta_i for every grid point eta_i.
class ForwardModel {
 public:
  ForwardModel(Grid grid, double sigma, PenaltyNorm pen = {});

  const Grid& grid() const { return grid_; }
  double sigma() const { return sigma_; }
  const PenaltyNorm& penalty() const { return pen_; }
  std::size_t size() const { return grid_.size(); }

  /// Column T e; deterministic.
  Eigen::VectorXd column(const DictionaryElement& e) const;

  /// Columns of all harmonics up to max_degree (damping included), one
  /// column per linear index. Built once per degree and shared.
  std::shared_ptr<const Eigen::MatrixXd> sh_table(int max_degree) const;

  /// Kernel column with gradient: returns T d for the kernel of `kind` at x
  /// and fills dcol (size x 3) with its Cartesian x-derivative. Normalized
  /// kernels include the derivative of the norm.
  Eigen::VectorXd kernel_column(TrialClass kind, const Vec3& x, bool normalized, Eigen::MatrixXd* dcol) const;

 private:
  Grid grid_;
  double sigma_;
  PenaltyNorm pen_;
  Eigen::MatrixXd points_;  // size x 3
  mutable std::mutex table_mutex_;
  mutable std::shared_ptr<const Eigen::MatrixXd> table_;
};

}  // namespace sphpursuit
