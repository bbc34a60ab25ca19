#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace triage {

struct LogisticOptions {
  /// Penalty (l2 / 2) ||w||^2 added to the mean log-loss; the bias is not penalized.
  double l2 = 1e-3;
  double gradient_tolerance = 1e-6;
  std::size_t max_iterations = 200;
};

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;

  double logit(std::span<const double> x) const;
  /// P(label = 1 | x).
  double probability(std::span<const double> x) const;
};

/// Newton's method with backtracking. `labels` are 0/1, one per row of `features`.
LogisticModel fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels,
                           const LogisticOptions& options = {});

}  // namespace triage
