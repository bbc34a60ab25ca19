#include "triage/logistic.hpp"

#include <cmath>

#include "triage/errors.hpp"

namespace triage {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double LogisticModel::logit(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != weights.size()) {
    throw InvalidArgument("logistic model expects " + std::to_string(weights.size()) + " features");
  }
  double z = bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += weights[static_cast<Eigen::Index>(k)] * x[k];
  return z;
}

double LogisticModel::probability(std::span<const double> x) const { return sigmoid(logit(x)); }

LogisticModel fit_logistic(const Eigen::MatrixXd& features, std::span<const int> labels,
                           const LogisticOptions& options) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) {
    throw InvalidArgument("logistic fit needs one 0/1 label per feature row");
  }
  Eigen::MatrixXd X(n, p + 1);
  X.leftCols(p) = features;
  X.col(p).setOnes();
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    if (l != 0 && l != 1) throw InvalidArgument("logistic labels must be 0 or 1");
    t[i] = l;
  }
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p + 1, options.l2);
  penalty[p] = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  auto loss = [&](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd z = X * theta;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) sum += softplus(z[i]) - t[i] * z[i];
    return sum * inv_n + 0.5 * theta.cwiseProduct(penalty).dot(theta);
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  LogisticModel out;
  double current = loss(theta);
  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd z = X * theta;
    Eigen::VectorXd r(n);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = sigmoid(z[i]);
      r[i] = q - t[i];
      w[i] = q * (1.0 - q);
    }
    const Eigen::VectorXd grad = X.transpose() * r * inv_n + penalty.cwiseProduct(theta);
    out.gradient_norm = grad.norm();
    out.iterations = iter;
    if (out.gradient_norm <= options.gradient_tolerance) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X * inv_n;
    H.diagonal() += penalty;
    // Keeps the system solvable when the unpenalized bias direction is flat.
    H.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = H.ldlt().solve(grad);
    double scale = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k) {
      const Eigen::VectorXd next = theta - scale * step;
      const double value = loss(next);
      if (value <= current - 1e-4 * scale * grad.dot(step) || value < current) {
        theta = next;
        current = value;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  if (!out.converged) {
    const Eigen::VectorXd z = X * theta;
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = sigmoid(z[i]) - t[i];
    out.gradient_norm = (X.transpose() * r * inv_n + penalty.cwiseProduct(theta)).norm();
    out.converged = out.gradient_norm <= options.gradient_tolerance;
  }
  out.weights = theta.head(p);
  out.bias = theta[p];
  return out;
}

}  // namespace triage
