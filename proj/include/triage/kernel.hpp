#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "triage/data.hpp"

namespace triage {

struct LinearKernel {};

/// (scale * <x, z>)^degree. The quadratic kernel (<x, z> / 2)^2 is {0.5, 2}.
struct PolynomialKernel {
  double scale = 1.0;
  int degree = 2;
};

/// exp(-||x - z||^2 / (2 width^2)).
struct RbfKernel {
  double width = 1.0;
};

/// User-supplied Gram matrix over the data set's own indices.
struct PrecomputedKernel {
  std::shared_ptr<const Eigen::MatrixXd> gram;
};

using Kernel = std::variant<LinearKernel, PolynomialKernel, RbfKernel, PrecomputedKernel>;

void validate(const Kernel& kernel);

/// Evaluates K(x, z) for explicit feature vectors. Throws for PrecomputedKernel.
double kernel_value(const Kernel& kernel, std::span<const double> x, std::span<const double> z);

/// Text form: `linear`, `poly:<scale>:<degree>`, `rbf:<width>`, `precomputed`.
std::string describe(const Kernel& kernel);
/// Inverse of `describe` for the non-precomputed kernels.
Kernel parse_kernel(const std::string& text);

/// Gram matrix of one data set under one kernel, computed once at
/// construction and read-only afterwards.
class GramMatrix {
 public:
  GramMatrix(std::shared_ptr<const DataSet> data, Kernel kernel);

  double operator()(Index i, Index j) const { return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  const Eigen::MatrixXd& matrix() const { return values_; }
  const DataSet& data() const { return *data_; }
  const std::shared_ptr<const DataSet>& data_ptr() const { return data_; }
  const Kernel& kernel() const { return kernel_; }
  std::size_t size() const { return data_->size(); }

  /// K(x, x_i) for an out-of-sample query.
  double cross(std::span<const double> x, Index i) const;
  /// max_i sqrt(K(x_i, x_i)).
  double max_feature_norm() const;

 private:
  std::shared_ptr<const DataSet> data_;
  Kernel kernel_;
  Eigen::MatrixXd values_;
};

}  // namespace triage
