#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "triage/data.hpp"
#include "triage/kernel.hpp"

namespace triage {

struct SvmOptions {
  double lambda = 1.0;
  bool with_offset = true;
  /// Drops the box upper bound on alpha (hard-margin program).
  bool hard_margin = false;
  /// Stop once the maximal KKT violation is at most this value.
  double tolerance = 1e-5;
  std::size_t max_updates = 1'000'000;
  /// Hard-margin training reports non-separable data once any alpha exceeds this.
  double divergence_cap = 1e7;
};

/// Starting point for the dual solver. `kernel_sums`, when present, must hold
/// sum_u y_u alpha_u K(t, u) for every active t and saves an O(|A|^2) pass.
struct WarmStart {
  std::vector<double> alpha;
  std::vector<double> kernel_sums;
};

class SvmModel;

/// Solves the dual over `active` (sorted, duplicate-free indices into the Gram's data set).
SvmModel train_svm(std::shared_ptr<const GramMatrix> gram, IndexSet active, const SvmOptions& options,
                   const WarmStart* warm_start = nullptr);

/// Soft-margin SVM minimizing  lambda |A| ||w||^2 + sum_{i in A} hinge_i  over
/// an active subset A of a data set, stored through its dual coefficients:
///   w^T phi(x) = sum_{i in A} alpha_i y_i K(x, x_i) / (2 lambda |A|).
class SvmModel {
 public:
  /// Assembles a model from explicit coefficients (deserialization, tests).
  static SvmModel from_parts(std::shared_ptr<const GramMatrix> gram, IndexSet active, std::vector<double> alpha,
                             std::optional<double> offset, double lambda, bool hard_margin = false);

  const IndexSet& active() const { return active_; }
  std::span<const double> alpha() const { return alpha_; }
  std::optional<double> offset() const { return offset_; }
  double lambda() const { return lambda_; }
  bool hard_margin() const { return hard_margin_; }
  const GramMatrix& gram() const { return *gram_; }
  const std::shared_ptr<const GramMatrix>& gram_ptr() const { return gram_; }
  const Kernel& kernel() const { return gram_->kernel(); }
  const DataSet& data() const { return gram_->data(); }

  bool converged() const { return converged_; }
  std::size_t updates() const { return updates_; }
  /// KKT violation measured by the solver at exit.
  double final_violation() const { return final_violation_; }

  /// 1 / (2 lambda |A|).
  double weight_scale() const;
  /// sum_u y_u alpha_u K(x_t, x_u) for each active t, in active order.
  std::span<const double> kernel_sums() const { return kernel_sums_; }

  /// w^T phi(x) + b for an explicit feature vector.
  double margin(std::span<const double> x) const;
  /// w^T phi(x_i) + b for a sample of the training data set (any kernel).
  double margin_at(Index i) const;

  double weight_norm_sq() const;
  /// sum alpha - (1 / (4 lambda |A|)) alpha^T Y K Y alpha.
  double dual_value() const;

 private:
  friend SvmModel train_svm(std::shared_ptr<const GramMatrix>, IndexSet, const SvmOptions&, const WarmStart*);
  SvmModel() = default;
  void recompute_kernel_sums();

  std::shared_ptr<const GramMatrix> gram_;
  IndexSet active_;
  std::vector<double> alpha_;
  std::vector<double> kernel_sums_;
  std::optional<double> offset_;
  double lambda_ = 1.0;
  bool hard_margin_ = false;
  bool converged_ = true;
  std::size_t updates_ = 0;
  double final_violation_ = 0.0;
};

/// Convenience overload that builds the Gram matrix on the fly.
SvmModel train_svm(const DataSet& data, IndexSet active, double lambda, const Kernel& kernel, bool with_offset,
                   const std::optional<std::vector<double>>& warm_alpha = std::nullopt);

/// Warm start for training on `parent.active() \ {dropped}`: the parent's
/// coefficients with `dropped` removed. Returns the reduced active set.
std::pair<IndexSet, WarmStart> warm_start_without(const SvmModel& parent, Index dropped);

/// Primal value over the model's active set: lambda |A| ||w||^2 + sum hinge
/// (hard-margin models: lambda |A| ||w||^2 only).
double objective_value(const SvmModel& model);
/// Primal value of `model` evaluated on an arbitrary index set.
double objective_value(const SvmModel& model, std::span<const Index> active);

struct KktReport {
  /// y m > 1 + tol while alpha > tol.
  IndexSet outside_margin_violations;
  /// y m < 1 - tol while alpha < 1 - tol.
  IndexSet inside_margin_violations;
  /// Alpha outside its box.
  IndexSet box_violations;
  double equality_residual = 0.0;
  double max_violation = 0.0;

  std::size_t violation_count() const {
    return outside_margin_violations.size() + inside_margin_violations.size() + box_violations.size();
  }
};

KktReport kkt_check(const SvmModel& model, double tolerance);

/// Flat text: header, kernel, lambda, offset, hard_margin, then one
/// `index alpha` line per active sample, reals at 17 significant digits.
std::string serialize_model(const SvmModel& model);
SvmModel parse_model(const std::string& text, std::shared_ptr<const GramMatrix> gram);

}  // namespace triage
