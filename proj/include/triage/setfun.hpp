#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "triage/data.hpp"
#include "triage/kernel.hpp"
#include "triage/svm.hpp"

namespace triage {

struct ObjectiveOptions {
  double lambda = 1.0;
  bool with_offset = true;
  /// Switches g to lambda [|V| ||w*(V)||^2 - |V\S| ||w*(V\S)||^2] with hard constraints.
  bool hard_margin = false;
  double solver_tolerance = 1e-5;
  /// g values in [-clamp_threshold, 0) are reported as 0.
  double clamp_threshold = 1e-6;
  std::size_t max_updates = 1'000'000;
  /// LRU capacity in models; 0 selects 2 |V|.
  std::size_t cache_capacity = 0;
};

struct SetEvaluation {
  IndexSet selected;
  double g = 0.0;
  double c = 0.0;
  std::shared_ptr<const SvmModel> model;

  double objective() const { return g - c; }
};

/// Everything g(S) and c(S) are evaluated against: the training data, its
/// Gram matrix, lambda, per-sample human errors c_i and the full-set
/// objective a(V). Solved models for V \ S are memoized by S.
///
/// Thread-safe: concurrent evaluations share the cache under a mutex.
class ObjectiveContext {
 public:
  ObjectiveContext(std::shared_ptr<const DataSet> data, const Kernel& kernel, std::vector<double> human_errors,
                   ObjectiveOptions options = {});
  ObjectiveContext(std::shared_ptr<const GramMatrix> gram, std::vector<double> human_errors,
                   ObjectiveOptions options = {});

  std::size_t size() const { return gram_->size(); }
  const DataSet& data() const { return gram_->data(); }
  const std::shared_ptr<const GramMatrix>& gram() const { return gram_; }
  const ObjectiveOptions& options() const { return options_; }
  const std::vector<double>& human_errors() const { return human_errors_; }

  /// a(V): the inner objective of the model trained on every sample.
  double full_objective() const { return full_objective_; }
  std::shared_ptr<const SvmModel> full_model() const { return full_model_; }

  /// True when training on V \ S is ill-posed (single class left, with offset).
  bool is_degenerate(const IndexSet& selected) const;

  /// Model trained on V \ S (memoized).
  std::shared_ptr<const SvmModel> model_without(const IndexSet& selected) const;
  /// Model trained on V \ (S + {j}), warm-started from the V \ S solution.
  std::shared_ptr<const SvmModel> model_without(const IndexSet& selected, Index extra) const;

  /// Inner objective of a model trained by this context.
  double inner_objective(const SvmModel& model) const;

  double g_value(const IndexSet& selected) const;
  double c_value(const IndexSet& selected) const;
  /// g(S + {j}) - g(S).
  double marginal_gain(const IndexSet& selected, Index j) const;
  SetEvaluation evaluate(const IndexSet& selected) const;

  std::size_t cache_hits() const;
  std::size_t cache_misses() const;

 private:
  struct Entry {
    std::shared_ptr<const SvmModel> model;
    double inner = 0.0;
  };
  struct KeyHash {
    std::size_t operator()(const IndexSet& key) const noexcept;
  };

  void check_subset(const IndexSet& selected) const;
  void check_not_degenerate(const IndexSet& selected) const;
  IndexSet complement(const IndexSet& selected) const;
  Entry solve(const IndexSet& selected, const WarmStart* warm, const IndexSet* active) const;
  Entry lookup_or_solve(const IndexSet& selected) const;
  Entry lookup_or_solve_child(const IndexSet& selected, Index extra) const;
  bool find(const IndexSet& key, Entry& out) const;
  void insert(const IndexSet& key, const Entry& entry) const;
  double clamp_g(double raw) const;
  SvmOptions svm_options() const;

  std::shared_ptr<const GramMatrix> gram_;
  std::vector<double> human_errors_;
  ObjectiveOptions options_;
  std::size_t positives_ = 0;
  std::size_t negatives_ = 0;
  std::shared_ptr<const SvmModel> full_model_;
  double full_objective_ = 0.0;

  mutable std::mutex mutex_;
  mutable std::list<std::pair<IndexSet, Entry>> lru_;
  mutable std::unordered_map<IndexSet, std::list<std::pair<IndexSet, Entry>>::iterator, KeyHash> index_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
  std::size_t capacity_ = 0;
};

/// Inserts j into a sorted index set.
IndexSet with_element(const IndexSet& set, Index j);

}  // namespace triage
