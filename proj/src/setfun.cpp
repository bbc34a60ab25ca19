#include "triage/setfun.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "triage/errors.hpp"

namespace triage {

IndexSet with_element(const IndexSet& set, Index j) {
  IndexSet out;
  out.reserve(set.size() + 1);
  const auto pos = std::lower_bound(set.begin(), set.end(), j);
  out.insert(out.end(), set.begin(), pos);
  out.push_back(j);
  out.insert(out.end(), pos, set.end());
  return out;
}

std::size_t ObjectiveContext::KeyHash::operator()(const IndexSet& key) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Index i : key) {
    h ^= i + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

ObjectiveContext::ObjectiveContext(std::shared_ptr<const DataSet> data, const Kernel& kernel,
                                   std::vector<double> human_errors, ObjectiveOptions options)
    : ObjectiveContext(std::make_shared<const GramMatrix>(std::move(data), kernel), std::move(human_errors),
                       options) {}

ObjectiveContext::ObjectiveContext(std::shared_ptr<const GramMatrix> gram, std::vector<double> human_errors,
                                   ObjectiveOptions options)
    : gram_(std::move(gram)), human_errors_(std::move(human_errors)), options_(options) {
  if (!gram_) throw InvalidArgument("objective context needs a Gram matrix");
  if (human_errors_.size() != gram_->size()) throw InvalidArgument("one human error per sample is required");
  for (double c : human_errors_) {
    if (!(c >= 0.0)) throw InvalidArgument("human errors must be nonnegative");
  }
  positives_ = gram_->data().count_label(1);
  negatives_ = gram_->data().count_label(-1);
  capacity_ = options_.cache_capacity ? options_.cache_capacity : 2 * gram_->size();
  if (options_.with_offset && (positives_ == 0 || negatives_ == 0)) {
    throw DegenerateProblem("training data must contain both classes for an SVM with offset");
  }
  const Entry full = solve({}, nullptr, nullptr);
  full_model_ = full.model;
  full_objective_ = full.inner;
  insert({}, full);
}

SvmOptions ObjectiveContext::svm_options() const {
  SvmOptions o;
  o.lambda = options_.lambda;
  o.with_offset = options_.with_offset;
  o.hard_margin = options_.hard_margin;
  o.tolerance = options_.solver_tolerance;
  o.max_updates = options_.max_updates;
  return o;
}

void ObjectiveContext::check_subset(const IndexSet& selected) const {
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (selected[k] >= size()) throw InvalidArgument("index outside the ground set");
    if (k > 0 && selected[k] <= selected[k - 1]) throw InvalidArgument("index set must be sorted and duplicate-free");
  }
}

bool ObjectiveContext::is_degenerate(const IndexSet& selected) const {
  if (selected.size() >= size()) return true;
  if (!options_.with_offset) return false;
  std::size_t pos = 0;
  for (Index i : selected) pos += data().label(i) > 0 ? 1 : 0;
  const std::size_t neg = selected.size() - pos;
  return pos >= positives_ || neg >= negatives_;
}

void ObjectiveContext::check_not_degenerate(const IndexSet& selected) const {
  if (!is_degenerate(selected)) return;
  if (selected.size() >= size()) {
    throw DegenerateProblem("outsourcing every sample leaves nothing to train on; lower the budget n");
  }
  throw DegenerateProblem("outsourcing " + std::to_string(selected.size()) +
                          " samples leaves a single class for the SVM with offset; cap the budget n below "
                          "min(|V+|, |V-|) (the bound analysis requires n <= (rho* - sigma*) |V|)");
}

IndexSet ObjectiveContext::complement(const IndexSet& selected) const {
  IndexSet out;
  out.reserve(size() - selected.size());
  std::size_t k = 0;
  for (Index i = 0; i < size(); ++i) {
    if (k < selected.size() && selected[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

double ObjectiveContext::inner_objective(const SvmModel& model) const { return objective_value(model); }

ObjectiveContext::Entry ObjectiveContext::solve(const IndexSet& selected, const WarmStart* warm,
                                                const IndexSet* active) const {
  IndexSet act = active ? *active : complement(selected);
  auto model = std::make_shared<const SvmModel>(train_svm(gram_, std::move(act), svm_options(), warm));
  Entry e;
  e.inner = inner_objective(*model);
  e.model = std::move(model);
  return e;
}

bool ObjectiveContext::find(const IndexSet& key, Entry& out) const {
  std::lock_guard lock(mutex_);
  const auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return false;
  }
  lru_.splice(lru_.begin(), lru_, it->second);
  out = it->second->second;
  ++hits_;
  return true;
}

void ObjectiveContext::insert(const IndexSet& key, const Entry& entry) const {
  std::lock_guard lock(mutex_);
  if (const auto it = index_.find(key); it != index_.end()) {
    it->second->second = entry;
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.emplace_front(key, entry);
  index_.emplace(key, lru_.begin());
  while (lru_.size() > capacity_) {
    index_.erase(lru_.back().first);
    lru_.pop_back();
  }
}

ObjectiveContext::Entry ObjectiveContext::lookup_or_solve(const IndexSet& selected) const {
  Entry e;
  if (find(selected, e)) return e;
  e = solve(selected, nullptr, nullptr);
  insert(selected, e);
  return e;
}

ObjectiveContext::Entry ObjectiveContext::lookup_or_solve_child(const IndexSet& selected, Index extra) const {
  const IndexSet child = with_element(selected, extra);
  Entry e;
  if (find(child, e)) return e;
  const Entry parent = lookup_or_solve(selected);
  auto [active, warm] = warm_start_without(*parent.model, extra);
  e = solve(child, &warm, &active);
  insert(child, e);
  return e;
}

std::shared_ptr<const SvmModel> ObjectiveContext::model_without(const IndexSet& selected) const {
  check_subset(selected);
  check_not_degenerate(selected);
  return lookup_or_solve(selected).model;
}

std::shared_ptr<const SvmModel> ObjectiveContext::model_without(const IndexSet& selected, Index extra) const {
  check_subset(selected);
  if (extra >= size() || std::binary_search(selected.begin(), selected.end(), extra)) {
    throw InvalidArgument("extra index must be a ground-set element outside S");
  }
  check_not_degenerate(selected);
  check_not_degenerate(with_element(selected, extra));
  return lookup_or_solve_child(selected, extra).model;
}

double ObjectiveContext::clamp_g(double raw) const {
  return (raw < 0.0 && raw >= -options_.clamp_threshold) ? 0.0 : raw;
}

double ObjectiveContext::g_value(const IndexSet& selected) const {
  check_subset(selected);
  if (selected.empty()) return 0.0;
  check_not_degenerate(selected);
  return clamp_g(full_objective_ - lookup_or_solve(selected).inner);
}

double ObjectiveContext::c_value(const IndexSet& selected) const {
  check_subset(selected);
  double total = 0.0;
  for (Index i : selected) total += human_errors_[i];
  return total;
}

double ObjectiveContext::marginal_gain(const IndexSet& selected, Index j) const {
  check_subset(selected);
  if (j >= size() || std::binary_search(selected.begin(), selected.end(), j)) {
    throw InvalidArgument("marginal gain needs j outside S");
  }
  check_not_degenerate(selected);
  const IndexSet child = with_element(selected, j);
  check_not_degenerate(child);
  const double base = selected.empty() ? 0.0 : clamp_g(full_objective_ - lookup_or_solve(selected).inner);
  const double next = clamp_g(full_objective_ - lookup_or_solve_child(selected, j).inner);
  return next - base;
}

SetEvaluation ObjectiveContext::evaluate(const IndexSet& selected) const {
  SetEvaluation out;
  out.selected = selected;
  out.model = model_without(selected);
  out.g = g_value(selected);
  out.c = c_value(selected);
  return out;
}

std::size_t ObjectiveContext::cache_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t ObjectiveContext::cache_misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

}  // namespace triage
