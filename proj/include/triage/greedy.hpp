#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triage/setfun.hpp"

namespace triage {

struct TraceRecord {
  std::size_t iteration = 0;
  double omega = 1.0;
  /// Element added this iteration; empty when the best distorted gain was not positive.
  std::optional<Index> chosen;
  /// Arg-max candidate, whether or not it was added.
  std::optional<Index> best_candidate;
  double distorted_gain = 0.0;
  std::size_t candidates_evaluated = 0;
  /// State after the iteration.
  double g = 0.0;
  double c = 0.0;
  double objective = 0.0;
};

struct GridResult {
  double gamma = 1.0;
  double objective = 0.0;
  std::size_t selected = 0;
};

struct TriageSolution {
  IndexSet selected;
  std::shared_ptr<const SvmModel> model;
  double g = 0.0;
  double c = 0.0;
  std::vector<TraceRecord> trace;
  double gamma_used = 1.0;
  std::size_t budget = 0;
  /// Every run of the gamma-guessing loop, in grid order.
  std::vector<GridResult> grid;
  double seconds_per_iteration = 0.0;

  double objective() const { return g - c; }
};

struct GreedyOptions {
  /// Threads evaluating the candidates of one iteration.
  std::size_t workers = 1;
  /// Treat candidates that would leave a single class in V \ S as infeasible
  /// instead of failing with DegenerateProblem.
  bool skip_degenerate = false;
};

/// (1 - gamma / n)^(n - (i + 1)).
double distortion(std::size_t iteration, std::size_t budget, double gamma);

/// Deterministic distorted greedy; ties go to the lowest index.
TriageSolution distorted_greedy(const ObjectiveContext& ctx, std::size_t budget, double gamma,
                                const GreedyOptions& options = {});

/// min(|V \ S|, ceil((|V| / n) ln(1 / epsilon))).
std::size_t stochastic_sample_size(std::size_t ground_size, std::size_t remaining, std::size_t budget,
                                   double epsilon);

/// Distorted greedy over a fresh uniform sample of the remaining candidates each iteration.
TriageSolution stochastic_distorted_greedy(const ObjectiveContext& ctx, std::size_t budget, double gamma,
                                           double epsilon, std::uint64_t seed, const GreedyOptions& options = {});

/// gamma values 1, r, r^2, ... down to gamma_min.
std::vector<double> gamma_grid(double grid_ratio, double gamma_min);

/// Runs distorted greedy over `gamma_grid` and keeps the best g - c (earliest on ties).
TriageSolution guess_gamma_run(const ObjectiveContext& ctx, std::size_t budget, double grid_ratio, double gamma_min,
                               const GreedyOptions& options = {});

/// Set function over a ground set of indices; nullopt marks sets outside its domain.
using SetValue = std::function<std::optional<double>(const IndexSet&)>;

struct BruteForceResult {
  IndexSet selected;
  double value = 0.0;
  std::size_t subsets_enumerated = 0;
};

constexpr std::size_t kDefaultEnumerationCap = 200'000;

/// sum_{k <= n} C(N, k), saturating.
std::size_t count_subsets_up_to(std::size_t ground_size, std::size_t max_size);

/// Exact maximizer of g - c over |S| <= n, skipping class-degenerate sets.
BruteForceResult brute_force_opt(const ObjectiveContext& ctx, std::size_t budget,
                                 std::size_t cap = kDefaultEnumerationCap);
BruteForceResult brute_force_opt(std::size_t ground_size, const SetValue& objective, std::size_t budget,
                                 std::size_t cap = kDefaultEnumerationCap);

struct GammaEstimate {
  double gamma = 1.0;
  std::size_t pairs_examined = 0;
  IndexSet witness_base;
  IndexSet witness_batch;
};

/// Smallest ratio  sum_{j in L} [f(S + j) - f(S)] / [f(S + L) - f(S)]  over
/// disjoint pairs with |S| <= max_set_size and 1 <= |L| <= max_set_size
/// (unrestricted when empty); denominators <= 1e-9 are skipped.
GammaEstimate empirical_gamma(std::size_t ground_size, const SetValue& f,
                              std::optional<std::size_t> max_set_size = std::nullopt,
                              std::size_t cap = kDefaultEnumerationCap);
GammaEstimate empirical_gamma(const ObjectiveContext& ctx, std::optional<std::size_t> max_set_size = std::nullopt,
                              std::size_t cap = kDefaultEnumerationCap);

/// Ratio of one (S, L) pair, as used by `empirical_gamma`.
std::optional<double> submodularity_ratio(const SetValue& f, const IndexSet& base, const IndexSet& batch);

/// CSV with columns iter,omega,chosen_index,distorted_gain,g,c,objective.
std::string format_trace_csv(const TriageSolution& solution);

}  // namespace triage
