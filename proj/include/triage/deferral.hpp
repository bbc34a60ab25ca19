#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "triage/data.hpp"
#include "triage/greedy.hpp"
#include "triage/human.hpp"
#include "triage/kernel.hpp"
#include "triage/logistic.hpp"
#include "triage/svm.hpp"

namespace triage {

/// pi(defer | x) = sigmoid(weight |margin(x)| + bias).
struct DeferralPolicy {
  double weight = 0.0;
  double bias = 0.0;
  /// Fraction |S| / |V| of the training set that was outsourced.
  double budget_fraction = 0.0;
  /// Set when the training labels were single-class: always (true) or never (false) defer.
  std::optional<bool> constant;

  double defer_probability(double margin) const;
};

/// Logistic fit of d_i = [i in S] on |margin| of the model trained on V \ S.
DeferralPolicy fit_policy(const DataSet& train, const TriageSolution& solution,
                          const LogisticOptions& options = {});
/// Same fit from explicit per-sample margins and defer labels.
DeferralPolicy fit_policy(std::span<const double> margins, std::span<const int> defer, double budget_fraction,
                          const LogisticOptions& options = {});

/// Deferred flags for the floor(budget_fraction |test|) samples with the
/// highest scores; ties go to the lowest index.
std::vector<bool> top_k_assignment(std::span<const double> scores, double budget_fraction);

std::vector<double> test_margins(const SvmModel& model, const DataSet& test);

std::vector<bool> decide_batch(const DeferralPolicy& policy, const SvmModel& model, const DataSet& test,
                               double budget_fraction);

struct Metrics {
  double misclassification = 0.0;
  double f1_positive = 0.0;
  double deferred_fraction = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t deferred = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn, std::size_t deferred);

/// Machine predicts +1 iff margin >= 0; deferred samples get the label of a
/// freshly drawn human score. A score is drawn for every test sample in index
/// order, so methods sharing a seed see the same human answers.
Metrics evaluate(const DataSet& test, std::span<const double> margins, const std::vector<bool>& deferred,
                 const HumanModel& human, std::mt19937_64& rng);
Metrics evaluate(const DataSet& test, const SvmModel& model, const std::vector<bool>& deferred,
                 const HumanModel& human, std::mt19937_64& rng);

struct ExpectedMetrics {
  double misclassification = 0.0;
  double f1_positive = 0.0;
  double deferred_fraction = 0.0;
};

/// Closed-form expectation over human draws (F1 from expected counts).
ExpectedMetrics expected_metrics(const DataSet& test, std::span<const double> margins,
                                 const std::vector<bool>& deferred, const HumanModel& human);

enum class BaselineKind { uncertainty, predicted_error, full_automation, no_automation };

std::string to_string(BaselineKind kind);
std::optional<BaselineKind> parse_baseline(std::string_view text);

/// Runs a baseline with an already trained full-automation model (trained on
/// `full_model.data()`).
Metrics run_baseline(BaselineKind kind, const SvmModel& full_model, const DataSet& test, double budget_fraction,
                     const HumanModel& human, std::uint64_t seed);
Metrics run_baseline(BaselineKind kind, const DataSet& train, const DataSet& test, double budget_fraction,
                     const HumanModel& human, double lambda, const Kernel& kernel, std::uint64_t seed,
                     bool with_offset = true);

/// Per-sample score E_m(x) - E_h(x) of the predicted-error baseline.
std::vector<double> predicted_error_scores(const SvmModel& full_model, const DataSet& test,
                                           const HumanModel& human, std::uint64_t seed);

/// Fits pi on the solution, defers at `test_budget` (default: the realized
/// fraction |S| / |V|) and evaluates.
Metrics run_triage(const DataSet& train, const TriageSolution& solution, const DataSet& test,
                   const HumanModel& human, std::uint64_t seed, std::optional<double> test_budget = std::nullopt);

/// `method,budget_fraction,misclassification,f1,deferred_fraction,seed`
std::string metrics_csv_header();
std::string metrics_csv_row(std::string_view method, double budget_fraction, const Metrics& metrics,
                            std::uint64_t seed);

}  // namespace triage
