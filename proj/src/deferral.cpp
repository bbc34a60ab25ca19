#include "triage/deferral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "triage/errors.hpp"

namespace triage {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_fraction(double budget_fraction) {
  if (!(budget_fraction >= 0.0 && budget_fraction <= 1.0)) {
    throw InvalidArgument("budget fraction must lie in [0, 1]");
  }
}

std::size_t deferred_count(std::size_t total, double budget_fraction) {
  check_fraction(budget_fraction);
  // The small slack keeps fractions such as 0.3 * 10 from flooring to 2.
  const double raw = budget_fraction * static_cast<double>(total);
  return std::min(total, static_cast<std::size_t>(std::floor(raw + 1e-9)));
}

Eigen::MatrixXd feature_matrix(const DataSet& data) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.dimension()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.features(i);
    for (std::size_t k = 0; k < x.size(); ++k) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = x[k];
  }
  return X;
}

// Probability of z = 1 on each test sample; single-class labels give a constant.
std::vector<double> error_predictor(const DataSet& train, const std::vector<int>& z, const DataSet& test) {
  const auto ones = static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
  if (ones == 0 || ones == z.size()) return std::vector<double>(test.size(), ones == 0 ? 0.0 : 1.0);
  const auto fit = fit_logistic(feature_matrix(train), z);
  std::vector<double> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) out[i] = fit.probability(test.features(i));
  return out;
}

}  // namespace

double DeferralPolicy::defer_probability(double margin) const {
  if (constant) return *constant ? 1.0 : 0.0;
  return sigmoid(weight * std::abs(margin) + bias);
}

DeferralPolicy fit_policy(std::span<const double> margins, std::span<const int> defer, double budget_fraction,
                          const LogisticOptions& options) {
  check_fraction(budget_fraction);
  if (margins.size() != defer.size() || margins.empty()) {
    throw InvalidArgument("policy fit needs one defer label per margin");
  }
  DeferralPolicy policy;
  policy.budget_fraction = budget_fraction;
  const auto ones = static_cast<std::size_t>(std::count(defer.begin(), defer.end(), 1));
  if (ones == 0 || ones == defer.size()) {
    policy.constant = ones != 0;
    return policy;
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(margins.size()), 1);
  for (std::size_t i = 0; i < margins.size(); ++i) X(static_cast<Eigen::Index>(i), 0) = std::abs(margins[i]);
  const auto fit = fit_logistic(X, defer, options);
  policy.weight = fit.weights[0];
  policy.bias = fit.bias;
  return policy;
}

DeferralPolicy fit_policy(const DataSet& train, const TriageSolution& solution, const LogisticOptions& options) {
  if (!solution.model) throw InvalidArgument("triage solution carries no model");
  std::vector<double> margins(train.size());
  std::vector<int> defer(train.size(), 0);
  for (std::size_t i = 0; i < train.size(); ++i) margins[i] = solution.model->margin_at(i);
  for (Index i : solution.selected) defer.at(i) = 1;
  const double fraction = static_cast<double>(solution.selected.size()) / static_cast<double>(train.size());
  return fit_policy(margins, defer, fraction, options);
}

std::vector<bool> top_k_assignment(std::span<const double> scores, double budget_fraction) {
  const std::size_t k = deferred_count(scores.size(), budget_fraction);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> out(scores.size(), false);
  for (std::size_t r = 0; r < k; ++r) out[order[r]] = true;
  return out;
}

std::vector<double> test_margins(const SvmModel& model, const DataSet& test) {
  std::vector<double> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) out[i] = model.margin(test.features(i));
  return out;
}

std::vector<bool> decide_batch(const DeferralPolicy& policy, const SvmModel& model, const DataSet& test,
                               double budget_fraction) {
  const auto margins = test_margins(model, test);
  std::vector<double> scores(margins.size(), 0.0);
  // Ranking by the logit matches ranking by pi without saturating at 1.
  if (!policy.constant) {
    for (std::size_t i = 0; i < margins.size(); ++i) scores[i] = policy.weight * std::abs(margins[i]) + policy.bias;
  }
  return top_k_assignment(scores, budget_fraction);
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn, std::size_t deferred) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.deferred = deferred;
  const double total = static_cast<double>(m.total());
  if (total > 0.0) {
    m.misclassification = static_cast<double>(fp + fn) / total;
    m.deferred_fraction = static_cast<double>(deferred) / total;
  }
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1_positive = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
  return m;
}

Metrics evaluate(const DataSet& test, std::span<const double> margins, const std::vector<bool>& deferred,
                 const HumanModel& human, std::mt19937_64& rng) {
  if (margins.size() != test.size() || deferred.size() != test.size()) {
    throw InvalidArgument("assignment must cover every test sample");
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0, n_deferred = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double h = sample_score(human, test[i], rng);
    int predicted;
    if (deferred[i]) {
      predicted = human_label(human, h);
      ++n_deferred;
    } else {
      predicted = margins[i] >= 0.0 ? 1 : -1;
    }
    const int y = test.label(i);
    if (y > 0) {
      (predicted > 0 ? tp : fn)++;
    } else {
      (predicted > 0 ? fp : tn)++;
    }
  }
  return metrics_from_counts(tp, fp, fn, tn, n_deferred);
}

Metrics evaluate(const DataSet& test, const SvmModel& model, const std::vector<bool>& deferred,
                 const HumanModel& human, std::mt19937_64& rng) {
  const auto margins = test_margins(model, test);
  return evaluate(test, margins, deferred, human, rng);
}

ExpectedMetrics expected_metrics(const DataSet& test, std::span<const double> margins,
                                 const std::vector<bool>& deferred, const HumanModel& human) {
  if (margins.size() != test.size() || deferred.size() != test.size()) {
    throw InvalidArgument("assignment must cover every test sample");
  }
  double tp = 0.0, fp = 0.0, fn = 0.0, n_deferred = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int y = test.label(i);
    double positive;
    if (deferred[i]) {
      const double wrong = expected_human_mistake(human, test[i]);
      positive = y > 0 ? 1.0 - wrong : wrong;
      n_deferred += 1.0;
    } else {
      positive = margins[i] >= 0.0 ? 1.0 : 0.0;
    }
    if (y > 0) {
      tp += positive;
      fn += 1.0 - positive;
    } else {
      fp += positive;
    }
  }
  ExpectedMetrics out;
  const double total = static_cast<double>(test.size());
  out.misclassification = (fp + fn) / total;
  out.deferred_fraction = n_deferred / total;
  const double denom = 2.0 * tp + fp + fn;
  out.f1_positive = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  return out;
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::uncertainty:
      return "uncertainty";
    case BaselineKind::predicted_error:
      return "predicted_error";
    case BaselineKind::full_automation:
      return "full_automation";
    case BaselineKind::no_automation:
      return "no_automation";
  }
  return "unknown";
}

std::optional<BaselineKind> parse_baseline(std::string_view text) {
  for (auto k : {BaselineKind::uncertainty, BaselineKind::predicted_error, BaselineKind::full_automation,
                 BaselineKind::no_automation}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::vector<double> predicted_error_scores(const SvmModel& full_model, const DataSet& test,
                                           const HumanModel& human, std::uint64_t seed) {
  const DataSet& train = full_model.data();
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> z_human(train.size());
  std::vector<int> z_machine(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    double h[4];
    for (double& v : h) v = sample_score(human, train[i], rng);
    const int first = human_label(human, 0.5 * (h[0] + h[1]));
    const int second = human_label(human, 0.5 * (h[2] + h[3]));
    z_human[i] = first != second ? 1 : 0;
    const int machine = full_model.margin_at(i) >= 0.0 ? 1 : -1;
    const int expert = human_label(human, sample_score(human, train[i], rng));
    z_machine[i] = machine != expert ? 1 : 0;
  }
  const auto p_human = error_predictor(train, z_human, test);
  const auto p_machine = error_predictor(train, z_machine, test);
  std::vector<double> out(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) out[i] = p_machine[i] - p_human[i];
  return out;
}

Metrics run_baseline(BaselineKind kind, const SvmModel& full_model, const DataSet& test, double budget_fraction,
                     const HumanModel& human, std::uint64_t seed) {
  check_fraction(budget_fraction);
  const auto margins = test_margins(full_model, test);
  std::vector<bool> deferred;
  switch (kind) {
    case BaselineKind::full_automation:
      deferred.assign(test.size(), false);
      break;
    case BaselineKind::no_automation:
      deferred.assign(test.size(), true);
      break;
    case BaselineKind::uncertainty: {
      std::vector<double> scores(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) {
        const double a = std::abs(margins[i]);
        scores[i] = a > 0.0 ? 1.0 / a : std::numeric_limits<double>::infinity();
      }
      deferred = top_k_assignment(scores, budget_fraction);
      break;
    }
    case BaselineKind::predicted_error:
      deferred = top_k_assignment(predicted_error_scores(full_model, test, human, seed), budget_fraction);
      break;
  }
  std::mt19937_64 rng(seed);
  return evaluate(test, margins, deferred, human, rng);
}

Metrics run_baseline(BaselineKind kind, const DataSet& train, const DataSet& test, double budget_fraction,
                     const HumanModel& human, double lambda, const Kernel& kernel, std::uint64_t seed,
                     bool with_offset) {
  IndexSet all(train.size());
  std::iota(all.begin(), all.end(), Index{0});
  const auto model = train_svm(train, all, lambda, kernel, with_offset);
  return run_baseline(kind, model, test, budget_fraction, human, seed);
}

Metrics run_triage(const DataSet& train, const TriageSolution& solution, const DataSet& test,
                   const HumanModel& human, std::uint64_t seed, std::optional<double> test_budget) {
  const auto policy = fit_policy(train, solution);
  const double budget = test_budget.value_or(policy.budget_fraction);
  const auto deferred = decide_batch(policy, *solution.model, test, budget);
  std::mt19937_64 rng(seed);
  return evaluate(test, *solution.model, deferred, human, rng);
}

std::string metrics_csv_header() { return "method,budget_fraction,misclassification,f1,deferred_fraction,seed"; }

std::string metrics_csv_row(std::string_view method, double budget_fraction, const Metrics& m, std::uint64_t seed) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.*s,%.10g,%.10g,%.10g,%.10g,%llu", static_cast<int>(method.size()), method.data(),
                budget_fraction, m.misclassification, m.f1_positive, m.deferred_fraction,
                static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace triage
