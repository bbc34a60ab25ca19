#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "support.hpp"
#include "triage/deferral.hpp"
#include "triage/errors.hpp"
#include "triage/logistic.hpp"

using namespace triage;

namespace {

IndexSet all_of(std::size_t n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

}  // namespace

TEST_CASE("logistic regression") {
  SUBCASE("recovers a planted direction") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int n = 4000;
    Eigen::MatrixXd X(n, 2);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = normal(rng);
      X(i, 1) = normal(rng);
      const double p = 1.0 / (1.0 + std::exp(-(2.0 * X(i, 0) - X(i, 1) + 0.5)));
      y[i] = unit(rng) < p ? 1 : 0;
    }
    const auto fit = fit_logistic(X, y);
    CHECK(fit.converged);
    CHECK(fit.gradient_norm <= 1e-6);
    CHECK(fit.weights[0] == doctest::Approx(2.0).epsilon(0.15));
    CHECK(fit.weights[1] == doctest::Approx(-1.0).epsilon(0.15));
    CHECK(fit.bias == doctest::Approx(0.5).epsilon(0.2));
  }
  SUBCASE("separable labels stay finite under the penalty") {
    Eigen::MatrixXd X(4, 1);
    X << -2, -1, 1, 2;
    const std::vector<int> y{0, 0, 1, 1};
    const auto fit = fit_logistic(X, y);
    CHECK(fit.converged);
    CHECK(std::isfinite(fit.weights[0]));
    CHECK(fit.weights[0] > 0.0);
    CHECK(fit.probability(std::vector<double>{3.0}) > 0.99);
  }
}

TEST_CASE("policy fitting") {
  SUBCASE("no outsourced samples means never defer") {
    const std::vector<double> margins{0.1, -2.0, 3.0};
    const std::vector<int> defer{0, 0, 0};
    const auto p = fit_policy(margins, defer, 0.0);
    REQUIRE(p.constant.has_value());
    CHECK_FALSE(*p.constant);
    CHECK(p.defer_probability(0.0) == 0.0);
  }
  SUBCASE("small margins deferred, large kept") {
    const std::vector<double> margins{0.05, -0.1, 0.2, -2.0, 2.5, 3.0, -1.5, 0.15};
    const std::vector<int> defer{1, 1, 1, 0, 0, 0, 0, 1};
    const auto p = fit_policy(margins, defer, 0.5);
    CHECK(p.weight < 0.0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < margins.size(); ++i) correct += (p.defer_probability(margins[i]) > 0.5) == (defer[i] == 1);
    CHECK(correct == margins.size());
  }
  SUBCASE("flipping the labels flips the slope") {
    const std::vector<double> margins{0.05, 0.5, 1.0, 1.5, 2.0, 0.3, 0.7, 1.2};
    const std::vector<int> defer{1, 1, 0, 0, 0, 1, 0, 1};
    std::vector<int> flipped(defer.size());
    for (std::size_t i = 0; i < defer.size(); ++i) flipped[i] = 1 - defer[i];
    const auto a = fit_policy(margins, defer, 0.5);
    const auto b = fit_policy(margins, flipped, 0.5);
    CHECK(a.weight == doctest::Approx(-b.weight).epsilon(1e-6));
    CHECK(a.bias == doctest::Approx(-b.bias).epsilon(1e-6));
  }
  CHECK_THROWS_AS(fit_policy(std::vector<double>{1.0}, std::vector<int>{}, 0.1), InvalidArgument);
  CHECK_THROWS_AS(fit_policy(std::vector<double>{1.0}, std::vector<int>{1}, 1.5), InvalidArgument);
}

TEST_CASE("top-k assignment") {
  const std::vector<double> scores{0.5, 2.0, 2.0, -1.0, 0.7};
  CHECK(top_k_assignment(scores, 0.0) == std::vector<bool>(5, false));
  CHECK(top_k_assignment(scores, 1.0) == std::vector<bool>(5, true));
  CHECK(top_k_assignment(scores, 0.2) == std::vector<bool>{false, true, false, false, false});
  CHECK(top_k_assignment(scores, 0.6) == std::vector<bool>{false, true, true, false, true});
  const std::vector<double> ten(10, 0.0);
  const auto three = top_k_assignment(ten, 0.3);
  CHECK(std::count(three.begin(), three.end(), true) == 3);
  // Deferred sets nest as the budget grows.
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> random(50);
  for (auto& v : random) v = normal(rng);
  auto prev = top_k_assignment(random, 0.0);
  for (double b = 0.05; b <= 1.0; b += 0.05) {
    const auto next = top_k_assignment(random, b);
    for (std::size_t i = 0; i < random.size(); ++i) CHECK((!prev[i] || next[i]));
    prev = next;
  }
  CHECK_THROWS_AS(top_k_assignment(scores, -0.1), InvalidArgument);
}

TEST_CASE("metric identities") {
  const auto m = metrics_from_counts(3, 1, 2, 4, 5);
  CHECK(m.total() == 10);
  CHECK(m.misclassification == doctest::Approx(0.3));
  CHECK(m.f1_positive == doctest::Approx(6.0 / 9.0));
  CHECK(m.deferred_fraction == doctest::Approx(0.5));
  CHECK(metrics_from_counts(0, 0, 0, 5, 0).f1_positive == 0.0);
  CHECK(metrics_csv_header() == "method,budget_fraction,misclassification,f1,deferred_fraction,seed");
  CHECK(metrics_csv_row("greedy", 0.1, m, 7) == "greedy,0.1,0.3,0.6666666667,0.5,7");
}

TEST_CASE("evaluation against oracle experts and expectations") {
  std::mt19937_64 rng(12);
  const auto train = testing_support::random_instance(rng, 40, 2);
  auto test_raw = testing_support::random_instance(rng, 60, 2);
  std::vector<LabeledSample> perfect(test_raw.samples().begin(), test_raw.samples().end());
  for (auto& s : perfect) s.human_score = s.label;
  const DataSet test(perfect);
  const auto model = train_svm(train, all_of(40), 0.1, LinearKernel{}, true);

  std::mt19937_64 eval_rng(5);
  const auto all_human = evaluate(test, model, std::vector<bool>(60, true), FixedScores{}, eval_rng);
  CHECK(all_human.misclassification == 0.0);
  CHECK(all_human.deferred_fraction == 1.0);

  const auto margins = test_margins(model, test);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < 60; ++i) wrong += (margins[i] >= 0.0 ? 1 : -1) != test.label(i);
  std::mt19937_64 rng2(5);
  const auto machine = evaluate(test, margins, std::vector<bool>(60, false), FixedScores{}, rng2);
  CHECK(machine.misclassification == doctest::Approx(wrong / 60.0));

  const auto expected = expected_metrics(test, margins, std::vector<bool>(60, false), UniformSynthetic{0.3});
  CHECK(expected.misclassification == doctest::Approx(machine.misclassification));
  const auto expected_human = expected_metrics(test, margins, std::vector<bool>(60, true), UniformSynthetic{0.3});
  CHECK(expected_human.misclassification == doctest::Approx(0.3));
  CHECK(expected_human.deferred_fraction == 1.0);
}

TEST_CASE("baselines") {
  std::mt19937_64 rng(21);
  const auto train = testing_support::random_instance(rng, 60, 2);
  const auto test = testing_support::random_instance(rng, 80, 2);
  const HumanModel human = UniformSynthetic{0.2};
  const auto model = train_svm(train, all_of(60), 0.1, LinearKernel{}, true);
  const auto full = run_baseline(BaselineKind::full_automation, model, test, 0.3, human, 4);
  const auto unc0 = run_baseline(BaselineKind::uncertainty, model, test, 0.0, human, 4);
  const auto pe0 = run_baseline(BaselineKind::predicted_error, model, test, 0.0, human, 4);
  CHECK(unc0.misclassification == full.misclassification);
  CHECK(pe0.misclassification == full.misclassification);
  CHECK(full.deferred_fraction == 0.0);
  const auto none = run_baseline(BaselineKind::no_automation, model, test, 0.0, human, 4);
  CHECK(none.deferred_fraction == 1.0);
  const auto unc = run_baseline(BaselineKind::uncertainty, model, test, 0.25, human, 4);
  CHECK(unc.deferred == 20);
  const auto retrained = run_baseline(BaselineKind::uncertainty, train, test, 0.25, human, 0.1, LinearKernel{}, 4);
  CHECK(retrained.misclassification == doctest::Approx(unc.misclassification));
  CHECK(parse_baseline("predicted_error") == BaselineKind::predicted_error);
  CHECK_FALSE(parse_baseline("greedy").has_value());
}

TEST_CASE("triage end to end on an empty selection") {
  std::mt19937_64 rng(8);
  auto train = std::make_shared<const DataSet>(testing_support::random_instance(rng, 30, 2));
  const auto test = testing_support::random_instance(rng, 40, 2);
  ObjectiveOptions o;
  o.lambda = 0.1;
  const ObjectiveContext ctx(train, LinearKernel{}, human_errors(UniformSynthetic{0.2}, *train), o);
  const auto sol = distorted_greedy(ctx, 0, 1.0);
  const auto m = run_triage(*train, sol, test, UniformSynthetic{0.2}, 3);
  const auto full = run_baseline(BaselineKind::full_automation, *ctx.full_model(), test, 0.0, UniformSynthetic{0.2}, 3);
  CHECK(m.misclassification == full.misclassification);
  CHECK(m.deferred == 0);
  const auto policy = fit_policy(*train, sol);
  CHECK(policy.budget_fraction == 0.0);
  CHECK(decide_batch(policy, *sol.model, test, 0.25) == std::vector<bool>(top_k_assignment(std::vector<double>(40, 0.0), 0.25)));
}
