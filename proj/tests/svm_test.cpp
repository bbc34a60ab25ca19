#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>
#include <random>

#include "support.hpp"
#include "triage/errors.hpp"
#include "triage/svm.hpp"

using namespace triage;
using testing_support::enumerate_dual;
using testing_support::linear_gram;

namespace {

std::shared_ptr<const GramMatrix> line_gram(const std::vector<double>& x, const std::vector<int>& y) {
  std::vector<LabeledSample> samples;
  for (std::size_t i = 0; i < x.size(); ++i) samples.push_back(LabeledSample{{x[i]}, y[i], 0.0, {}, {}});
  return std::make_shared<const GramMatrix>(std::make_shared<const DataSet>(DataSet(std::move(samples))),
                                            LinearKernel{});
}

IndexSet all_of(std::size_t n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), Index{0});
  return s;
}

SvmOptions tight(double lambda, bool offset) {
  SvmOptions o;
  o.lambda = lambda;
  o.with_offset = offset;
  o.tolerance = 1e-10;
  return o;
}

}  // namespace

TEST_CASE("two symmetric points") {
  auto gram = line_gram({1.0, -1.0}, {1, -1});
  const auto model = train_svm(gram, all_of(2), tight(1.0, true));
  CHECK(model.alpha()[0] == doctest::Approx(1.0));
  CHECK(model.alpha()[1] == doctest::Approx(1.0));
  CHECK(*model.offset() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(model.margin(std::vector<double>{1.0}) == doctest::Approx(0.5));
  CHECK(model.margin(std::vector<double>{0.0}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(objective_value(model) == doctest::Approx(1.5));
  CHECK(model.dual_value() == doctest::Approx(1.5));

  double w = 0.0, b = 0.0;
  const double grid = testing_support::grid_primal_1d({1.0, -1.0}, {1, -1}, 1.0, true, w, b);
  CHECK(grid == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(w == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("single point without offset") {
  auto gram = line_gram({1.0, -1.0}, {1, -1});
  const auto model = train_svm(gram, {0}, tight(1.0, false));
  CHECK(model.alpha()[0] == doctest::Approx(1.0));
  CHECK(model.dual_value() == doctest::Approx(0.75));
  CHECK(objective_value(model) == doctest::Approx(0.75));
  CHECK_FALSE(model.offset().has_value());
}

TEST_CASE("hand-assembled coefficients") {
  auto gram = line_gram({1.0, -1.0}, {1, -1});
  const auto zero = SvmModel::from_parts(gram, all_of(2), {0.0, 0.0}, 0.0, 1.0);
  CHECK(objective_value(zero) == 2.0);
  CHECK(zero.weight_norm_sq() == 0.0);

  const auto half = SvmModel::from_parts(gram, all_of(2), {0.5, 0.5}, 0.0, 1.0);
  const auto report = kkt_check(half, 1e-6);
  CHECK(report.inside_margin_violations == IndexSet{0, 1});
  CHECK(report.outside_margin_violations.empty());
  CHECK(report.max_violation > 0.1);
}

TEST_CASE("random instances satisfy KKT and strong duality") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const bool offset = trial % 2 == 0;
    const double lambda = std::pow(10.0, -2.0 + (trial % 5));
    auto data = std::make_shared<const DataSet>(testing_support::random_instance(rng, 10, 2));
    auto gram = std::make_shared<const GramMatrix>(data, LinearKernel{});
    SvmOptions o = tight(lambda, offset);
    o.tolerance = 1e-8;
    const auto model = train_svm(gram, all_of(10), o);
    CAPTURE(trial);
    CHECK(model.converged());
    CHECK(kkt_check(model, 1e-4).violation_count() == 0);
    const double primal = objective_value(model);
    const double dual = model.dual_value();
    CHECK(primal >= dual - 1e-9 * std::max(1.0, primal));
    CHECK(primal - dual <= 1e-5 * std::max(1.0, primal));
  }
}

TEST_CASE("dual optimum matches exact enumeration") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const bool offset = trial % 2 == 1;
    const double lambda = trial % 3 == 0 ? 0.05 : 1.0;
    const std::size_t n = 5 + static_cast<std::size_t>(trial % 3);
    const auto data = testing_support::random_instance(rng, n, 2, 0.5);
    std::vector<int> y;
    for (Index i = 0; i < n; ++i) y.push_back(data.label(i));
    const auto oracle = enumerate_dual(linear_gram(data), y, lambda, offset);
    const auto model = train_svm(data, all_of(n), lambda, LinearKernel{}, offset);
    CAPTURE(trial);
    CHECK(model.dual_value() == doctest::Approx(oracle.value).epsilon(1e-4));
    CHECK(objective_value(model) == doctest::Approx(oracle.value).epsilon(1e-4));
  }
}

TEST_CASE("primal optimum matches a dense grid in one dimension") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<double> x;
    std::vector<int> y;
    for (int i = 0; i < 8; ++i) {
      const int label = i % 2 ? 1 : -1;
      x.push_back(0.7 * label + normal(rng));
      y.push_back(label);
    }
    const bool offset = trial % 2 == 0;
    auto gram = line_gram(x, y);
    const auto model = train_svm(gram, all_of(8), tight(0.5, offset));
    double w = 0.0, b = 0.0;
    const double grid = testing_support::grid_primal_1d(x, y, 0.5, offset, w, b);
    CAPTURE(trial);
    CHECK(objective_value(model) <= grid + 1e-9);
    CHECK(objective_value(model) == doctest::Approx(grid).epsilon(1e-4));
  }
}

TEST_CASE("weight norm bound without offset") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const double lambda = 0.01 * (trial + 1);
    auto data = std::make_shared<const DataSet>(testing_support::random_instance(rng, 15, 3));
    auto gram = std::make_shared<const GramMatrix>(data, RbfKernel{1.0});
    const auto model = train_svm(gram, all_of(15), tight(lambda, false));
    CHECK(model.weight_norm_sq() <= 1.0 / lambda + 1e-9);
  }
}

TEST_CASE("warm start from a solved parent") {
  std::mt19937_64 rng(31);
  auto data = std::make_shared<const DataSet>(testing_support::random_instance(rng, 30, 2));
  auto gram = std::make_shared<const GramMatrix>(data, LinearKernel{});
  const auto parent = train_svm(gram, all_of(30), tight(0.1, true));

  SUBCASE("resolving from the optimum is a fixed point") {
    WarmStart warm{std::vector<double>(parent.alpha().begin(), parent.alpha().end()),
                   std::vector<double>(parent.kernel_sums().begin(), parent.kernel_sums().end())};
    const auto again = train_svm(gram, all_of(30), tight(0.1, true), &warm);
    CHECK(again.dual_value() == doctest::Approx(parent.dual_value()).epsilon(1e-12));
  }
  SUBCASE("dropping a sample matches a cold solve") {
    for (Index dropped : {Index{0}, Index{7}, Index{29}}) {
      auto [active, warm] = warm_start_without(parent, dropped);
      CHECK(active.size() == 29);
      const auto warm_model = train_svm(gram, active, tight(0.1, true), &warm);
      const auto cold_model = train_svm(gram, active, tight(0.1, true));
      CHECK(objective_value(warm_model) == doctest::Approx(objective_value(cold_model)).epsilon(1e-7));
    }
    CHECK_THROWS_AS(warm_start_without(parent, 30), InvalidArgument);
  }
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(3);
  auto data = std::make_shared<const DataSet>(testing_support::random_instance(rng, 12, 2));
  auto gram = std::make_shared<const GramMatrix>(data, PolynomialKernel{0.5, 2});
  const auto model = train_svm(gram, {0, 2, 3, 5, 8, 9, 11}, tight(0.3, true));
  const auto back = parse_model(serialize_model(model), gram);
  CHECK(back.active() == model.active());
  CHECK(*back.offset() == *model.offset());
  for (std::size_t k = 0; k < model.alpha().size(); ++k) CHECK(back.alpha()[k] == model.alpha()[k]);
  for (Index i = 0; i < 12; ++i) CHECK(back.margin_at(i) == model.margin_at(i));

  auto other = std::make_shared<const GramMatrix>(data, LinearKernel{});
  CHECK_THROWS_AS(parse_model(serialize_model(model), other), SchemaError);
  CHECK_THROWS_AS(parse_model("nonsense", gram), ParseError);
}

TEST_CASE("ill-posed training sets") {
  auto gram = line_gram({1.0, 2.0, -1.0}, {1, 1, -1});
  CHECK_THROWS_AS(train_svm(gram, {0, 1}, tight(1.0, true)), DegenerateProblem);
  CHECK_NOTHROW(train_svm(gram, {0, 1}, tight(1.0, false)));
  CHECK_THROWS_AS(train_svm(gram, {}, tight(1.0, false)), InvalidArgument);
  CHECK_THROWS_AS(train_svm(gram, {1, 0}, tight(1.0, false)), InvalidArgument);
  CHECK_THROWS_AS(train_svm(gram, {0, 2}, tight(0.0, true)), InvalidArgument);
}

TEST_CASE("hard margin") {
  std::mt19937_64 rng(9);
  auto data = std::make_shared<const DataSet>(testing_support::separable_instance(rng, 16, 2, 1.0));
  auto gram = std::make_shared<const GramMatrix>(data, LinearKernel{});
  SvmOptions o = tight(1.0, true);
  o.hard_margin = true;
  const auto model = train_svm(gram, all_of(16), o);
  for (Index i = 0; i < 16; ++i) CHECK(data->label(i) * model.margin_at(i) >= 1.0 - 1e-6);

  auto mixed = line_gram({1.0, -1.0, 0.5, -0.5}, {1, -1, -1, 1});
  CHECK_THROWS_AS(train_svm(mixed, all_of(4), o), NonSeparable);
}
