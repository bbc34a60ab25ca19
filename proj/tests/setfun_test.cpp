#include <doctest.h>

#include <memory>
#include <numeric>
#include <random>

#include "support.hpp"
#include "triage/errors.hpp"
#include "triage/human.hpp"
#include "triage/setfun.hpp"

using namespace triage;

namespace {

ObjectiveOptions tight_options(double lambda, bool offset) {
  ObjectiveOptions o;
  o.lambda = lambda;
  o.with_offset = offset;
  o.solver_tolerance = 1e-10;
  return o;
}

ObjectiveContext make_context(const DataSet& data, double lambda, bool offset) {
  auto shared = std::make_shared<const DataSet>(data);
  return ObjectiveContext(shared, LinearKernel{}, human_errors(FixedScores{}, data), tight_options(lambda, offset));
}

std::vector<Index> complement(std::size_t n, const IndexSet& s) {
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i) {
    if (!std::binary_search(s.begin(), s.end(), i)) out.push_back(i);
  }
  return out;
}

}  // namespace

TEST_CASE("empty set and a hand-checked composition") {
  std::vector<LabeledSample> samples{LabeledSample{{1.0}, 1, 0.0, {}, {}}, LabeledSample{{-1.0}, -1, 0.0, {}, {}},
                                     LabeledSample{{5.0}, 1, 1.0, {}, {}}};
  const DataSet data(samples);
  const auto ctx = make_context(data, 1.0, true);
  CHECK(ctx.g_value({}) == 0.0);
  const double a_v = testing_support::oracle_svm_value(data, {0, 1, 2}, 1.0, true);
  CHECK(ctx.full_objective() == doctest::Approx(a_v).epsilon(1e-8));
  // Dropping the far point leaves the symmetric pair, whose optimum is 1.5.
  CHECK(ctx.g_value({2}) == doctest::Approx(a_v - 1.5).epsilon(1e-8));
  CHECK(ctx.c_value({2}) == 0.0);
  CHECK(ctx.c_value({0, 1}) == 2.0);
}

TEST_CASE("g agrees with the enumeration oracle") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    const bool offset = trial % 2 == 0;
    const auto data = testing_support::random_instance(rng, 8, 2, 0.7);
    const auto ctx = make_context(data, 0.5, offset);
    const double a_v = testing_support::oracle_svm_value(data, complement(8, {}), 0.5, offset);
    for (const IndexSet& s : {IndexSet{0}, IndexSet{1, 4}, IndexSet{2, 3, 7}}) {
      if (ctx.is_degenerate(s)) continue;
      const double expected = a_v - testing_support::oracle_svm_value(data, complement(8, s), 0.5, offset);
      CAPTURE(trial);
      CHECK(ctx.g_value(s) == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("g is monotone, nonnegative, and gains exceed lambda ||w||^2 plus the hinge") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 8; ++trial) {
    const bool offset = trial % 2 == 1;
    const double lambda = trial < 4 ? 0.1 : 1.0;
    const auto data = testing_support::random_instance(rng, 8, 2);
    const auto ctx = make_context(data, lambda, offset);
    std::vector<IndexSet> sets{{}};
    for (Index i = 0; i < 8; ++i) sets.push_back({i});
    for (Index i = 0; i < 8; ++i)
      for (Index j = i + 1; j < 8; ++j) sets.push_back({i, j});
    for (const auto& s : sets) {
      if (ctx.is_degenerate(s)) continue;
      const double g = ctx.g_value(s);
      CHECK(g >= 0.0);
      const auto model = ctx.model_without(s);
      for (Index j = 0; j < 8; ++j) {
        if (std::binary_search(s.begin(), s.end(), j)) continue;
        const auto next = with_element(s, j);
        if (ctx.is_degenerate(next)) continue;
        const double gain = ctx.marginal_gain(s, j);
        CAPTURE(trial);
        CHECK(gain == doctest::Approx(ctx.g_value(next) - g).epsilon(1e-12));
        const double hinge = std::max(0.0, 1.0 - data.label(j) * model->margin_at(j));
        CHECK(gain >= lambda * model->weight_norm_sq() + hinge - 1e-6);
      }
    }
  }
}

TEST_CASE("c is modular") {
  std::mt19937_64 rng(2);
  const auto data = testing_support::random_instance(rng, 10, 2);
  const auto ctx = make_context(data, 1.0, true);
  const auto& c = ctx.human_errors();
  CHECK(ctx.c_value({1, 3, 8}) == doctest::Approx(c[1] + c[3] + c[8]));
  CHECK(ctx.c_value({1, 3, 8}) == doctest::Approx(ctx.c_value({1}) + ctx.c_value({3, 8})));
}

TEST_CASE("evaluate and the child cache agree with direct solves") {
  std::mt19937_64 rng(6);
  const auto data = testing_support::random_instance(rng, 12, 2);
  const auto ctx = make_context(data, 0.3, true);
  const auto direct = ctx.model_without({2, 5});
  const auto child = ctx.model_without({2}, 5);
  CHECK(objective_value(*direct) == doctest::Approx(objective_value(*child)).epsilon(1e-8));
  const auto e = ctx.evaluate({2, 5});
  CHECK(e.objective() == doctest::Approx(e.g - e.c));
  CHECK(ctx.cache_hits() + ctx.cache_misses() > 0);
}

TEST_CASE("class-degenerate sets") {
  std::vector<LabeledSample> samples{LabeledSample{{1.0}, 1, 0.0, {}, {}}, LabeledSample{{2.0}, 1, 0.0, {}, {}},
                                     LabeledSample{{-1.0}, -1, 0.0, {}, {}}, LabeledSample{{-2.0}, -1, 0.0, {}, {}}};
  const DataSet data(samples);
  const auto with_offset = make_context(data, 1.0, true);
  CHECK(with_offset.is_degenerate({0, 1}));
  CHECK_FALSE(with_offset.is_degenerate({0, 2}));
  CHECK_THROWS_AS(with_offset.g_value({0, 1}), DegenerateProblem);
  CHECK_THROWS_AS(with_offset.marginal_gain({0}, 1), DegenerateProblem);
  const auto without = make_context(data, 1.0, false);
  CHECK_NOTHROW(without.g_value({0, 1}));
  CHECK_THROWS_AS(without.g_value({0, 1, 2, 3}), DegenerateProblem);
  CHECK_THROWS_AS(with_offset.g_value({1, 0}), InvalidArgument);
  CHECK_THROWS_AS(with_offset.g_value({9}), InvalidArgument);

  std::vector<LabeledSample> one_class{LabeledSample{{1.0}, 1, 0.0, {}, {}}, LabeledSample{{2.0}, 1, 0.0, {}, {}}};
  CHECK_THROWS_AS(make_context(DataSet(one_class), 1.0, true), DegenerateProblem);
}
