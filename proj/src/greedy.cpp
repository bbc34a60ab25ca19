#include "triage/greedy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "triage/errors.hpp"

namespace triage {

namespace {

// Runs fn(k) for k in [0, count) on up to `workers` threads.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < count; k += workers) fn(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
}

IndexSet remaining(const IndexSet& selected, std::size_t ground_size) {
  IndexSet out;
  std::size_t k = 0;
  for (Index i = 0; i < ground_size; ++i) {
    if (k < selected.size() && selected[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

using CandidateSampler = std::function<IndexSet(const IndexSet& remaining)>;

TriageSolution run_distorted(const ObjectiveContext& ctx, std::size_t budget, double gamma,
                             const GreedyOptions& options, const CandidateSampler& sample) {
  check_gamma(gamma);
  const auto start = std::chrono::steady_clock::now();
  TriageSolution sol;
  sol.budget = budget;
  sol.gamma_used = gamma;
  const auto& c = ctx.human_errors();

  for (std::size_t i = 0; i < budget; ++i) {
    TraceRecord rec;
    rec.iteration = i;
    rec.omega = distortion(i, budget, gamma);

    const IndexSet pool = sample(remaining(sol.selected, ctx.size()));
    std::vector<double> gains(pool.size(), 0.0);
    std::vector<char> feasible(pool.size(), 1);
    parallel_for(pool.size(), options.workers, [&](std::size_t k) {
      if (options.skip_degenerate && ctx.is_degenerate(with_element(sol.selected, pool[k]))) {
        feasible[k] = 0;
        return;
      }
      gains[k] = ctx.marginal_gain(sol.selected, pool[k]);
    });

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_k = pool.size();
    for (std::size_t k = 0; k < pool.size(); ++k) {
      if (!feasible[k]) continue;
      const double value = rec.omega * gains[k] - c[pool[k]];
      if (value > best) {
        best = value;
        best_k = k;
      }
    }
    rec.candidates_evaluated = static_cast<std::size_t>(std::count(feasible.begin(), feasible.end(), 1));
    if (best_k < pool.size()) {
      rec.best_candidate = pool[best_k];
      rec.distorted_gain = best;
      if (best > 0.0) {
        sol.selected = with_element(sol.selected, pool[best_k]);
        rec.chosen = pool[best_k];
      }
    }
    rec.g = sol.selected.empty() ? 0.0 : ctx.g_value(sol.selected);
    rec.c = ctx.c_value(sol.selected);
    rec.objective = rec.g - rec.c;
    sol.trace.push_back(rec);
  }

  sol.model = ctx.model_without(sol.selected);
  sol.g = ctx.g_value(sol.selected);
  sol.c = ctx.c_value(sol.selected);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  sol.seconds_per_iteration = budget ? elapsed / static_cast<double>(budget) : 0.0;
  return sol;
}

// Calls fn(subset) for every k-subset of `elements`, in lexicographic order.
template <class Fn>
void for_each_combination(const IndexSet& elements, std::size_t k, Fn&& fn) {
  const std::size_t n = elements.size();
  if (k > n) return;
  std::vector<std::size_t> pos(k);
  for (std::size_t t = 0; t < k; ++t) pos[t] = t;
  IndexSet subset(k);
  while (true) {
    for (std::size_t t = 0; t < k; ++t) subset[t] = elements[pos[t]];
    fn(subset);
    std::size_t t = k;
    while (t > 0 && pos[t - 1] == n - k + (t - 1)) --t;
    if (t == 0) return;
    ++pos[t - 1];
    for (std::size_t r = t; r < k; ++r) pos[r] = pos[r - 1] + 1;
  }
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (std::size_t t = 1; t <= k; ++t) r = r * static_cast<long double>(n - k + t) / static_cast<long double>(t);
  if (r > static_cast<long double>(std::numeric_limits<std::size_t>::max() / 4)) {
    return std::numeric_limits<std::size_t>::max() / 4;
  }
  return static_cast<std::size_t>(std::llround(r));
}

std::size_t saturating_add(std::size_t a, std::size_t b) {
  const std::size_t cap = std::numeric_limits<std::size_t>::max() / 4;
  return (a > cap - std::min(b, cap)) ? cap : a + b;
}

SetValue objective_of(const ObjectiveContext& ctx) {
  return [&ctx](const IndexSet& s) -> std::optional<double> {
    if (ctx.is_degenerate(s)) return std::nullopt;
    return ctx.g_value(s) - ctx.c_value(s);
  };
}

SetValue g_of(const ObjectiveContext& ctx) {
  return [&ctx](const IndexSet& s) -> std::optional<double> {
    if (ctx.is_degenerate(s)) return std::nullopt;
    return ctx.g_value(s);
  };
}

IndexSet set_union(const IndexSet& a, const IndexSet& b) {
  IndexSet out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

double distortion(std::size_t iteration, std::size_t budget, double gamma) {
  return std::pow(1.0 - gamma / static_cast<double>(budget), static_cast<double>(budget - (iteration + 1)));
}

TriageSolution distorted_greedy(const ObjectiveContext& ctx, std::size_t budget, double gamma,
                                const GreedyOptions& options) {
  return run_distorted(ctx, budget, gamma, options, [](const IndexSet& pool) { return pool; });
}

std::size_t stochastic_sample_size(std::size_t ground_size, std::size_t remaining_count, std::size_t budget,
                                   double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (budget == 0) return 0;
  const double raw = std::ceil(static_cast<double>(ground_size) / static_cast<double>(budget) * std::log(1.0 / epsilon));
  if (!(raw < static_cast<double>(remaining_count))) return remaining_count;
  return static_cast<std::size_t>(raw);
}

TriageSolution stochastic_distorted_greedy(const ObjectiveContext& ctx, std::size_t budget, double gamma,
                                           double epsilon, std::uint64_t seed, const GreedyOptions& options) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  const std::size_t ground = ctx.size();
  return run_distorted(ctx, budget, gamma, options, [&](const IndexSet& pool) {
    const std::size_t k = stochastic_sample_size(ground, pool.size(), budget, epsilon);
    IndexSet picked;
    picked.reserve(k);
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), static_cast<std::ptrdiff_t>(k), rng);
    return picked;
  });
}

std::vector<double> gamma_grid(double grid_ratio, double gamma_min) {
  if (!(grid_ratio > 0.0 && grid_ratio < 1.0)) throw InvalidArgument("grid ratio must lie in (0, 1)");
  if (!(gamma_min > 0.0 && gamma_min <= 1.0)) throw InvalidArgument("gamma_min must lie in (0, 1]");
  std::vector<double> grid;
  for (double g = 1.0; g >= gamma_min * (1.0 - 1e-12); g *= grid_ratio) grid.push_back(g);
  return grid;
}

TriageSolution guess_gamma_run(const ObjectiveContext& ctx, std::size_t budget, double grid_ratio, double gamma_min,
                               const GreedyOptions& options) {
  const auto grid = gamma_grid(grid_ratio, gamma_min);
  std::optional<TriageSolution> best;
  std::vector<GridResult> results;
  for (double gamma : grid) {
    auto sol = distorted_greedy(ctx, budget, gamma, options);
    results.push_back({gamma, sol.objective(), sol.selected.size()});
    if (!best || sol.objective() > best->objective()) best = std::move(sol);
  }
  best->grid = std::move(results);
  return std::move(*best);
}

std::size_t count_subsets_up_to(std::size_t ground_size, std::size_t max_size) {
  std::size_t total = 0;
  for (std::size_t k = 0; k <= std::min(max_size, ground_size); ++k) total = saturating_add(total, binomial(ground_size, k));
  return total;
}

BruteForceResult brute_force_opt(std::size_t ground_size, const SetValue& objective, std::size_t budget,
                                 std::size_t cap) {
  const std::size_t required = count_subsets_up_to(ground_size, budget);
  if (required > cap) {
    throw EnumerationCapExceeded("brute force needs " + std::to_string(required) + " subsets, cap is " +
                                 std::to_string(cap));
  }
  IndexSet all(ground_size);
  for (Index i = 0; i < ground_size; ++i) all[i] = i;

  BruteForceResult best;
  bool found = false;
  for (std::size_t k = 0; k <= std::min(budget, ground_size); ++k) {
    for_each_combination(all, k, [&](const IndexSet& s) {
      ++best.subsets_enumerated;
      const auto v = objective(s);
      if (!v) return;
      if (!found || *v > best.value) {
        best.value = *v;
        best.selected = s;
        found = true;
      }
    });
  }
  if (!found) throw DegenerateProblem("every candidate set is outside the objective's domain");
  return best;
}

BruteForceResult brute_force_opt(const ObjectiveContext& ctx, std::size_t budget, std::size_t cap) {
  return brute_force_opt(ctx.size(), objective_of(ctx), budget, cap);
}

std::optional<double> submodularity_ratio(const SetValue& f, const IndexSet& base, const IndexSet& batch) {
  const auto f_base = f(base);
  const auto f_all = f(set_union(base, batch));
  if (!f_base || !f_all) return std::nullopt;
  const double denominator = *f_all - *f_base;
  if (denominator <= 1e-9) return std::nullopt;
  double numerator = 0.0;
  for (Index j : batch) {
    const auto f_j = f(with_element(base, j));
    if (!f_j) return std::nullopt;
    numerator += *f_j - *f_base;
  }
  return numerator / denominator;
}

GammaEstimate empirical_gamma(std::size_t ground_size, const SetValue& f, std::optional<std::size_t> max_set_size,
                              std::size_t cap) {
  const std::size_t limit = max_set_size.value_or(ground_size);
  std::size_t pairs = 0;
  for (std::size_t a = 0; a <= std::min(limit, ground_size); ++a) {
    std::size_t inner = 0;
    for (std::size_t b = 1; b <= std::min(limit, ground_size - a); ++b) inner = saturating_add(inner, binomial(ground_size - a, b));
    pairs = saturating_add(pairs, binomial(ground_size, a) * std::max<std::size_t>(inner, 0));
  }
  if (pairs > cap) {
    throw EnumerationCapExceeded("empirical gamma needs " + std::to_string(pairs) + " pairs, cap is " +
                                 std::to_string(cap));
  }

  std::map<IndexSet, std::optional<double>> memo;
  const SetValue cached = [&](const IndexSet& s) {
    auto it = memo.find(s);
    if (it == memo.end()) it = memo.emplace(s, f(s)).first;
    return it->second;
  };

  IndexSet all(ground_size);
  for (Index i = 0; i < ground_size; ++i) all[i] = i;

  GammaEstimate est;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a <= std::min(limit, ground_size); ++a) {
    for_each_combination(all, a, [&](const IndexSet& base) {
      if (!cached(base)) return;
      const IndexSet rest = remaining(base, ground_size);
      for (std::size_t b = 1; b <= std::min(limit, rest.size()); ++b) {
        for_each_combination(rest, b, [&](const IndexSet& batch) {
          ++est.pairs_examined;
          const auto ratio = submodularity_ratio(cached, base, batch);
          if (ratio && *ratio < best) {
            best = *ratio;
            est.witness_base = base;
            est.witness_batch = batch;
          }
        });
      }
    });
  }
  est.gamma = std::isfinite(best) ? std::clamp(best, 0.0, 1.0) : 1.0;
  return est;
}

GammaEstimate empirical_gamma(const ObjectiveContext& ctx, std::optional<std::size_t> max_set_size, std::size_t cap) {
  return empirical_gamma(ctx.size(), g_of(ctx), max_set_size, cap);
}

std::string format_trace_csv(const TriageSolution& solution) {
  std::ostringstream out;
  out << "iter,omega,chosen_index,distorted_gain,g,c,objective\n";
  char buf[256];
  for (const auto& r : solution.trace) {
    const std::string chosen = r.chosen ? std::to_string(*r.chosen) : std::string();
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%s,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.omega, chosen.c_str(),
                  r.distorted_gain, r.g, r.c, r.objective);
    out << buf;
  }
  return out.str();
}

}  // namespace triage
