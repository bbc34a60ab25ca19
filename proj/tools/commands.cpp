#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "svg.hpp"
#include "triage/errors.hpp"
#include "triage/human.hpp"
#include "triage/svm.hpp"

namespace cli {

namespace fs = std::filesystem;
using triage::DataSet;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw triage::Error("cannot write " + path.string());
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw triage::ValidationError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// FNV-1a over the CSV form of a data set.
std::string fingerprint(const DataSet& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : triage::format_csv(data)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%zu:%016llx", data.size(), static_cast<unsigned long long>(h));
  return buf;
}

triage::IndexSet all_indices(std::size_t n) {
  triage::IndexSet out(n);
  std::iota(out.begin(), out.end(), triage::Index{0});
  return out;
}

// Runs fn(k) for k in [0, count) on a pool of `workers` threads; first error wins.
template <class Fn>
void run_pool(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct SeedState {
  DataSet train;
  DataSet test;
  double lambda = 1.0;
  std::shared_ptr<triage::ObjectiveContext> ctx;
};

SeedState prepare_seed(const ExperimentConfig& config, std::uint64_t seed) {
  auto [train, test] = prepare_data(config, seed);
  SeedState s{std::move(train), std::move(test), 1.0, nullptr};
  s.lambda = config.lambda ? *config.lambda : cross_validate_lambda(s.train, config, seed);
  auto data = std::make_shared<const DataSet>(s.train);
  s.ctx = std::make_shared<triage::ObjectiveContext>(data, config.kernel_value(),
                                                     triage::human_errors(config.human_model(), s.train),
                                                     objective_options(config, s.lambda));
  return s;
}

ResultRow run_cell(const ExperimentConfig& config, const SeedState& state, const std::string& method, double budget,
                   std::uint64_t seed) {
  ResultRow row;
  row.method = method;
  row.budget_fraction = budget;
  row.seed = seed;
  const auto human = config.human_model();
  if (auto kind = triage::parse_baseline(method)) {
    row.metrics = triage::run_baseline(*kind, *state.ctx->full_model(), state.test, budget, human, seed);
    return row;
  }
  const std::size_t n = budget_count(budget, state.train.size());
  const auto sol = solve_triage(*state.ctx, config, method, n, seed);
  row.metrics = triage::run_triage(state.train, sol, state.test, human, seed);
  row.gamma_used = sol.gamma_used;
  row.selected_count = sol.selected.size();
  row.seconds_per_iter = sol.seconds_per_iteration;
  return row;
}

void write_charts(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
  for (const auto& [metric, label] : {std::pair{"misclassification", "misclassification"}, {"f1", "F1 (positive)"}}) {
    std::vector<Series> series;
    for (const auto& method : config.methods) {
      Series s;
      s.name = method;
      for (double b : config.budgets) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : rows) {
          if (r.method != method || r.budget_fraction != b || !r.error.empty()) continue;
          sum += std::string(metric) == "f1" ? r.metrics.f1_positive : r.metrics.misclassification;
          ++count;
        }
        if (count == 0) continue;
        s.x.push_back(b);
        s.y.push_back(sum / static_cast<double>(count));
      }
      series.push_back(std::move(s));
    }
    write_file(config.out / (std::string(metric) + ".svg"),
               line_chart(std::string(label) + " vs budget", "n / |V|", label, series));
  }
}

std::string format_policy(const triage::DeferralPolicy& p) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", p.weight);
  out << "weight=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", p.bias);
  out << "bias=" << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", p.budget_fraction);
  out << "budget_fraction=" << buf << '\n';
  out << "constant=" << (p.constant ? (*p.constant ? "always" : "never") : "none") << '\n';
  return out.str();
}

triage::DeferralPolicy parse_policy(const std::string& text) {
  const auto s = Settings::parse(text, "policy");
  triage::DeferralPolicy p;
  auto need = [&](const std::string& key) {
    auto v = s.get(key);
    if (!v) throw triage::ParseError("policy file lacks '" + key + "'");
    return *v;
  };
  p.weight = std::stod(need("weight"));
  p.bias = std::stod(need("bias"));
  p.budget_fraction = std::stod(need("budget_fraction"));
  const auto constant = need("constant");
  if (constant == "always") p.constant = true;
  if (constant == "never") p.constant = false;
  return p;
}

}  // namespace

std::size_t budget_count(double fraction, std::size_t size) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(size) + 1e-9));
}

std::pair<DataSet, DataSet> prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.data == "synthetic:linear" || config.data == "synthetic:quadratic") {
    const auto full = config.data == "synthetic:linear"
                          ? triage::generate_synthetic_linear(config.count, config.delta_h, seed)
                          : triage::generate_synthetic_quadratic(config.count, config.delta_h, seed);
    return triage::split(full, config.train_fraction, seed);
  }
  auto data = triage::load_csv(config.data);
  if (config.test_data) return {std::move(data), triage::load_csv(*config.test_data)};
  return triage::split(data, config.train_fraction, seed);
}

triage::ObjectiveOptions objective_options(const ExperimentConfig& config, double lambda) {
  triage::ObjectiveOptions o;
  o.lambda = lambda;
  o.with_offset = config.with_offset;
  o.hard_margin = config.hard_margin;
  o.solver_tolerance = config.solver_tolerance;
  return o;
}

double cross_validate_lambda(const DataSet& train, const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = train.size();
  const std::size_t folds = std::min(config.cv_folds, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto kernel = config.kernel_value();

  double best_lambda = config.lambda_grid.front();
  double best_error = std::numeric_limits<double>::infinity();
  for (double lambda : config.lambda_grid) {
    std::size_t wrong = 0;
    std::size_t seen = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      triage::IndexSet fit, held;
      for (std::size_t r = 0; r < n; ++r) (r % folds == f ? held : fit).push_back(order[r]);
      std::sort(fit.begin(), fit.end());
      const auto fit_data = train.subset(fit);
      if (fit_data.count_label(1) == 0 || fit_data.count_label(-1) == 0) continue;
      const auto model = triage::train_svm(fit_data, all_indices(fit_data.size()), lambda, kernel, config.with_offset);
      for (auto i : held) {
        const int predicted = model.margin(train.features(i)) >= 0.0 ? 1 : -1;
        wrong += predicted != train.label(i) ? 1 : 0;
        ++seen;
      }
    }
    if (seen == 0) continue;
    const double error = static_cast<double>(wrong) / static_cast<double>(seen);
    if (error < best_error) {
      best_error = error;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

triage::BoundVariant default_variant(const ExperimentConfig& config) {
  if (config.hard_margin) return triage::BoundVariant::hard_margin;
  if (!config.with_offset) return triage::BoundVariant::no_offset;
  if (std::holds_alternative<triage::LinearKernel>(config.kernel_value())) return triage::BoundVariant::linear_offset;
  return triage::BoundVariant::kernel_offset;
}

double default_gamma_min(const triage::ObjectiveContext& ctx, const ExperimentConfig& config, std::size_t budget) {
  const double floor = 1.0 / static_cast<double>(ctx.size());
  if (budget == 0) return floor;
  const auto report = triage::gamma_bound(*ctx.gram(), ctx.options().lambda, default_variant(config), budget);
  return std::max(floor, report.gamma_star);
}

triage::TriageSolution solve_triage(const triage::ObjectiveContext& ctx, const ExperimentConfig& config,
                                    const std::string& method, std::size_t budget, std::uint64_t seed) {
  const bool stochastic = method == "stochastic_greedy";
  if (!stochastic && method != "greedy") throw triage::ValidationError("'" + method + "' is not a triage method");
  triage::GreedyOptions options;
  options.skip_degenerate = config.skip_degenerate;
  auto run = [&](double gamma) {
    return stochastic ? triage::stochastic_distorted_greedy(ctx, budget, gamma, config.epsilon, seed, options)
                      : triage::distorted_greedy(ctx, budget, gamma, options);
  };
  switch (config.gamma_mode) {
    case GammaMode::fixed:
      return run(config.gamma);
    case GammaMode::theorem_bound: {
      const auto report = triage::gamma_bound(*ctx.gram(), ctx.options().lambda, default_variant(config), budget);
      if (!(report.gamma_star > 0.0)) {
        throw triage::ValidationError("the theorem bound is vacuous here (gamma* = 0); choose gamma = guess");
      }
      return run(report.gamma_star);
    }
    case GammaMode::guess: {
      const double floor = config.gamma_min ? *config.gamma_min : default_gamma_min(ctx, config, budget);
      if (!stochastic) return triage::guess_gamma_run(ctx, budget, config.grid_ratio, floor, options);
      std::optional<triage::TriageSolution> best;
      std::vector<triage::GridResult> grid;
      for (double gamma : triage::gamma_grid(config.grid_ratio, floor)) {
        auto sol = run(gamma);
        grid.push_back({gamma, sol.objective(), sol.selected.size()});
        if (!best || sol.objective() > best->objective()) best = std::move(sol);
      }
      best->grid = std::move(grid);
      return std::move(*best);
    }
  }
  throw triage::Error("unreachable gamma mode");
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& config, bool record_timing) {
  std::vector<std::optional<SeedState>> states(config.seeds.size());
  std::vector<std::string> seed_errors(config.seeds.size());
  run_pool(config.seeds.size(), config.workers, [&](std::size_t k) {
    try {
      states[k] = prepare_seed(config, config.seeds[k]);
    } catch (const std::exception& e) {
      seed_errors[k] = e.what();
    }
  });

  struct Cell {
    std::size_t method, budget, seed;
  };
  std::vector<Cell> cells;
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      for (std::size_t s = 0; s < config.seeds.size(); ++s) cells.push_back({m, b, s});
    }
  }
  std::vector<ResultRow> rows(cells.size());
  run_pool(cells.size(), config.workers, [&](std::size_t k) {
    const auto& cell = cells[k];
    const auto& method = config.methods[cell.method];
    const double budget = config.budgets[cell.budget];
    const auto seed = config.seeds[cell.seed];
    try {
      if (!states[cell.seed]) throw triage::Error(seed_errors[cell.seed]);
      rows[k] = run_cell(config, *states[cell.seed], method, budget, seed);
    } catch (const std::exception& e) {
      rows[k] = ResultRow{};
      rows[k].method = method;
      rows[k].budget_fraction = budget;
      rows[k].seed = seed;
      rows[k].error = e.what();
    }
    if (!record_timing) rows[k].seconds_per_iter = 0.0;
  });
  return rows;
}

std::string results_header() {
  return "method,budget_fraction,seed,misclassification,f1,deferred_fraction,gamma_used,selected_count,"
         "seconds_per_iter";
}

std::string format_results(const std::vector<ResultRow>& rows, bool record_timing) {
  const bool any_error = std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); });
  std::ostringstream out;
  out << results_header() << (any_error ? ",error" : "") << '\n';
  for (const auto& r : rows) {
    out << r.method << ',' << real(r.budget_fraction) << ',' << r.seed << ',';
    if (r.error.empty()) {
      out << real(r.metrics.misclassification) << ',' << real(r.metrics.f1_positive) << ','
          << real(r.metrics.deferred_fraction) << ',' << (r.gamma_used ? real(*r.gamma_used) : "") << ','
          << r.selected_count << ',' << (record_timing ? real(r.seconds_per_iter) : "");
    } else {
      out << ",,,,,";
    }
    if (any_error) {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ',' << msg;
    }
    out << '\n';
  }
  return out.str();
}

int cmd_synth(const std::string& kind, std::size_t count, double delta_h, std::uint64_t seed,
              const std::string& output, std::ostream& log) {
  if (!(delta_h >= 0.0 && delta_h <= 1.0)) throw triage::ValidationError("delta-h must lie in [0, 1]");
  DataSet data = kind == "linear"      ? triage::generate_synthetic_linear(count, delta_h, seed)
                 : kind == "quadratic" ? triage::generate_synthetic_quadratic(count, delta_h, seed)
                                       : throw triage::ValidationError("kind must be linear or quadratic");
  write_file(output, triage::format_csv(data));
  log << "wrote " << data.size() << " samples to " << output << '\n';
  return 0;
}

int cmd_train(const ExperimentConfig& config, const std::string& method, double budget, std::ostream& log) {
  if (!(budget >= 0.0 && budget <= 1.0)) throw triage::ValidationError("budget must lie in [0, 1]");
  const auto seed = config.seeds.front();
  const auto state = prepare_seed(config, seed);
  const std::size_t n = budget_count(budget, state.train.size());
  const auto sol = solve_triage(*state.ctx, config, method, n, seed);
  const auto policy = triage::fit_policy(state.train, sol);

  std::ostringstream summary;
  summary << "method=" << method << "\ntrain_data=" << fingerprint(state.train) << "\nseed=" << seed << "\nlambda=" << real(state.lambda) << "\nbudget=" << n
          << "\ngamma_used=" << real(sol.gamma_used) << "\ng=" << real(sol.g) << "\nc=" << real(sol.c)
          << "\nobjective=" << real(sol.objective()) << "\nselected=";
  for (std::size_t k = 0; k < sol.selected.size(); ++k) summary << (k ? "," : "") << sol.selected[k];
  summary << '\n';

  write_file(config.out / "solution.txt", summary.str());
  write_file(config.out / "trace.csv", triage::format_trace_csv(sol));
  write_file(config.out / "model.txt", triage::serialize_model(*sol.model));
  write_file(config.out / "policy.txt", format_policy(policy));
  log << summary.str();
  return 0;
}

int cmd_bounds(const ExperimentConfig& config, std::optional<triage::BoundVariant> variant, std::ostream& log) {
  const auto [train, test] = prepare_data(config, config.seeds.front());
  const double lambda = config.lambda ? *config.lambda : cross_validate_lambda(train, config, config.seeds.front());
  const double max_budget = *std::max_element(config.budgets.begin(), config.budgets.end());
  const std::size_t n = budget_count(max_budget, train.size());
  const auto report = triage::gamma_bound(train, lambda, config.kernel_value(), variant.value_or(default_variant(config)),
                                          n > 0 ? std::optional<std::size_t>(n) : std::nullopt);
  const auto text = triage::format_report(report);
  write_file(config.out / "bounds.txt", text);
  log << text;
  return 0;
}

int cmd_sweep(const ExperimentConfig& config, bool record_timing, std::ostream& log) {
  const auto rows = run_sweep(config, record_timing);
  write_file(config.out / "results.csv", format_results(rows, record_timing));
  if (config.svg) write_charts(config, rows);
  const auto failed = static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ResultRow& r) { return !r.error.empty(); }));
  log << "wrote " << rows.size() << " rows to " << (config.out / "results.csv").string();
  if (failed) log << " (" << failed << " failed)";
  log << '\n';
  return failed == rows.size() ? 2 : 0;
}

int cmd_eval(const ExperimentConfig& config, std::optional<double> budget, std::ostream& log) {
  const auto seed = config.seeds.front();
  const auto [train, test] = prepare_data(config, seed);
  const auto trained_on = Settings::parse(read_file(config.out / "solution.txt"), "solution").get("train_data");
  if (trained_on != fingerprint(train)) {
    throw triage::SchemaError("the saved model was trained on different data; rerun eval with the data settings "
                              "used for train");
  }
  auto gram = std::make_shared<const triage::GramMatrix>(std::make_shared<const DataSet>(train), config.kernel_value());
  const auto model = triage::parse_model(read_file(config.out / "model.txt"), gram);
  const auto policy = parse_policy(read_file(config.out / "policy.txt"));
  const double fraction = budget.value_or(policy.budget_fraction);
  const auto deferred = triage::decide_batch(policy, model, test, fraction);
  std::mt19937_64 rng(seed);
  const auto margins = triage::test_margins(model, test);
  const auto metrics = triage::evaluate(test, margins, deferred, config.human_model(), rng);
  const auto expected = triage::expected_metrics(test, margins, deferred, config.human_model());
  std::ostringstream out;
  out << triage::metrics_csv_header() << '\n' << triage::metrics_csv_row("triage", fraction, metrics, seed) << '\n';
  write_file(config.out / "metrics.csv", out.str());
  log << out.str() << "expected_misclassification=" << real(expected.misclassification)
      << "\nexpected_f1=" << real(expected.f1_positive) << '\n';
  return 0;
}

}  // namespace cli
