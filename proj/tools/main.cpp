#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "triage/errors.hpp"

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
  std::string data, kernel, lambda, budgets, methods, human, gamma;
  std::optional<double> delta_h;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "Flat key = value config file");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--seed", c.seed, "Single seed (overrides `seeds`)");
  app->add_option("--workers", c.workers, "Worker threads");
  app->add_option("--set", c.overrides, "Extra key=value setting, repeatable");
  app->add_option("--data", c.data, "synthetic:linear, synthetic:quadratic or a CSV path");
  app->add_option("--kernel", c.kernel, "linear | poly:SCALE:DEGREE | rbf:WIDTH");
  app->add_option("--lambda", c.lambda, "Regularization weight or `cv`");
  app->add_option("--budgets", c.budgets, "Comma-separated n/|V| fractions");
  app->add_option("--methods", c.methods, "Comma-separated methods");
  app->add_option("--human", c.human, "uniform | fixed | messidor | stare | aptos");
  app->add_option("--gamma", c.gamma, "Value in (0, 1], `guess` or `theorem_bound`");
  app->add_option("--delta-h", c.delta_h, "Synthetic human error level");
}

cli::ExperimentConfig resolve(const Common& c) {
  cli::Settings s = c.config_path.empty() ? cli::Settings{} : cli::Settings::load(c.config_path);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw triage::ValidationError("--set expects key=value, got '" + kv + "'");
    s.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) s.set(key, v);
  };
  put("out", c.out);
  put("data", c.data);
  put("kernel", c.kernel);
  put("lambda", c.lambda);
  put("budgets", c.budgets);
  put("methods", c.methods);
  put("human", c.human);
  put("gamma", c.gamma);
  if (c.seed) s.set("seeds", std::to_string(*c.seed));
  if (c.workers) s.set("workers", std::to_string(*c.workers));
  if (c.delta_h) s.set("delta_h", std::to_string(*c.delta_h));
  return cli::to_config(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human-assisted SVM triage: training, bounds and experiment sweeps"};
  app.require_subcommand(1);

  std::string kind = "linear", output;
  std::size_t count = 400;
  double synth_delta_h = 0.2;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write a synthetic data set as CSV");
  synth->add_option("--kind", kind, "linear | quadratic");
  synth->add_option("--count", count, "Number of samples");
  synth->add_option("--delta-h", synth_delta_h, "Human error level in [0, 1]");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--output", output, "CSV path (default OUT/synthetic_KIND.csv)");
  std::string synth_out = "out";
  synth->add_option("--out", synth_out, "Output directory");

  Common train_c, bounds_c, sweep_c, eval_c;
  std::string method = "greedy";
  double budget = 0.1;
  auto* train = app.add_subcommand("train", "Run distorted greedy and write solution, trace, model and policy");
  add_common(train, train_c);
  train->add_option("--method", method, "greedy | stochastic_greedy");
  train->add_option("--budget", budget, "n / |V|");

  std::string variant;
  auto* bounds = app.add_subcommand("bounds", "Report the submodularity-ratio lower bound");
  add_common(bounds, bounds_c);
  bounds->add_option("--variant", variant, "linear_offset | kernel_offset | no_offset | hard_margin");

  bool no_timing = false;
  auto* sweep = app.add_subcommand("sweep", "Methods x budgets x seeds grid to results.csv");
  add_common(sweep, sweep_c);
  sweep->add_flag("--no-timing", no_timing, "Leave seconds_per_iter empty (byte-stable output)");
  bool svg = false;
  sweep->add_flag("--svg", svg, "Also write misclassification.svg and f1.svg");

  std::optional<double> eval_budget;
  auto* eval = app.add_subcommand("eval", "Evaluate OUT/model.txt and OUT/policy.txt on the test split");
  add_common(eval, eval_c);
  eval->add_option("--budget", eval_budget, "Test-time deferral fraction (default: the policy's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      if (output.empty()) output = synth_out + "/synthetic_" + kind + ".csv";
      return cli::cmd_synth(kind, count, synth_delta_h, synth_seed, output, std::cout);
    }
    if (*train) return cli::cmd_train(resolve(train_c), method, budget, std::cout);
    if (*bounds) {
      std::optional<triage::BoundVariant> v;
      if (!variant.empty()) v = triage::parse_bound_variant(variant);
      return cli::cmd_bounds(resolve(bounds_c), v, std::cout);
    }
    if (*sweep) {
      if (svg) sweep_c.overrides.push_back("svg=true");
      return cli::cmd_sweep(resolve(sweep_c), !no_timing, std::cout);
    }
    if (*eval) return cli::cmd_eval(resolve(eval_c), eval_budget, std::cout);
  } catch (const triage::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const triage::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const triage::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const triage::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
