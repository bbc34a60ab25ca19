#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "triage/bounds.hpp"
#include "triage/data.hpp"
#include "triage/deferral.hpp"
#include "triage/greedy.hpp"

namespace cli {

struct ResultRow {
  std::string method;
  double budget_fraction = 0.0;
  std::uint64_t seed = 0;
  triage::Metrics metrics;
  std::optional<double> gamma_used;
  std::size_t selected_count = 0;
  double seconds_per_iter = 0.0;
  std::string error;
};

/// Train/test pair for one seed: synthetic data is generated and split with
/// the seed; a CSV is split with the seed unless test_data is given.
std::pair<triage::DataSet, triage::DataSet> prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// k-fold cross-validated lambda under full automation; ties keep the earlier grid value.
double cross_validate_lambda(const triage::DataSet& train, const ExperimentConfig& config, std::uint64_t seed);

/// floor(fraction |V|), robust to representation error.
std::size_t budget_count(double fraction, std::size_t size);

triage::BoundVariant default_variant(const ExperimentConfig& config);

/// max(1 / |V|, gamma*) for the configured variant.
double default_gamma_min(const triage::ObjectiveContext& ctx, const ExperimentConfig& config, std::size_t budget);

/// One triage run (greedy or stochastic_greedy) with the configured gamma mode.
triage::TriageSolution solve_triage(const triage::ObjectiveContext& ctx, const ExperimentConfig& config,
                                    const std::string& method, std::size_t budget, std::uint64_t seed);

triage::ObjectiveOptions objective_options(const ExperimentConfig& config, double lambda);

/// Every (method, budget, seed) cell, ordered method-major, then budget, then seed.
std::vector<ResultRow> run_sweep(const ExperimentConfig& config, bool record_timing = true);

std::string results_header();
std::string format_results(const std::vector<ResultRow>& rows, bool record_timing = true);

int cmd_synth(const std::string& kind, std::size_t count, double delta_h, std::uint64_t seed,
              const std::string& output, std::ostream& log);
int cmd_train(const ExperimentConfig& config, const std::string& method, double budget, std::ostream& log);
int cmd_bounds(const ExperimentConfig& config, std::optional<triage::BoundVariant> variant, std::ostream& log);
int cmd_sweep(const ExperimentConfig& config, bool record_timing, std::ostream& log);
int cmd_eval(const ExperimentConfig& config, std::optional<double> budget, std::ostream& log);

}  // namespace cli
