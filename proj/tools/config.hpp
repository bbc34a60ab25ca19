#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "triage/human.hpp"
#include "triage/kernel.hpp"

namespace cli {

/// Flat `key = value` settings. '#' starts a comment; blank lines are ignored;
/// later assignments win. Values are kept as text until a typed getter runs.
class Settings {
 public:
  static Settings parse(const std::string& text, const std::string& origin = "config");
  static Settings load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class GammaMode { fixed, guess, theorem_bound };

struct ExperimentConfig {
  /// "synthetic:linear", "synthetic:quadratic", or a CSV path.
  std::string data = "synthetic:linear";
  /// Optional held-out CSV; when absent, `data` is split by train_fraction.
  std::optional<std::string> test_data;
  std::size_t count = 400;
  double delta_h = 0.2;
  double train_fraction = 0.6;
  /// Empty means cross-validate over lambda_grid.
  std::optional<double> lambda = 1.0;
  std::vector<double> lambda_grid{0.001, 0.01, 0.1, 1.0, 10.0};
  std::size_t cv_folds = 5;
  std::string kernel = "linear";
  bool with_offset = true;
  bool hard_margin = false;
  std::vector<double> budgets{0.0, 0.1, 0.2, 0.3, 0.4};
  std::vector<std::string> methods{"greedy", "stochastic_greedy", "uncertainty", "predicted_error",
                                   "full_automation", "no_automation"};
  /// uniform | messidor | stare | aptos | fixed
  std::string human = "uniform";
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double epsilon = 0.1;
  GammaMode gamma_mode = GammaMode::guess;
  double gamma = 1.0;
  double grid_ratio = 0.7;
  /// Empty selects max(1 / |V|, gamma*) for the configured bound variant.
  std::optional<double> gamma_min;
  double solver_tolerance = 1e-5;
  bool skip_degenerate = true;
  std::size_t workers = 1;
  bool svg = false;
  std::filesystem::path out = "out";

  triage::HumanModel human_model() const;
  triage::Kernel kernel_value() const;
};

/// Validates and converts settings; unknown keys are rejected.
ExperimentConfig to_config(const Settings& settings);

std::vector<double> parse_real_list(const std::string& text);
std::vector<std::string> parse_word_list(const std::string& text);

}  // namespace cli
