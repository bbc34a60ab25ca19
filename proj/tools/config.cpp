#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "triage/errors.hpp"

namespace cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw triage::ValidationError(key + ": expected a number, got '" + text + "'");
  }
}

std::uint64_t to_count(const std::string& key, const std::string& text) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    throw triage::ValidationError(key + ": expected a nonnegative integer, got '" + text + "'");
  }
  return std::stoull(text);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw triage::ValidationError(key + ": expected true or false, got '" + text + "'");
}

const std::set<std::string> kMethods{"greedy",          "stochastic_greedy", "uncertainty",
                                     "predicted_error", "full_automation",   "no_automation"};

}  // namespace

Settings Settings::parse(const std::string& text, const std::string& origin) {
  Settings s;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw triage::ParseError(origin + ":" + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw triage::ParseError(origin + ":" + std::to_string(number) + ": empty key");
    s.set(key, trim(line.substr(eq + 1)));
  }
  return s;
}

Settings Settings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw triage::ValidationError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::optional<std::string> Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& w : parse_word_list(text)) out.push_back(to_real("list", w));
  return out;
}

std::vector<std::string> parse_word_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

triage::HumanModel ExperimentConfig::human_model() const {
  if (human == "uniform") return triage::UniformSynthetic{delta_h};
  if (human == "fixed") return triage::FixedScores{};
  return triage::human_preset(human);
}

triage::Kernel ExperimentConfig::kernel_value() const { return triage::parse_kernel(kernel); }

ExperimentConfig to_config(const Settings& settings) {
  ExperimentConfig c;
  for (const auto& [key, value] : settings.values()) {
    if (key == "data") {
      c.data = value;
    } else if (key == "test_data") {
      c.test_data = value;
    } else if (key == "count") {
      c.count = to_count(key, value);
    } else if (key == "delta_h") {
      c.delta_h = to_real(key, value);
    } else if (key == "train_fraction") {
      c.train_fraction = to_real(key, value);
    } else if (key == "lambda") {
      c.lambda = value == "cv" ? std::nullopt : std::optional<double>(to_real(key, value));
    } else if (key == "lambda_grid") {
      c.lambda_grid = parse_real_list(value);
    } else if (key == "cv_folds") {
      c.cv_folds = to_count(key, value);
    } else if (key == "kernel") {
      c.kernel = value;
    } else if (key == "offset") {
      c.with_offset = to_bool(key, value);
    } else if (key == "hard_margin") {
      c.hard_margin = to_bool(key, value);
    } else if (key == "budgets") {
      c.budgets = parse_real_list(value);
    } else if (key == "methods") {
      c.methods = parse_word_list(value);
    } else if (key == "human") {
      c.human = value;
    } else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& w : parse_word_list(value)) c.seeds.push_back(to_count(key, w));
    } else if (key == "epsilon") {
      c.epsilon = to_real(key, value);
    } else if (key == "gamma") {
      if (value == "guess") {
        c.gamma_mode = GammaMode::guess;
      } else if (value == "theorem_bound") {
        c.gamma_mode = GammaMode::theorem_bound;
      } else {
        c.gamma_mode = GammaMode::fixed;
        c.gamma = to_real(key, value);
      }
    } else if (key == "grid_ratio") {
      c.grid_ratio = to_real(key, value);
    } else if (key == "gamma_min") {
      c.gamma_min = value == "auto" ? std::nullopt : std::optional<double>(to_real(key, value));
    } else if (key == "solver_tolerance") {
      c.solver_tolerance = to_real(key, value);
    } else if (key == "skip_degenerate") {
      c.skip_degenerate = to_bool(key, value);
    } else if (key == "workers") {
      c.workers = to_count(key, value);
    } else if (key == "svg") {
      c.svg = to_bool(key, value);
    } else if (key == "out") {
      c.out = value;
    } else {
      throw triage::ValidationError("unknown config key '" + key + "'");
    }
  }

  if (c.count < 2) throw triage::ValidationError("count must be at least 2");
  if (!(c.delta_h >= 0.0 && c.delta_h <= 1.0)) throw triage::ValidationError("delta_h must lie in [0, 1]");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw triage::ValidationError("train_fraction must lie in (0, 1)");
  }
  if (c.lambda && !(*c.lambda > 0.0)) throw triage::ValidationError("lambda must be positive or 'cv'");
  if (!c.lambda && (c.lambda_grid.empty() || c.cv_folds < 2)) {
    throw triage::ValidationError("lambda = cv needs a nonempty lambda_grid and cv_folds >= 2");
  }
  for (double l : c.lambda_grid) {
    if (!(l > 0.0)) throw triage::ValidationError("lambda_grid entries must be positive");
  }
  if (c.budgets.empty()) throw triage::ValidationError("at least one budget is required");
  for (double b : c.budgets) {
    if (!(b >= 0.0 && b <= 1.0)) throw triage::ValidationError("budgets must lie in [0, 1]");
  }
  if (c.methods.empty()) throw triage::ValidationError("at least one method is required");
  for (const auto& m : c.methods) {
    if (!kMethods.count(m)) throw triage::ValidationError("unknown method '" + m + "'");
  }
  if (c.seeds.empty()) throw triage::ValidationError("at least one seed is required");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw triage::ValidationError("epsilon must lie in (0, 1)");
  if (c.gamma_mode == GammaMode::fixed && !(c.gamma > 0.0 && c.gamma <= 1.0)) {
    throw triage::ValidationError("gamma must lie in (0, 1]");
  }
  if (!(c.grid_ratio > 0.0 && c.grid_ratio < 1.0)) throw triage::ValidationError("grid_ratio must lie in (0, 1)");
  if (c.gamma_min && !(*c.gamma_min > 0.0 && *c.gamma_min <= 1.0)) throw triage::ValidationError("gamma_min must lie in (0, 1]");
  if (c.workers == 0) throw triage::ValidationError("workers must be at least 1");
  if (c.human != "uniform" && c.human != "fixed") {
    try {
      triage::human_preset(c.human);
    } catch (const triage::Error&) {
      throw triage::ValidationError("unknown human model '" + c.human + "'");
    }
  }
  try {
    triage::validate(c.kernel_value());
  } catch (const triage::Error& e) {
    throw triage::ValidationError(std::string("kernel: ") + e.what());
  }
  return c;
}

}  // namespace cli
