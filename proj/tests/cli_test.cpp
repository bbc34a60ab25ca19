#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "triage/errors.hpp"

using namespace cli;

namespace {

ExperimentConfig small_config(const std::string& extra = "") {
  return to_config(Settings::parse("count = 80\nseeds = 1, 2\nbudgets = 0, 0.1, 0.2\n" + extra));
}

}  // namespace

TEST_CASE("settings parsing") {
  const auto s = Settings::parse("# comment\n  lambda = 0.5  \n\nkernel=rbf:2 # trailing\nlambda = 2\n");
  CHECK(s.get("lambda") == "2");
  CHECK(s.get("kernel") == "rbf:2");
  CHECK_FALSE(s.has("count"));
  CHECK_THROWS(Settings::parse("no equals sign\n"));
}

TEST_CASE("config validation") {
  const auto d = to_config(Settings{});
  CHECK(d.count == 400);
  CHECK(d.budgets == std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4});
  CHECK(d.seeds.size() == 5);
  CHECK(d.gamma_mode == GammaMode::guess);
  CHECK(d.grid_ratio == 0.7);
  CHECK_FALSE(d.gamma_min.has_value());

  const auto c = to_config(Settings::parse("lambda = cv\ngamma = 0.5\nmethods = greedy, uncertainty\nhuman = aptos\n"));
  CHECK_FALSE(c.lambda.has_value());
  CHECK(c.gamma_mode == GammaMode::fixed);
  CHECK(c.gamma == 0.5);
  CHECK(c.methods == std::vector<std::string>{"greedy", "uncertainty"});
  CHECK(std::holds_alternative<triage::DirichletCategorical>(c.human_model()));
  CHECK(to_config(Settings::parse("gamma = theorem_bound")).gamma_mode == GammaMode::theorem_bound);

  for (const char* bad : {"colour = blue", "delta_h = 1.5", "budgets = 0.1, 2", "methods = magic", "gamma = 0",
                          "human = nobody", "kernel = rbf:0", "train_fraction = 1", "lambda = -1", "count = x",
                          "epsilon = 1", "workers = 0"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(to_config(Settings::parse(bad)), triage::Error);
  }
  CHECK_THROWS_AS(to_config(Settings::parse("colour = blue")), triage::ValidationError);
  CHECK(parse_real_list("0, 0.5,1") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(budget_count(0.3, 10) == 3);
  CHECK(budget_count(0.1, 240) == 24);
}

TEST_CASE("sweep grid and determinism") {
  const auto config = small_config("methods = greedy, uncertainty\n");
  const auto rows = run_sweep(config, false);
  REQUIRE(rows.size() == 2 * 3 * 2);
  CHECK(rows.front().method == "greedy");
  CHECK(rows.back().method == "uncertainty");
  for (const auto& r : rows) CHECK(r.error.empty());
  CHECK(format_results(rows, false) == format_results(run_sweep(config, false), false));
  const auto text = format_results(rows, false);
  CHECK(text.rfind(results_header() + "\n", 0) == 0);
}

TEST_CASE("budget zero triage equals full automation") {
  const auto config = small_config("methods = greedy, full_automation\nbudgets = 0\n");
  const auto rows = run_sweep(config, false);
  REQUIRE(rows.size() == 4);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(rows[k].metrics.misclassification == rows[k + 2].metrics.misclassification);
    CHECK(rows[k].metrics.f1_positive == rows[k + 2].metrics.f1_positive);
    CHECK(rows[k].selected_count == 0);
  }
}

TEST_CASE("theorem-bound gamma is the bound itself") {
  const auto config = small_config("methods = greedy\nbudgets = 0.05\nseeds = 3\ngamma = theorem_bound\n");
  const auto [train, test] = prepare_data(config, 3);
  const auto report = triage::gamma_bound(train, 1.0, triage::LinearKernel{}, triage::BoundVariant::linear_offset,
                                          budget_count(0.05, train.size()));
  const auto rows = run_sweep(config, false);
  REQUIRE(rows.size() == 1);
  if (report.gamma_star > 0.0) {
    CHECK(rows[0].error.empty());
    REQUIRE(rows[0].gamma_used.has_value());
    CHECK(*rows[0].gamma_used == report.gamma_star);
  } else {
    CHECK_FALSE(rows[0].error.empty());
  }
}

TEST_CASE("failed cells become error rows") {
  const auto csv = std::filesystem::temp_directory_path() / "svm_triage_one_class.csv";
  {
    std::ofstream out(csv);
    out << "f1,y,h\n";
    for (int i = 0; i < 20; ++i) out << i << ",1,0.5\n";
  }
  const auto config = small_config("methods = greedy\nbudgets = 0.1\nseeds = 1\ndata = " + csv.string() + "\n");
  const auto rows = run_sweep(config, false);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].error.empty());
  const auto text = format_results(rows, false);
  CHECK(text.substr(0, text.find('\n')) == results_header() + ",error");
}

TEST_CASE("bounds command output") {
  std::ostringstream log;
  auto config = small_config();
  config.out = std::filesystem::temp_directory_path() / "svm_triage_cli_test";
  CHECK(cmd_bounds(config, triage::BoundVariant::hard_margin, log) == 0);
  CHECK(log.str().find("variant=hard_margin") != std::string::npos);
}
