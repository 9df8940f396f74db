#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "luq/harness.hpp"

using namespace luq;

namespace {

const char* kMinimal = R"({
  "problem": {"kind": "two_point"},
  "algorithm": {
    "theta": {"kind": "fedavg", "k": 2},
    "gamma": 0.2,
    "eta": {"kind": "constant", "value": 0.1},
    "clients_per_round": 2,
    "rounds": 50
  },
  "master_seed": 7
})";

std::string scratch_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const RunConfig cfg = config_from_json(kMinimal);
  CHECK(cfg.problem.kind == ProblemConfig::Kind::two_point);
  CHECK(cfg.theta.kind == ThetaConfig::Kind::fedavg);
  CHECK(cfg.theta.k == 2);
  CHECK(cfg.gamma == 0.2);
  CHECK(cfg.eta.kind == Schedule::Kind::constant);
  CHECK(cfg.server == ServerOptimizer::sgd);
  CHECK(cfg.mode == UpdateMode::gradient_sum);
  CHECK(cfg.batch_size == 1);
  CHECK(!cfg.x0.has_value());
  CHECK(!cfg.decay.has_value());
  CHECK(cfg.master_seed == 7);
}

TEST_CASE("round trip is the identity on all fields") {
  const RunConfig once = config_from_json(kMinimal);
  const std::string canon = config_to_json(once);
  const RunConfig twice = config_from_json(canon);
  CHECK(config_to_json(twice) == canon);
}

TEST_CASE("missing and invalid fields are named") {
  CHECK_THROWS_WITH_AS(config_from_json(R"({"master_seed": 1})"),
                       doctest::Contains("problem"), Error);
  CHECK_THROWS_WITH_AS(
      config_from_json(
          R"({"problem": {"kind": "two_point"}, "algorithm": {"theta": {"kind": "fedavg", "k": 1},
              "gamma": 0.1, "eta": {"kind": "constant", "value": 0.1},
              "clients_per_round": 1}, "master_seed": 1})"),
      doctest::Contains("rounds"), Error);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"problem": {"kind": "hexagonal"}})"),
                       doctest::Contains("problem.kind"), Error);
  CHECK_THROWS_AS(config_from_json("{"), Error);
}

TEST_CASE("x0 accepts scalars and arrays") {
  RunConfig cfg = config_from_json(kMinimal);
  const Population pop = build_population(cfg.problem);

  cfg.x0 = 1.5;
  RunSpec spec = build_run_spec(cfg, pop, 1, {}, true);
  CHECK(spec.x0[0] == 1.5);

  cfg.x0 = std::vector<double>{0.25};
  spec = build_run_spec(cfg, pop, 1, {}, true);
  CHECK(spec.x0[0] == 0.25);

  cfg.x0 = std::vector<double>{0.25, 0.5};
  CHECK_THROWS_WITH_AS(build_run_spec(cfg, pop, 1, {}, true), doctest::Contains("x0"), Error);
}

TEST_CASE("participation must fit the population") {
  RunConfig cfg = config_from_json(kMinimal);
  cfg.clients_per_round = 3;
  const Population pop = build_population(cfg.problem);
  CHECK_THROWS_WITH_AS(build_run_spec(cfg, pop, 1, {}, true),
                       doctest::Contains("clients_per_round"), Error);
}

TEST_CASE("seed override wins") {
  const RunConfig cfg = config_from_json(kMinimal);
  const Population pop = build_population(cfg.problem);
  const RunSpec spec = build_run_spec(cfg, pop, 1, 1234, true);
  CHECK(spec.master_seed == 1234);
}

TEST_CASE("maml theta configures exact meta gradients") {
  std::string text(kMinimal);
  text.replace(text.find("\"fedavg\""), 8, "\"maml\"");
  const RunConfig cfg = config_from_json(text);
  const Population pop = build_population(cfg.problem);
  const RunSpec spec = build_run_spec(cfg, pop, 1, {}, true);
  REQUIRE(spec.maml_k.has_value());
  CHECK(*spec.maml_k == 2);
  CHECK(spec.theta.k() == 5);
}

TEST_CASE("decay block requires a constant base schedule") {
  std::string text = R"({
    "problem": {"kind": "two_point"},
    "algorithm": {
      "theta": {"kind": "fedavg", "k": 2},
      "gamma": 0.2,
      "eta": {"kind": "inverse_time", "a": 1.0, "b": 5.0},
      "clients_per_round": 2,
      "rounds": 10
    },
    "decay": {"delta": 1e-4, "alpha": 0.1, "beta": 0.9, "window": 2, "patience": 2, "cooldown": 2},
    "master_seed": 1
  })";
  CHECK_THROWS_WITH_AS(config_from_json(text), doctest::Contains("constant"), Error);
}

TEST_CASE("two-point run lands on the closed-form minimizer gap") {
  RunConfig cfg = config_from_json(kMinimal);
  cfg.rounds = 2000;
  RunOptions opts;
  opts.quiet = true;
  opts.output_override = scratch_path("luq_test_two_point.csv");
  const RunResult result = execute_run(cfg, opts);

  // The dist_true_min column must end at the closed-form gap 1/75.
  std::ifstream in(opts.output_override);
  REQUIRE(in.good());
  std::string line;
  std::string last;
  std::getline(in, line);  // header
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') last = line;
  std::istringstream fields(last);
  std::string cell;
  for (int i = 0; i <= 5; ++i) std::getline(fields, cell, ',');
  CHECK(std::abs(std::stod(cell) - 1.0 / 75.0) <= 1e-6);

  // Same config and seed: identical bytes.
  const std::string again = scratch_path("luq_test_two_point_again.csv");
  RunOptions opts2 = opts;
  opts2.output_override = again;
  execute_run(cfg, opts2);
  std::ifstream a(opts.output_override, std::ios::binary);
  std::ifstream b(again, std::ios::binary);
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  std::filesystem::remove(opts.output_override);
  std::filesystem::remove(again);
}

TEST_CASE("run execution writes the metrics CSV") {
  RunConfig cfg = config_from_json(kMinimal);
  cfg.rounds = 5;
  RunOptions opts;
  opts.quiet = true;
  opts.output_override = scratch_path("luq_test_run.csv");
  const RunResult result = execute_run(cfg, opts);
  CHECK(result.rounds.size() == 5);

  std::ifstream in(opts.output_override);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "round,gamma,eta,true_loss,surrogate_loss,dist_true_min,dist_surrogate_min,"
        "update_norm,mean_client_loss,decayed");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  std::filesystem::remove(opts.output_override);
}

TEST_CASE("sweep emits combined and summary files") {
  RunConfig cfg = config_from_json(kMinimal);
  cfg.rounds = 400;
  SweepConfig sweep;
  sweep.axis = SweepConfig::Axis::gamma;
  sweep.gamma_values = {0.0, 0.2};
  cfg.sweep = sweep;
  RunOptions opts;
  opts.quiet = true;
  opts.output_override = scratch_path("luq_test_sweep.csv");
  const SweepResult result = execute_sweep(cfg, opts);
  REQUIRE(result.points.size() == 2);
  // Single-point grids behave exactly like cmd_run on that setting.
  CHECK(std::abs(result.points[0].result.final_x[0] - 2.0 / 3.0) <= 1e-6);
  CHECK(std::abs(result.points[1].result.final_x[0] - 0.68) <= 1e-6);

  std::ifstream combined(opts.output_override);
  REQUIRE(combined.good());
  std::string header;
  std::getline(combined, header);
  CHECK(header.rfind("setting,round,", 0) == 0);

  const std::string summary_path = sweep_summary_path(opts.output_override);
  std::ifstream summary(summary_path);
  REQUIRE(summary.good());
  std::getline(summary, header);
  CHECK(header == "setting,rounds,diverged,final_dist_true_min,final_dist_surrogate_min,x_0");
  std::filesystem::remove(opts.output_override);
  std::filesystem::remove(summary_path);
}

TEST_CASE("sweep without a sweep block is a config error") {
  const RunConfig cfg = config_from_json(kMinimal);
  RunOptions opts;
  opts.quiet = true;
  CHECK_THROWS_AS(execute_sweep(cfg, opts), Error);
}

TEST_CASE("config file loader reports IO separately") {
  CHECK_THROWS_AS(config_from_file("/nonexistent/luq.json"), Error);
  try {
    config_from_file("/nonexistent/luq.json");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
  }
}
