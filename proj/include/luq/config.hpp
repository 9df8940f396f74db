#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "luq/lrdecay.hpp"

namespace luq {

struct ProblemConfig {
  enum class Kind { two_point, density_1d, synthetic, file };
  Kind kind = Kind::two_point;
  int n_atoms = 2000;  // density_1d
  struct Synthetic {
    int dim = 2;
    int n_clients = 4;
    double mu = 1.0;
    double l = 2.0;
    double center_spread = 1.0;
    int examples_per_client = 1;
    std::uint64_t seed = 0;
  } synthetic;
  std::string path;  // file
};

struct ThetaConfig {
  enum class Kind { fedavg, fomaml, maml, custom };
  Kind kind = Kind::fedavg;
  int k = 1;
  std::vector<double> weights;  // custom
};

struct SweepConfig {
  enum class Axis { gamma, k };
  Axis axis = Axis::gamma;
  std::vector<double> gamma_values;
  std::vector<int> k_values;
};

/// Full experiment description; mirrors the JSON config schema.
struct RunConfig {
  ProblemConfig problem;
  ThetaConfig theta;
  double gamma = 0.0;
  Schedule eta;
  ServerOptimizer server = ServerOptimizer::sgd;
  YogiParams yogi;
  UpdateMode mode = UpdateMode::gradient_sum;
  int clients_per_round = 1;
  int batch_size = 1;
  int rounds = 0;
  std::optional<std::variant<double, std::vector<double>>> x0;  // default: zero vector
  std::optional<DecayConfig> decay;
  std::optional<SweepConfig> sweep;
  std::uint64_t master_seed = 0;
  std::string output = "metrics.csv";
};

/// Parses and validates the JSON config document; errors name the field.
RunConfig config_from_json(const std::string& text);
RunConfig config_from_file(const std::string& path);

/// Canonical serialization; parse -> serialize -> parse is the identity.
std::string config_to_json(const RunConfig& cfg);

Population build_population(const ProblemConfig& cfg);
ThetaWeights build_theta(const ThetaConfig& cfg);

/// Resolves the config against a concrete population (x0 expansion, bounds
/// checks). Emits the descent-lemma step-size warning to stderr unless quiet.
RunSpec build_run_spec(const RunConfig& cfg, const Population& pop, int n_threads,
                       std::optional<std::uint64_t> seed_override, bool quiet);

}  // namespace luq
