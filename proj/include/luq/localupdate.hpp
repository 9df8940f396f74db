#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "luq/surrogate.hpp"

namespace luq {

struct InnerConfig {
  double gamma = 0.0;
  ThetaWeights theta;
  int batch_size = 1;
};

/// K(Theta) mini-batch SGD steps on the client (with-replacement sampling),
/// returning the theta-weighted sum of the step gradients. Deterministic
/// given the stream.
Vector inner_loop(const Client& cl, const Vector& x, const InnerConfig& cfg, Stream rng);

/// Closed-form expectation of inner_loop: Q A (x - c).
Vector inner_loop_expected(const Client& cl, double gamma, const ThetaWeights& theta,
                           const Vector& x);

struct YogiParams {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-5;
};

enum class ServerOptimizer { sgd, yogi };
enum class UpdateMode { gradient_sum, model_delta };

/// Server-side optimizer state. Yogi accumulators start at zero.
struct ServerState {
  ServerOptimizer optimizer = ServerOptimizer::sgd;
  UpdateMode mode = UpdateMode::gradient_sum;
  YogiParams yogi;
  Vector momentum;     // first moment
  Vector accumulator;  // second moment

  static ServerState make(ServerOptimizer opt, UpdateMode mode, std::size_t dim,
                          const YogiParams& yogi = {});
};

/// One server update. gradient_sum applies x - eta u; model_delta folds the
/// client learning rate into the step (x - (eta*gamma) u). Yogi applies its
/// additive adaptive rule to the same input, without bias correction.
Vector server_apply(ServerState& state, const Vector& x, const Vector& q, double eta,
                    double gamma);

struct RoundMetrics {
  int round = 0;
  double gamma = 0.0;
  double eta = 0.0;
  double true_loss = 0.0;
  double surrogate_loss = 0.0;
  double dist_true_min = 0.0;
  double dist_surrogate_min = 0.0;
  double update_norm = 0.0;
  double mean_client_loss = 0.0;
  bool decayed = false;
  // Filled by plateau-decay runs only.
  double window_avg_loss = 0.0;
  double best_window_avg = 0.0;
  int stall_count = 0;
  int cooldown_remaining = 0;
  int n_decays = 0;
};

struct ScheduleContext {
  double mu = 0.0;
  double l = 0.0;
  int k = 1;
  double gamma = 0.0;  // configured constant client learning rate
};

/// Learning-rate schedule for (gamma_t, eta_t).
struct Schedule {
  enum class Kind { constant, inverse_time, fixed_client_decaying_server, joint };
  Kind kind = Kind::constant;
  double value = 0.0;                  // constant eta
  double a = 0.0, b = 0.0;             // inverse_time: eta_t = a / (b + t)
  std::optional<double> a_gamma;       // defaults to 2 / mu_gamma
  std::optional<double> b_gamma;       // defaults to 2 L_gamma^2 / mu_gamma^2
  std::optional<double> joint_b;       // defaults to 3 kappa^2

  static Schedule constant(double eta);
  static Schedule inverse_time(double a, double b);
  static Schedule fixed_client_decaying_server(std::optional<double> a_gamma = {},
                                               std::optional<double> b_gamma = {});
  static Schedule joint(std::optional<double> b = {});
};

/// Evaluates the schedule at round t >= 1. The joint schedule computes
/// gamma_t first, then eta_t from the induced strong-convexity parameter.
std::pair<double, double> schedule_eval(const Schedule& s, int t, const ScheduleContext& ctx);

struct RunSpec {
  ThetaWeights theta;
  double gamma = 0.0;  // constant client LR (ignored by the joint schedule)
  Schedule schedule;
  ServerOptimizer optimizer = ServerOptimizer::sgd;
  UpdateMode mode = UpdateMode::gradient_sum;
  YogiParams yogi;
  int clients_per_round = 1;
  int batch_size = 1;
  int rounds = 0;
  Vector x0;
  std::uint64_t master_seed = 0;
  int n_threads = 1;
  // When set, clients report the exact K-step meta gradient instead of
  // running stochastic inner loops (theta should be maml_equiv(maml_k)).
  std::optional<int> maml_k;
};

struct RunResult {
  std::vector<RoundMetrics> rounds;
  Vector final_x;
  bool diverged = false;
  int diverged_round = 0;
};

/// Full outer loop: T rounds with per-round schedule evaluation and metrics
/// against the closed-form true and surrogate minimizers.
RunResult run(const Population& pop, const RunSpec& spec);

/// Same driver with an explicit (gamma_t, eta_t) sequence; used to replay
/// recorded schedules.
RunResult run_with_schedule(const Population& pop, const RunSpec& spec,
                            const std::function<std::pair<double, double>(int)>& sched);

/// One round: weighted client sampling without replacement, per-slot streams
/// derived from (master_seed, round, slot), weight-renormalized aggregation
/// in ascending slot order, one server update.
std::pair<Vector, RoundMetrics> outer_round(const Population& pop, const Vector& x_t, int m,
                                            double gamma_t, double eta_t,
                                            const ThetaWeights& theta, int batch_size,
                                            ServerState& server, std::uint64_t master_seed,
                                            int t, int n_threads = 1);

/// (mu_gamma, L_gamma): strong convexity and smoothness of the surrogate.
std::pair<double, double> smoothness_params(double mu, double l, double gamma, int k);

/// Variance bound K G^2 / (M B) on the averaged inner-loop output.
double variance_bound(double g_sq, int k, int m, int b);

/// Constant-step error floor eta K G^2 / (mu_gamma M B).
double error_floor(double eta, int k, double g_sq, int m, int b, double mu_gamma);

namespace detail {

using ClientFn = std::function<Vector(const Client&, const Vector&, double, Stream)>;

struct RoundOutcome {
  Vector x_next;
  double update_norm = 0.0;
  double mean_client_loss = 0.0;
};

RoundOutcome round_core(const Population& pop, const Vector& x, int m, double gamma,
                        double eta, ServerState& server, std::uint64_t master_seed, int t,
                        int n_threads, const ClientFn& client_fn);

RunResult run_driver(const Population& pop, const RunSpec& spec,
                     const std::function<std::pair<double, double>(int)>& sched,
                     const std::function<void(int, double, RoundMetrics&)>& post_round);

}  // namespace detail

}  // namespace luq
