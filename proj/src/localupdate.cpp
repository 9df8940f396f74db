#include "luq/localupdate.hpp"

#include <cmath>
#include <limits>
#include <thread>

#include "luq/maml.hpp"

namespace luq {

namespace {

constexpr double kDivergenceNorm = 1e12;

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Fenwick tree over client weights for sequential weighted draws with
/// removal (sampling without replacement within a round).
class WeightedSampler {
 public:
  explicit WeightedSampler(const Population& pop) {
    n_ = pop.size();
    weight_.resize(n_);
    tree_.assign(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      weight_[i] = pop.clients()[i].second;
      add(i, weight_[i]);
      total_ += weight_[i];
    }
  }

  std::size_t draw_and_remove(Stream& rng) {
    const double u = rng.next_unit() * total_;
    std::size_t idx = locate(u);
    add(idx, -weight_[idx]);
    total_ -= weight_[idx];
    weight_[idx] = 0.0;
    return idx;
  }

 private:
  void add(std::size_t i, double v) {
    for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += v;
  }

  // Smallest index whose prefix sum exceeds u.
  std::size_t locate(double u) const {
    std::size_t pos = 0;
    std::size_t mask = 1;
    while ((mask << 1) <= n_) mask <<= 1;
    for (; mask > 0; mask >>= 1) {
      const std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] <= u) {
        pos = next;
        u -= tree_[next];
      }
    }
    // Rounding drift in the running total can point at an already-removed
    // client; settle on the nearest live one.
    while (pos < n_ && weight_[pos] == 0.0) ++pos;
    if (pos >= n_) {
      pos = n_ - 1;
      while (pos > 0 && weight_[pos] == 0.0) --pos;
    }
    return pos;
  }

  std::size_t n_ = 0;
  double total_ = 0.0;
  std::vector<double> weight_;
  std::vector<double> tree_;
};

/// Per-gamma cache of the surrogate quantities used in round metrics.
class SurrogateCache {
 public:
  void refresh(const Population& pop, const ThetaWeights& theta, double gamma) {
    if (valid_ && gamma == gamma_) return;
    gamma_ = gamma;
    valid_ = true;
    qa_.clear();
    qa_.reserve(pop.size());
    for (const auto& [cl, w] : pop.clients())
      qa_.push_back(symmetrized_product(distortion_matrix(cl, gamma, theta), cl.curvature()));
    minimizer_ = surrogate_minimizer_unchecked(pop, gamma, theta);
  }

  double loss(const Population& pop, const Vector& x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < qa_.size(); ++i) {
      const auto& [cl, w] = pop.clients()[i];
      acc += w * 0.5 * quad_form(qa_[i], x - cl.center());
    }
    return acc;
  }

  double dist_to_minimizer(const Vector& x) const {
    if (!minimizer_) return std::numeric_limits<double>::quiet_NaN();
    return (x - *minimizer_).norm();
  }

 private:
  bool valid_ = false;
  double gamma_ = 0.0;
  std::vector<SymMatrix> qa_;
  std::optional<Vector> minimizer_;
};

void fill_state_metrics(const Population& pop, const Vector& x, SurrogateCache& cache,
                        const ThetaWeights& theta, double gamma, RoundMetrics& row) {
  row.true_loss = true_loss(pop, x);
  cache.refresh(pop, theta, gamma);
  row.surrogate_loss = cache.loss(pop, x);
  row.dist_true_min = (x - pop.minimizer()).norm();
  row.dist_surrogate_min = cache.dist_to_minimizer(x);
}

}  // namespace

Vector inner_loop(const Client& cl, const Vector& x, const InnerConfig& cfg, Stream rng) {
  require(cfg.batch_size >= 1, ErrorCode::invalid_argument, "inner_loop: batch size must be >= 1");
  require(x.dim() == cl.dim(), ErrorCode::dimension_mismatch, "inner_loop: dimension mismatch");
  require(cfg.gamma >= 0.0, ErrorCode::invalid_argument, "inner_loop: gamma must be >= 0");

  const auto& examples = cl.examples();
  const std::size_t d = x.dim();
  const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);

  // Allocation-free step loop: sweeps and sampled batches dominate the
  // simulation cost.
  Vector iterate = x;
  Vector weighted_sum(d);
  Vector g(d);
  for (double theta_k : cfg.theta.weights()) {
    for (std::size_t i = 0; i < d; ++i) g[i] = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t z = examples.size() == 1 ? 0 : rng.next_weighted(cl.example_probs());
      const SymMatrix& a = examples[z].first.a;
      const Vector& c = examples[z].first.c;
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += a(i, j) * (iterate[j] - c[j]);
        g[i] += acc;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      g[i] *= inv_b;
      if (theta_k != 0.0) weighted_sum[i] += theta_k * g[i];
      iterate[i] -= cfg.gamma * g[i];
    }
  }
  return weighted_sum;
}

Vector inner_loop_expected(const Client& cl, double gamma, const ThetaWeights& theta,
                           const Vector& x) {
  return surrogate_client_grad(cl, gamma, theta, x);
}

ServerState ServerState::make(ServerOptimizer opt, UpdateMode mode, std::size_t dim,
                              const YogiParams& yogi) {
  require(yogi.eps > 0.0, ErrorCode::invalid_argument, "yogi eps must be positive");
  ServerState st;
  st.optimizer = opt;
  st.mode = mode;
  st.yogi = yogi;
  st.momentum = Vector(dim);
  st.accumulator = Vector(dim);
  return st;
}

Vector server_apply(ServerState& state, const Vector& x, const Vector& q, double eta,
                    double gamma) {
  require(eta >= 0.0, ErrorCode::invalid_argument, "server_apply: eta must be >= 0");
  require(x.dim() == q.dim(), ErrorCode::dimension_mismatch, "server_apply: dimension mismatch");

  if (state.optimizer == ServerOptimizer::sgd) {
    const double scale = state.mode == UpdateMode::model_delta ? eta * gamma : eta;
    Vector next = x;
    next -= scale * q;
    return next;
  }

  // Yogi on the gradient estimate (or the model delta gamma*q), no bias
  // correction, accumulators start at zero.
  Vector u = q;
  if (state.mode == UpdateMode::model_delta) u *= gamma;
  const double b1 = state.yogi.beta1;
  const double b2 = state.yogi.beta2;
  Vector next = x;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double u2 = u[i] * u[i];
    state.momentum[i] = b1 * state.momentum[i] + (1.0 - b1) * u[i];
    state.accumulator[i] -= (1.0 - b2) * u2 * sign(state.accumulator[i] - u2);
    next[i] -= eta * state.momentum[i] / (std::sqrt(state.accumulator[i]) + state.yogi.eps);
  }
  return next;
}

namespace detail {

RoundOutcome round_core(const Population& pop, const Vector& x, int m, double gamma,
                        double eta, ServerState& server, std::uint64_t master_seed, int t,
                        int n_threads, const ClientFn& client_fn) {
  require(m >= 1 && static_cast<std::size_t>(m) <= pop.size(), ErrorCode::invalid_argument,
          "round: clients_per_round must be in [1, population size]");

  const Stream base(master_seed);
  const Stream round_stream = base.child(static_cast<std::uint64_t>(t));

  // Client sampling is sequential and independent of worker count.
  Stream sampling = round_stream.child(0);
  WeightedSampler sampler(pop);
  std::vector<std::size_t> picked(m);
  for (int s = 0; s < m; ++s) picked[s] = sampler.draw_and_remove(sampling);

  std::vector<Vector> outputs(m);
  std::vector<double> losses(m);
  auto work = [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      const Client& cl = pop.clients()[picked[s]].first;
      outputs[s] = client_fn(cl, x, gamma, round_stream.child(static_cast<std::uint64_t>(s) + 1));
      losses[s] = cl.loss(x);
    }
  };
  const int workers = std::max(1, std::min(n_threads, m));
  if (workers == 1) {
    work(0, m);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (m + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(m, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  // Aggregate in ascending slot order with the participants' population
  // weights renormalized within the round. For uniform populations this is
  // the plain mean; at full participation it is the exact expectation.
  double weight_sum = 0.0;
  for (int s = 0; s < m; ++s) weight_sum += pop.clients()[picked[s]].second;
  Vector q(x.dim());
  double mean_loss = 0.0;
  for (int s = 0; s < m; ++s) {
    const double w = pop.clients()[picked[s]].second / weight_sum;
    q += w * outputs[s];
    mean_loss += w * losses[s];
  }

  RoundOutcome out;
  out.update_norm = q.norm();
  out.mean_client_loss = mean_loss;
  out.x_next = server_apply(server, x, q, eta, gamma);
  return out;
}

RunResult run_driver(const Population& pop, const RunSpec& spec,
                     const std::function<std::pair<double, double>(int)>& sched,
                     const std::function<void(int, double, RoundMetrics&)>& post_round) {
  require(spec.rounds >= 0, ErrorCode::invalid_argument, "run: rounds must be >= 0");
  require(spec.x0.dim() == pop.dim(), ErrorCode::dimension_mismatch,
          "run: x0 dimension does not match the population");

  ClientFn client_fn;
  if (spec.maml_k) {
    const int k = *spec.maml_k;
    require(k >= 1, ErrorCode::invalid_argument, "run: maml steps must be >= 1");
    client_fn = [k](const Client& cl, const Vector& xt, double gamma, Stream) {
      return maml_grad(cl, xt, gamma, k);
    };
  } else {
    InnerConfig cfg{0.0, spec.theta, spec.batch_size};
    client_fn = [cfg](const Client& cl, const Vector& xt, double gamma, Stream rng) mutable {
      cfg.gamma = gamma;
      return inner_loop(cl, xt, cfg, std::move(rng));
    };
  }

  ServerState server = ServerState::make(spec.optimizer, spec.mode, pop.dim(), spec.yogi);
  SurrogateCache cache;
  RunResult result;
  result.rounds.reserve(spec.rounds);
  Vector x = spec.x0;

  for (int t = 1; t <= spec.rounds; ++t) {
    const auto [gamma_t, eta_t] = sched(t);
    RoundMetrics row;
    row.round = t;
    row.gamma = gamma_t;
    row.eta = eta_t;
    fill_state_metrics(pop, x, cache, spec.theta, gamma_t, row);

    RoundOutcome outcome = round_core(pop, x, spec.clients_per_round, gamma_t, eta_t, server,
                                      spec.master_seed, t, spec.n_threads, client_fn);
    row.update_norm = outcome.update_norm;
    row.mean_client_loss = outcome.mean_client_loss;
    if (post_round) post_round(t, outcome.mean_client_loss, row);
    result.rounds.push_back(row);
    x = outcome.x_next;

    if (!x.all_finite() || x.norm() > kDivergenceNorm) {
      result.diverged = true;
      result.diverged_round = t;
      break;
    }
  }
  result.final_x = x;
  return result;
}

}  // namespace detail

Schedule Schedule::constant(double eta) {
  require(eta >= 0.0, ErrorCode::invalid_argument, "constant schedule: eta must be >= 0");
  Schedule s;
  s.kind = Kind::constant;
  s.value = eta;
  return s;
}

Schedule Schedule::inverse_time(double a, double b) {
  require(a > 0.0 && b >= 0.0, ErrorCode::invalid_argument,
          "inverse_time schedule: need a > 0 and b >= 0");
  Schedule s;
  s.kind = Kind::inverse_time;
  s.a = a;
  s.b = b;
  return s;
}

Schedule Schedule::fixed_client_decaying_server(std::optional<double> a_gamma,
                                                std::optional<double> b_gamma) {
  Schedule s;
  s.kind = Kind::fixed_client_decaying_server;
  s.a_gamma = a_gamma;
  s.b_gamma = b_gamma;
  return s;
}

Schedule Schedule::joint(std::optional<double> b) {
  Schedule s;
  s.kind = Kind::joint;
  s.joint_b = b;
  return s;
}

std::pair<double, double> schedule_eval(const Schedule& s, int t, const ScheduleContext& ctx) {
  require(t >= 1, ErrorCode::invalid_argument, "schedule_eval: t must be >= 1");
  switch (s.kind) {
    case Schedule::Kind::constant:
      return {ctx.gamma, s.value};
    case Schedule::Kind::inverse_time:
      return {ctx.gamma, s.a / (s.b + static_cast<double>(t))};
    case Schedule::Kind::fixed_client_decaying_server: {
      const auto [mu_g, l_g] = smoothness_params(ctx.mu, ctx.l, ctx.gamma, ctx.k);
      const double a = s.a_gamma.value_or(2.0 / mu_g);
      const double b = s.b_gamma.value_or(2.0 * l_g * l_g / (mu_g * mu_g));
      require(a > 0.0 && b >= 0.0, ErrorCode::invalid_argument,
              "fixed_client_decaying_server: invalid parameters");
      return {ctx.gamma, a / (b + static_cast<double>(t))};
    }
    case Schedule::Kind::joint: {
      require(ctx.mu > 0.0 && ctx.l >= ctx.mu && ctx.k >= 1, ErrorCode::invalid_argument,
              "joint schedule: invalid context");
      const double kappa = ctx.l / ctx.mu;
      const double b = s.joint_b.value_or(3.0 * kappa * kappa);
      const double denom = b + static_cast<double>(t);
      const double gamma_t = std::min(1.0 / (ctx.l * denom),
                                      std::log(2.0) / (static_cast<double>(ctx.k) * ctx.mu));
      const double mu_t = phi(ctx.k, ctx.mu, gamma_t);
      return {gamma_t, (3.0 / mu_t) / denom};
    }
  }
  fail(ErrorCode::invalid_argument, "schedule_eval: unknown schedule kind");
}

RunResult run(const Population& pop, const RunSpec& spec) {
  ScheduleContext ctx{pop.mu(), pop.lipschitz(), spec.theta.k(), spec.gamma};
  return detail::run_driver(
      pop, spec, [&](int t) { return schedule_eval(spec.schedule, t, ctx); }, nullptr);
}

RunResult run_with_schedule(const Population& pop, const RunSpec& spec,
                            const std::function<std::pair<double, double>(int)>& sched) {
  return detail::run_driver(pop, spec, sched, nullptr);
}

std::pair<Vector, RoundMetrics> outer_round(const Population& pop, const Vector& x_t, int m,
                                            double gamma_t, double eta_t,
                                            const ThetaWeights& theta, int batch_size,
                                            ServerState& server, std::uint64_t master_seed,
                                            int t, int n_threads) {
  InnerConfig cfg{gamma_t, theta, batch_size};
  detail::ClientFn client_fn = [&cfg](const Client& cl, const Vector& x, double gamma,
                                      Stream rng) {
    InnerConfig c = cfg;
    c.gamma = gamma;
    return inner_loop(cl, x, c, std::move(rng));
  };

  RoundMetrics row;
  row.round = t;
  row.gamma = gamma_t;
  row.eta = eta_t;
  SurrogateCache cache;
  fill_state_metrics(pop, x_t, cache, theta, gamma_t, row);

  detail::RoundOutcome outcome = detail::round_core(pop, x_t, m, gamma_t, eta_t, server,
                                                    master_seed, t, n_threads, client_fn);
  row.update_norm = outcome.update_norm;
  row.mean_client_loss = outcome.mean_client_loss;
  return {outcome.x_next, row};
}

std::pair<double, double> smoothness_params(double mu, double l, double gamma, int k) {
  return {phi(k, mu, gamma), phi(k, l, gamma)};
}

double variance_bound(double g_sq, int k, int m, int b) {
  require(m >= 1 && b >= 1, ErrorCode::invalid_argument,
          "variance_bound: m and b must be >= 1");
  require(k >= 1 && g_sq >= 0.0, ErrorCode::invalid_argument,
          "variance_bound: need k >= 1 and g_sq >= 0");
  return static_cast<double>(k) * g_sq / (static_cast<double>(m) * static_cast<double>(b));
}

double error_floor(double eta, int k, double g_sq, int m, int b, double mu_gamma) {
  require(mu_gamma > 0.0, ErrorCode::invalid_argument, "error_floor: mu_gamma must be > 0");
  return eta * variance_bound(g_sq, k, m, b) / mu_gamma;
}

}  // namespace luq
