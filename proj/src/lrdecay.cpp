#include "luq/lrdecay.hpp"

#include <limits>

namespace luq {

void DecayConfig::validate() const {
  require(delta > 0.0, ErrorCode::invalid_argument, "decay: delta must be positive");
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "decay: alpha must lie in (0, 1)");
  require(beta > 0.0 && beta < 1.0, ErrorCode::invalid_argument,
          "decay: beta must lie in (0, 1)");
  require(window >= 1, ErrorCode::invalid_argument, "decay: window must be >= 1");
  require(patience >= 1, ErrorCode::invalid_argument, "decay: patience must be >= 1");
  require(cooldown >= 0, ErrorCode::invalid_argument, "decay: cooldown must be >= 0");
}

DecayState DecayState::initial(const DecayConfig& cfg) {
  DecayState st;
  st.best_window_avg = std::numeric_limits<double>::infinity();
  st.cooldown_remaining = cfg.cooldown;
  return st;
}

std::pair<double, Vector> inner_loop_with_loss(const Client& cl, const Vector& x,
                                               const InnerConfig& cfg, Stream rng) {
  return {cl.loss(x), inner_loop(cl, x, cfg, std::move(rng))};
}

bool decay_step(DecayState& state, double round_loss, const DecayConfig& cfg) {
  state.loss_window.push_back(round_loss);
  if (state.loss_window.size() > static_cast<std::size_t>(cfg.window))
    state.loss_window.pop_front();
  double sum = 0.0;
  for (double v : state.loss_window) sum += v;
  state.window_avg = sum / static_cast<double>(state.loss_window.size());

  bool decayed = false;
  if (state.cooldown_remaining > 0) {
    // Cooldown: no decay, stall counter frozen.
    --state.cooldown_remaining;
  } else if (state.window_avg > state.best_window_avg - cfg.delta) {
    ++state.stall_count;
    if (state.stall_count >= cfg.patience) {
      decayed = true;
      state.stall_count = 0;
      state.cooldown_remaining = cfg.cooldown;
      ++state.n_decays;
    }
  } else {
    state.stall_count = 0;
  }
  if (state.window_avg < state.best_window_avg) state.best_window_avg = state.window_avg;
  return decayed;
}

RunResult run_decay(const Population& pop, const RunSpec& spec, const DecayConfig& decay) {
  decay.validate();
  require(spec.schedule.kind == Schedule::Kind::constant, ErrorCode::config,
          "run_decay: plateau decay requires constant base learning rates");
  const double gamma0 = spec.gamma;
  const double eta0 = spec.schedule.value;

  DecayState state = DecayState::initial(decay);
  // Current rates recomputed as gamma0 alpha^n by left-to-right products, so
  // they match the gamma0 * alpha^n ladder bit for bit.
  auto ladder = [](double base, double factor, int n) {
    double v = base;
    for (int i = 0; i < n; ++i) v *= factor;
    return v;
  };

  auto sched = [&](int) {
    return std::make_pair(ladder(gamma0, decay.alpha, state.n_decays),
                          ladder(eta0, decay.beta, state.n_decays));
  };
  auto post_round = [&](int, double round_loss, RoundMetrics& row) {
    row.decayed = decay_step(state, round_loss, decay);
    row.window_avg_loss = state.window_avg;
    row.best_window_avg = state.best_window_avg;
    row.stall_count = state.stall_count;
    row.cooldown_remaining = state.cooldown_remaining;
    row.n_decays = state.n_decays;
  };
  return detail::run_driver(pop, spec, sched, post_round);
}

}  // namespace luq
