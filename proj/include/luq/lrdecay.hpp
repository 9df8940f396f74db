#pragma once

#include <deque>

#include "luq/localupdate.hpp"

namespace luq {

/// Plateau-decay knobs: decay gamma by alpha and eta by beta when the
/// window-averaged round loss fails to improve by delta for patience
/// consecutive eligible rounds, then hold for a cooldown.
struct DecayConfig {
  double delta = 1e-4;
  double alpha = 0.1;
  double beta = 0.9;
  int window = 100;
  int patience = 100;
  int cooldown = 100;

  void validate() const;
};

struct DecayState {
  std::deque<double> loss_window;  // last min(t, W) round losses
  double window_avg = 0.0;
  double best_window_avg = 0.0;  // +inf until the first round is seen
  int stall_count = 0;
  int cooldown_remaining = 0;  // starts at C: no decay in the first C rounds
  int n_decays = 0;

  static DecayState initial(const DecayConfig& cfg);
};

/// (exact client loss before any local step, inner-loop output). The loss is
/// the expectation over the client's finite example distribution; the update
/// consumes the stream identically to inner_loop.
std::pair<double, Vector> inner_loop_with_loss(const Client& cl, const Vector& x,
                                               const InnerConfig& cfg, Stream rng);

/// One plateau-decay bookkeeping step; returns whether a decay fired.
/// The best window average updates every round, including during cooldown;
/// the stall counter is frozen while the cooldown runs.
bool decay_step(DecayState& state, double round_loss, const DecayConfig& cfg);

/// The run driver with per-round plateau decay: gamma_t = gamma0 alpha^n and
/// eta_t = eta0 beta^n where n counts decays so far. The base eta is the
/// run's constant schedule value.
RunResult run_decay(const Population& pop, const RunSpec& spec, const DecayConfig& decay);

}  // namespace luq
