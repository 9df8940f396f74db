#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "luq/lrdecay.hpp"

using namespace luq;

namespace {

Client scalar_client(double a, double c) {
  return Client::from_examples({{{SymMatrix::diagonal({a}), Vector({c})}, 1.0}});
}

DecayConfig small_decay() {
  DecayConfig d;
  d.delta = 1e-4;
  d.alpha = 0.1;
  d.beta = 0.9;
  d.window = 5;
  d.patience = 5;
  d.cooldown = 5;
  return d;
}

}  // namespace

TEST_CASE("inner loop with loss") {
  SUBCASE("at the optimum of a single-example client both parts vanish") {
    const Client cl = scalar_client(2.0, 0.5);
    const auto [loss, q] =
        inner_loop_with_loss(cl, cl.center(), {0.3, ThetaWeights::fedavg(2), 1}, Stream(3));
    CHECK(loss == 0.0);
    CHECK(q[0] == 0.0);
  }
  SUBCASE("loss is evaluated before any local step") {
    const Client cl = scalar_client(2.0, 0.5);
    for (double gamma : {0.0, 0.25, 0.5}) {
      const auto [loss, q] = inner_loop_with_loss(
          cl, Vector({1.0}), {gamma, ThetaWeights::fedavg(4), 1}, Stream(3));
      CHECK(loss == doctest::Approx(0.25).epsilon(1e-15));
    }
  }
  SUBCASE("update matches the plain inner loop bitwise on the same stream") {
    const Client cl = Client::from_examples(
        {{{SymMatrix::diagonal({1.5}), Vector({0.0})}, 0.5},
         {{SymMatrix::diagonal({1.5}), Vector({1.0})}, 0.5}});
    const InnerConfig cfg{0.2, ThetaWeights::fedavg(3), 2};
    const Vector x({0.4});
    const Vector plain = inner_loop(cl, x, cfg, Stream(11).child(5));
    const auto [loss, q] = inner_loop_with_loss(cl, x, cfg, Stream(11).child(5));
    CHECK(q[0] == plain[0]);
  }
}

TEST_CASE("decay step hand traces") {
  SUBCASE("flat losses with unit window and patience decay on round two") {
    DecayConfig cfg;
    cfg.window = 1;
    cfg.patience = 1;
    cfg.cooldown = 0;
    DecayState st = DecayState::initial(cfg);
    CHECK(!decay_step(st, 1.0, cfg));
    CHECK(decay_step(st, 1.0, cfg));
    CHECK(st.n_decays == 1);
  }
  SUBCASE("an initial cooldown blocks decays in the first C rounds") {
    DecayConfig cfg;
    cfg.window = 1;
    cfg.patience = 1;
    cfg.cooldown = 5;
    DecayState st = DecayState::initial(cfg);
    for (int round = 1; round <= 5; ++round) CHECK(!decay_step(st, 1.0, cfg));
    // Round 6 is the first eligible round; the stall counter starts there.
    CHECK(decay_step(st, 1.0, cfg));
  }
  SUBCASE("strict improvement never decays") {
    DecayConfig cfg;
    cfg.window = 1;
    cfg.patience = 1;
    cfg.cooldown = 0;
    cfg.delta = 0.01;
    DecayState st = DecayState::initial(cfg);
    double loss = 10.0;
    for (int round = 0; round < 50; ++round) {
      CHECK(!decay_step(st, loss, cfg));
      loss -= 0.02;
    }
    CHECK(st.n_decays == 0);
  }
  SUBCASE("window average uses the stored window") {
    DecayConfig cfg;
    cfg.window = 3;
    DecayState st = DecayState::initial(cfg);
    decay_step(st, 3.0, cfg);
    CHECK(st.window_avg == doctest::Approx(3.0));
    decay_step(st, 1.0, cfg);
    CHECK(st.window_avg == doctest::Approx(2.0));
    decay_step(st, 2.0, cfg);
    CHECK(st.window_avg == doctest::Approx(2.0));
    decay_step(st, 6.0, cfg);  // window now 1, 2, 6
    CHECK(st.window_avg == doctest::Approx(3.0));
  }
  SUBCASE("best updates during cooldown") {
    DecayConfig cfg;
    cfg.window = 1;
    cfg.patience = 1;
    cfg.cooldown = 3;
    DecayState st = DecayState::initial(cfg);
    decay_step(st, 5.0, cfg);
    decay_step(st, 1.0, cfg);
    CHECK(st.best_window_avg == doctest::Approx(1.0));
  }
}

TEST_CASE("run decay drives the iterate toward the true minimizer") {
  const Population pop = make_two_point();
  RunSpec spec;
  spec.theta = ThetaWeights::fedavg(2);
  spec.gamma = 0.5;
  spec.schedule = Schedule::constant(0.1);
  spec.clients_per_round = 2;
  spec.batch_size = 1;
  spec.rounds = 800;
  spec.x0 = Vector(1);
  spec.master_seed = 3;

  const RunResult decayed = run_decay(pop, spec, small_decay());
  const RunResult fixed = run(pop, spec);

  const double dist_decayed = std::abs(decayed.final_x[0] - 2.0 / 3.0);
  const double dist_fixed = std::abs(fixed.final_x[0] - 2.0 / 3.0);
  const double fixed_gap = 0.5 / (3.0 * 3.5);
  CHECK(dist_decayed < dist_fixed);
  CHECK(dist_decayed < fixed_gap / 10.0);
  CHECK(decayed.rounds.back().n_decays >= 1);

  // gamma ladder is exact and nonincreasing; eta follows beta.
  for (const auto& row : decayed.rounds) {
    double g = spec.gamma;
    double e = spec.schedule.value;
    const int before = row.n_decays - (row.decayed ? 1 : 0);
    for (int i = 0; i < before; ++i) {
      g *= small_decay().alpha;
      e *= small_decay().beta;
    }
    CHECK(row.gamma == g);
    CHECK(row.eta == e);
  }
}

TEST_CASE("huge delta decays on a fixed cadence") {
  const Population pop = make_two_point();
  RunSpec spec;
  spec.theta = ThetaWeights::fedavg(2);
  spec.gamma = 0.4;
  spec.schedule = Schedule::constant(0.05);
  spec.clients_per_round = 2;
  spec.rounds = 30;
  spec.x0 = Vector(1);
  DecayConfig cfg;
  cfg.delta = 1e9;
  cfg.alpha = 0.5;
  cfg.beta = 0.5;
  cfg.window = 1;
  cfg.patience = 3;
  cfg.cooldown = 2;
  const RunResult r = run_decay(pop, spec, cfg);
  std::vector<int> decay_rounds;
  for (const auto& row : r.rounds)
    if (row.decayed) decay_rounds.push_back(row.round);
  // The first C rounds are an initial cooldown, so the cadence is C+P.
  CHECK(decay_rounds == std::vector<int>{5, 10, 15, 20, 25, 30});
  CHECK(r.rounds.back().n_decays == 6);
}

TEST_CASE("decay configuration validation") {
  DecayConfig cfg = small_decay();
  cfg.delta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_decay();
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_decay();
  cfg.window = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_decay();
  cfg.cooldown = 0;  // explicitly allowed: no cooldown
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("metrics extras are populated") {
  const Population pop = make_two_point();
  RunSpec spec;
  spec.theta = ThetaWeights::fedavg(2);
  spec.gamma = 0.5;
  spec.schedule = Schedule::constant(0.1);
  spec.clients_per_round = 2;
  spec.rounds = 12;
  spec.x0 = Vector(1);
  DecayConfig cfg = small_decay();
  cfg.window = 4;
  const RunResult r = run_decay(pop, spec, cfg);
  std::deque<double> window;
  for (const auto& row : r.rounds) {
    window.push_back(row.mean_client_loss);
    if (window.size() > 4) window.pop_front();
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(window.size());
    CHECK(std::abs(row.window_avg_loss - mean) <= 1e-12 * (1.0 + std::abs(mean)));
    CHECK(row.best_window_avg <= row.window_avg_loss + 1e-15);
    CHECK(row.cooldown_remaining >= 0);
    CHECK(row.stall_count <= cfg.patience);
  }
}
