#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "luq/localupdate.hpp"
#include "luq/maml.hpp"

using namespace luq;

namespace {

Client scalar_client(double a, double c) {
  return Client::from_examples({{{SymMatrix::diagonal({a}), Vector({c})}, 1.0}});
}

}  // namespace

TEST_CASE("gradient descent steps in closed form") {
  const Client cl = scalar_client(2.0, 0.0);
  CHECK(gd_k_steps(cl, cl.center(), 0.3, 5)[0] == 0.0);
  CHECK(gd_k_steps(cl, Vector({1.0}), 0.25, 2)[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(gd_k_steps(cl, Vector({1.0}), 0.0, 7)[0] == 1.0);

  Stream s(3);
  const Client rnd = Client::from_examples(
      {{{random_spd(4, 0.5, 2.0, s), Vector({0.1, -0.3, 0.8, 0.0})}, 1.0}});
  Vector x({1.0, 0.5, -0.2, 0.9});
  Vector iter = x;
  const double gamma = 0.2;
  for (int step = 0; step < 6; ++step) iter -= gamma * rnd.grad(iter);
  CHECK((iter - gd_k_steps(rnd, x, gamma, 6)).norm() <= 1e-12 * (1.0 + iter.norm()));
}

TEST_CASE("meta gradient closed form") {
  const Client cl = scalar_client(2.0, 0.0);
  CHECK(maml_grad(cl, Vector({1.0}), 0.0, 3)[0] == doctest::Approx(2.0));
  CHECK(maml_grad(cl, Vector({1.0}), 0.1, 1)[0] == doctest::Approx(1.28).epsilon(1e-14));
  CHECK(maml_grad(cl, cl.center(), 0.1, 4)[0] == 0.0);
}

TEST_CASE("meta gradient equals the (2K+1)-step last-only surrogate gradient") {
  Stream root(7);
  for (int trial = 0; trial < 100; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(5);
    Vector c(d);
    for (std::size_t i = 0; i < d; ++i) c[i] = s.next_gaussian();
    const Client cl = Client::from_examples({{{random_spd(d, 0.5, 2.5, s), c}, 1.0}});
    Vector x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = 1.5 * s.next_gaussian();
    const int k = 1 + static_cast<int>(s.next_below(5));
    const double gamma = 0.8 * s.next_unit() / cl.lipschitz();
    const Vector meta = maml_grad(cl, x, gamma, k);
    const Vector surr = surrogate_client_grad(cl, gamma, ThetaWeights::maml_equiv(k), x);
    CHECK((meta - surr).norm() <= 1e-12 * (1.0 + surr.norm()));
  }
}

TEST_CASE("meta gradient matches finite differences of the post-adaptation loss") {
  Stream s(11);
  const std::size_t d = 3;
  Vector c(d);
  for (std::size_t i = 0; i < d; ++i) c[i] = s.next_gaussian();
  const Client cl = Client::from_examples({{{random_spd(d, 0.6, 2.0, s), c}, 1.0}});
  const Vector x({0.8, -0.4, 0.2});
  const int k = 3;
  const double gamma = 0.15;
  const Vector g = maml_grad(cl, x, gamma, k);
  for (std::size_t i = 0; i < d; ++i) {
    Vector hi = x;
    Vector lo = x;
    hi[i] += 3e-6;
    lo[i] -= 3e-6;
    const double fd =
        (cl.loss(gd_k_steps(cl, hi, gamma, k)) - cl.loss(gd_k_steps(cl, lo, gamma, k))) / 6e-6;
    CHECK(std::abs(fd - g[i]) <= 1e-6 * (1.0 + std::abs(g[i])));
  }
}

TEST_CASE("maml round equals the last-only local-update round on deterministic clients") {
  const Population pop = make_two_point();
  const double gamma = 0.2;
  const double eta = 0.05;
  const int k = 2;
  Vector x({0.1});
  Vector y = x;
  for (int t = 1; t <= 50; ++t) {
    x = maml_round(pop, x, 2, gamma, k, eta, 31, t);
    ServerState st = ServerState::make(ServerOptimizer::sgd, UpdateMode::gradient_sum, 1);
    const auto [next, row] = outer_round(pop, y, 2, gamma, eta,
                                         ThetaWeights::maml_equiv(k), 1, st, 31, t);
    y = next;
    CHECK(std::abs(x[0] - y[0]) <= 1e-12 * (1.0 + std::abs(y[0])));
  }
}

TEST_CASE("maml round with zero eta holds still; small eta converges to the surrogate target") {
  const Population pop = make_two_point();
  const int k = 2;
  const double gamma = 0.2;
  Vector frozen({0.4});
  CHECK(maml_round(pop, frozen, 2, gamma, k, 0.0, 1, 1)[0] == 0.4);

  Vector x({0.0});
  for (int t = 1; t <= 4000; ++t) x = maml_round(pop, x, 2, gamma, k, 0.2, 1, t);
  const Vector want = surrogate_minimizer(pop, gamma, ThetaWeights::maml_equiv(k));
  CHECK(std::abs(x[0] - want[0]) <= 1e-8);
}

TEST_CASE("first-order and full meta updates have different stationary points") {
  const Population pop = make_two_point();
  const double gamma = 0.2;
  const int k = 2;
  const Vector fomaml = surrogate_minimizer(pop, gamma, ThetaWeights::fomaml(k));
  const Vector maml = surrogate_minimizer(pop, gamma, ThetaWeights::maml_equiv(k));
  CHECK((fomaml - maml).norm() > 1e-6);
}
