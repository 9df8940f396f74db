#include "luq/maml.hpp"

#include "luq/localupdate.hpp"

namespace luq {

Vector gd_k_steps(const Client& cl, const Vector& x, double gamma, int k) {
  require(k >= 1, ErrorCode::invalid_argument, "gd_k_steps: k must be >= 1");
  require(x.dim() == cl.dim(), ErrorCode::dimension_mismatch, "gd_k_steps: dimension mismatch");
  // (I - gamma A)^k (x - c) applied as k vector updates.
  Vector v = x - cl.center();
  for (int step = 0; step < k; ++step) v -= gamma * cl.curvature().apply(v);
  return cl.center() + v;
}

Vector maml_grad(const Client& cl, const Vector& x, double gamma, int k) {
  require(k >= 1, ErrorCode::invalid_argument, "maml_grad: k must be >= 1");
  require(x.dim() == cl.dim(), ErrorCode::dimension_mismatch, "maml_grad: dimension mismatch");
  Vector v = cl.grad(x);
  for (int step = 0; step < 2 * k; ++step) v -= gamma * cl.curvature().apply(v);
  return v;
}

Vector maml_round(const Population& pop, const Vector& x_t, int m, double gamma, int k,
                  double eta, std::uint64_t master_seed, int t) {
  require(k >= 1, ErrorCode::invalid_argument, "maml_round: k must be >= 1");
  ServerState server = ServerState::make(ServerOptimizer::sgd, UpdateMode::gradient_sum,
                                         pop.dim());
  detail::ClientFn client_fn = [k](const Client& cl, const Vector& x, double g, Stream) {
    return maml_grad(cl, x, g, k);
  };
  return detail::round_core(pop, x_t, m, gamma, eta, server, master_seed, t, 1, client_fn)
      .x_next;
}

}  // namespace luq
