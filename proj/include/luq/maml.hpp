#pragma once

#include "luq/surrogate.hpp"

namespace luq {

/// K gradient-descent steps on the client loss, in closed form:
/// X_K = c + (I - gamma A)^K (x - c). Matches the step-by-step iteration.
Vector gd_k_steps(const Client& cl, const Vector& x, double gamma, int k);

/// Gradient of x -> client_loss(gd_k_steps(x)) with respect to the start
/// point: (I - gamma A)^{2K} A (x - c). Coincides with the surrogate
/// gradient for the (2K+1)-step last-only scheme.
Vector maml_grad(const Client& cl, const Vector& x, double gamma, int k);

/// One meta-learning round: the usual driver with exact per-client meta
/// gradients as the client outputs and a plain SGD server step.
Vector maml_round(const Population& pop, const Vector& x_t, int m, double gamma, int k,
                  double eta, std::uint64_t master_seed, int t);

}  // namespace luq
