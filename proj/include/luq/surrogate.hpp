#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "luq/problem.hpp"

namespace luq {

/// Coefficients determining which local gradients a client reports.
/// Trailing zeros are trimmed; at least one entry must be positive.
class ThetaWeights {
 public:
  static ThetaWeights custom(std::vector<double> weights);
  static ThetaWeights fedavg(int k);      // k ones
  static ThetaWeights fomaml(int k);      // k-1 zeros then 1
  static ThetaWeights maml_equiv(int k);  // 2k zeros then 1

  int k() const { return static_cast<int>(w_.size()); }  // K(Theta)
  const std::vector<double>& weights() const { return w_; }
  double sum() const { return sum_; }
  double tau() const { return 1.0 / sum_; }

  bool is_all_ones() const;   // fedavg/Reptile shape
  bool is_last_only() const;  // FOMAML shape

 private:
  std::vector<double> w_;
  double sum_ = 0.0;
};

/// Q(gamma, Theta) = sum_k theta_k (I - gamma A)^{k-1}, evaluated by a
/// Horner-style multiply-accumulate sweep (never by eigendecomposition).
/// Defined for every gamma >= 0; positive definiteness is only guaranteed
/// for gamma <= 1/lambda_max(A).
SymMatrix distortion_matrix(const Client& cl, double gamma, const ThetaWeights& theta);

/// Expected inner-loop output Q A (x - c); the surrogate-loss gradient.
Vector surrogate_client_grad(const Client& cl, double gamma, const ThetaWeights& theta,
                             const Vector& x);

/// 1/2 (x-c)^T [QA]_sym (x-c); requires gamma <= 1/lipschitz so the
/// symmetrized product is positive semidefinite.
double surrogate_client_loss(const Client& cl, double gamma, const ThetaWeights& theta,
                             const Vector& x);
double surrogate_loss(const Population& pop, double gamma, const ThetaWeights& theta,
                      const Vector& x);

/// Unique surrogate minimizer E[tau Q_i A_i]^{-1} E[tau Q_i A_i c_i];
/// requires gamma <= 1/L. With gamma = 0 or K = 1 the distortion collapses
/// to the identity and this returns the true minimizer bit-exactly.
Vector surrogate_minimizer(const Population& pop, double gamma, const ThetaWeights& theta);

/// Best-effort variant for instrumentation: no regime guard, returns nullopt
/// when the averaged distorted curvature is not numerically SPD.
std::optional<Vector> surrogate_minimizer_unchecked(const Population& pop, double gamma,
                                                    const ThetaWeights& theta);

/// One-shot closed-form analysis of a (gamma, Theta) setting: per-client
/// distortion matrices, the surrogate minimizer, and the exact strong
/// convexity / smoothness / condition numbers of the surrogate.
struct SurrogateAnalysis {
  double gamma = 0.0;
  ThetaWeights theta;
  std::vector<SymMatrix> distortions;  // Q_i per client, population order
  Vector minimizer;                    // x*(gamma, Theta)
  double mu_surrogate = 0.0;           // lambda_min of the averaged curvature
  double l_surrogate = 0.0;            // lambda_max
  double condition = 0.0;              // l_surrogate / mu_surrogate
};

/// Requires gamma <= 1/L (the strong-convexity regime).
SurrogateAnalysis analyze_surrogate(const Population& pop, double gamma,
                                    const ThetaWeights& theta);

/// Eigenvalue map of the K-step gradient-sum curvature:
/// phi(K, lambda, gamma) = (1 - (1 - gamma lambda)^K) / gamma, with the
/// continuous extension phi(K, lambda, 0) = K lambda.
double phi(int k, double lambda, double gamma);

/// Eigenvalue of Q at an eigenvalue lambda of A: sum_k theta_k (1-gamma lambda)^{k-1}.
double q_eigenvalue(double lambda, double gamma, const ThetaWeights& theta);

/// Extreme eigenvalues (min, max) of Q A from the client's spectral range.
/// Requires the eigenvalue map to be monotone: gamma <= 1/l for the all-ones
/// scheme, gamma <= 1/(K l) otherwise.
std::pair<double, double> qa_spectrum(double mu, double l, double gamma,
                                      const ThetaWeights& theta);
std::pair<double, double> qa_spectrum(const Client& cl, double gamma,
                                      const ThetaWeights& theta);

/// Upper bound on the surrogate condition number.
double condition_bound(double mu, double l, double gamma, const ThetaWeights& theta);

/// chi(gamma, Theta, L) = sum_k theta_k (1-gamma L)^{k-1} / sum_k theta_k.
double chi(double gamma, const ThetaWeights& theta, double l);

/// Distance bounds between surrogate and true minimizers. nullopt means the
/// bound is unbounded (denominator hit zero); finite values are never IEEE
/// infinities.
std::optional<double> distance_bound_general(const Population& pop, double gamma,
                                             const ThetaWeights& theta);
std::optional<double> distance_bound_fedavg(const Population& pop, double gamma, int k);

/// Largest client learning rate guaranteeing phi >= (1-eps) K lambda.
double gamma_for_eps(int k, double l, double eps);
/// Distance bound at that learning rate: sigma_c (1 + sigma_A/mu) (L/mu) eps/(1-eps).
double distance_bound_eps(const Population& pop, int k, double eps);

struct GammaPairBounds {
  std::optional<double> tight;
  std::optional<double> simple;
};
/// Bounds on ||x*(gamma1) - x*(gamma2)|| for the all-ones scheme.
GammaPairBounds distance_bound_gamma_pair(const Population& pop, int k, double gamma1,
                                          double gamma2);

/// K -> infinity limit of the surrogate minimizer: the average client center.
Vector asymptotic_minimizer(const Population& pop);

}  // namespace luq
