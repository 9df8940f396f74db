#include "luq/surrogate.hpp"

#include <cmath>
#include <sstream>

namespace luq {

namespace {

void check_regime(double gamma, double limit, const char* what) {
  if (!(gamma >= 0.0)) fail(ErrorCode::invalid_argument, std::string(what) + ": gamma must be >= 0");
  if (gamma > limit) {
    std::ostringstream os;
    os << what << ": client learning rate " << gamma << " outside the regime (limit "
       << limit << ")";
    fail(ErrorCode::regime_violation, os.str());
  }
}

// tau Q_i A_i; collapses to A_i exactly when the distortion is a multiple of
// the identity (gamma = 0 or K = 1), so that x*(0, Theta) == x* bit-exactly.
SymMatrix normalized_distorted_curvature(const Client& cl, double gamma,
                                         const ThetaWeights& theta) {
  if (gamma == 0.0 || theta.k() == 1) return cl.curvature();
  SymMatrix qa = symmetrized_product(distortion_matrix(cl, gamma, theta), cl.curvature());
  qa *= theta.tau();
  return qa;
}

std::optional<Vector> minimizer_from_curvatures(const Population& pop, double gamma,
                                                const ThetaWeights& theta) {
  const std::size_t d = pop.dim();
  SymMatrix a_tilde(d);
  Vector rhs(d);
  for (const auto& [cl, w] : pop.clients()) {
    const SymMatrix ai = normalized_distorted_curvature(cl, gamma, theta);
    a_tilde += w * ai;
    rhs += w * ai.apply(cl.center());
  }
  const auto eig = sym_eigen(a_tilde);
  if (!(eig.values.front() > 1e-12 * std::max(eig.values.back(), 0.0))) return std::nullopt;
  return sym_inverse(a_tilde).apply(rhs);
}

}  // namespace

ThetaWeights ThetaWeights::custom(std::vector<double> weights) {
  while (!weights.empty() && weights.back() == 0.0) weights.pop_back();
  require(!weights.empty(), ErrorCode::invalid_argument,
          "theta weights need at least one positive entry");
  double sum = 0.0;
  for (double w : weights) {
    require(w >= 0.0, ErrorCode::invalid_argument, "theta weights must be nonnegative");
    sum += w;
  }
  require(weights.back() > 0.0 && sum > 0.0, ErrorCode::invalid_argument,
          "theta weights need at least one positive entry");
  ThetaWeights t;
  t.w_ = std::move(weights);
  t.sum_ = sum;
  return t;
}

ThetaWeights ThetaWeights::fedavg(int k) {
  require(k >= 1, ErrorCode::invalid_argument, "fedavg theta needs k >= 1");
  return custom(std::vector<double>(k, 1.0));
}

ThetaWeights ThetaWeights::fomaml(int k) {
  require(k >= 1, ErrorCode::invalid_argument, "fomaml theta needs k >= 1");
  std::vector<double> w(k, 0.0);
  w.back() = 1.0;
  return custom(std::move(w));
}

ThetaWeights ThetaWeights::maml_equiv(int k) {
  require(k >= 1, ErrorCode::invalid_argument, "maml theta needs k >= 1");
  std::vector<double> w(2 * k + 1, 0.0);
  w.back() = 1.0;
  return custom(std::move(w));
}

bool ThetaWeights::is_all_ones() const {
  for (double w : w_)
    if (w != 1.0) return false;
  return true;
}

bool ThetaWeights::is_last_only() const {
  for (std::size_t i = 0; i + 1 < w_.size(); ++i)
    if (w_[i] != 0.0) return false;
  return true;
}

SymMatrix distortion_matrix(const Client& cl, double gamma, const ThetaWeights& theta) {
  require(gamma >= 0.0, ErrorCode::invalid_argument, "distortion_matrix: gamma must be >= 0");
  const std::size_t d = cl.dim();
  const auto& w = theta.weights();

  // step = I - gamma A
  SymMatrix step = SymMatrix::identity(d);
  step -= gamma * cl.curvature();

  // Horner sweep: Q = theta_1 I + step (theta_2 I + step (...)). Each product
  // is re-symmetrized; step and the accumulator commute exactly in theory, so
  // this only discards rounding noise.
  SymMatrix acc(d);
  for (std::size_t pos = w.size(); pos-- > 0;) {
    if (pos + 1 < w.size()) acc = symmetrized_product(step, acc);
    if (w[pos] != 0.0) {
      for (std::size_t i = 0; i < d; ++i) acc.set(i, i, acc(i, i) + w[pos]);
    }
  }
  return acc;
}

Vector surrogate_client_grad(const Client& cl, double gamma, const ThetaWeights& theta,
                             const Vector& x) {
  return distortion_matrix(cl, gamma, theta).apply(cl.grad(x));
}

double surrogate_client_loss(const Client& cl, double gamma, const ThetaWeights& theta,
                             const Vector& x) {
  check_regime(gamma, 1.0 / cl.lipschitz(), "surrogate_client_loss");
  const SymMatrix qa =
      symmetrized_product(distortion_matrix(cl, gamma, theta), cl.curvature());
  return 0.5 * quad_form(qa, x - cl.center());
}

double surrogate_loss(const Population& pop, double gamma, const ThetaWeights& theta,
                      const Vector& x) {
  double acc = 0.0;
  for (const auto& [cl, w] : pop.clients())
    acc += w * surrogate_client_loss(cl, gamma, theta, x);
  return acc;
}

Vector surrogate_minimizer(const Population& pop, double gamma, const ThetaWeights& theta) {
  check_regime(gamma, 1.0 / pop.lipschitz(), "surrogate_minimizer");
  auto x = minimizer_from_curvatures(pop, gamma, theta);
  if (!x) {
    fail(ErrorCode::singular_matrix,
         "surrogate_minimizer: averaged distorted curvature is singular");
  }
  return *x;
}

std::optional<Vector> surrogate_minimizer_unchecked(const Population& pop, double gamma,
                                                    const ThetaWeights& theta) {
  if (!(gamma >= 0.0)) return std::nullopt;
  return minimizer_from_curvatures(pop, gamma, theta);
}

SurrogateAnalysis analyze_surrogate(const Population& pop, double gamma,
                                    const ThetaWeights& theta) {
  check_regime(gamma, 1.0 / pop.lipschitz(), "analyze_surrogate");
  SurrogateAnalysis out;
  out.gamma = gamma;
  out.theta = theta;
  out.minimizer = surrogate_minimizer(pop, gamma, theta);

  const std::size_t d = pop.dim();
  SymMatrix mean_qa(d);
  for (const auto& [cl, w] : pop.clients()) {
    out.distortions.push_back(distortion_matrix(cl, gamma, theta));
    mean_qa += w * symmetrized_product(out.distortions.back(), cl.curvature());
  }
  const auto eig = sym_eigen(mean_qa);
  out.mu_surrogate = eig.values.front();
  out.l_surrogate = eig.values.back();
  require(out.mu_surrogate > 0.0, ErrorCode::regime_violation,
          "analyze_surrogate: surrogate loses strong convexity in this regime");
  out.condition = out.l_surrogate / out.mu_surrogate;
  return out;
}

double phi(int k, double lambda, double gamma) {
  require(k >= 1, ErrorCode::invalid_argument, "phi: k must be >= 1");
  if (gamma == 0.0) return static_cast<double>(k) * lambda;
  const double x = gamma * lambda;
  if (x > 0.0 && x < 1.0)
    return -std::expm1(static_cast<double>(k) * std::log1p(-x)) / gamma;
  return (1.0 - std::pow(1.0 - x, k)) / gamma;
}

double q_eigenvalue(double lambda, double gamma, const ThetaWeights& theta) {
  const auto& w = theta.weights();
  const double r = 1.0 - gamma * lambda;
  double acc = 0.0;
  for (std::size_t pos = w.size(); pos-- > 0;) acc = acc * r + w[pos];
  return acc;
}

std::pair<double, double> qa_spectrum(double mu, double l, double gamma,
                                      const ThetaWeights& theta) {
  require(0.0 < mu && mu <= l, ErrorCode::invalid_argument, "qa_spectrum: need 0 < mu <= l");
  if (theta.is_all_ones()) {
    check_regime(gamma, 1.0 / l, "qa_spectrum");
    return {phi(theta.k(), mu, gamma), phi(theta.k(), l, gamma)};
  }
  // The eigenvalue map lambda -> q(lambda) lambda is monotone on [mu, l]
  // only when gamma K l <= 1.
  check_regime(gamma, 1.0 / (static_cast<double>(theta.k()) * l), "qa_spectrum");
  return {q_eigenvalue(mu, gamma, theta) * mu, q_eigenvalue(l, gamma, theta) * l};
}

std::pair<double, double> qa_spectrum(const Client& cl, double gamma,
                                      const ThetaWeights& theta) {
  return qa_spectrum(cl.mu(), cl.lipschitz(), gamma, theta);
}

double condition_bound(double mu, double l, double gamma, const ThetaWeights& theta) {
  const auto [lo, hi] = qa_spectrum(mu, l, gamma, theta);
  require(lo > 0.0, ErrorCode::regime_violation,
          "condition_bound: surrogate loses strong convexity in this regime");
  return hi / lo;
}

double chi(double gamma, const ThetaWeights& theta, double l) {
  if (gamma == 0.0) return 1.0;
  return q_eigenvalue(l, gamma, theta) * theta.tau();
}

std::optional<double> distance_bound_general(const Population& pop, double gamma,
                                             const ThetaWeights& theta) {
  check_regime(gamma, 1.0 / pop.lipschitz(), "distance_bound_general");
  const double x = chi(gamma, theta, pop.lipschitz());
  if (!(x > 0.0)) return std::nullopt;
  const double mu = pop.mu();
  const double sigma_c = std::sqrt(pop.center_spread_sq());
  const double sigma_a = std::sqrt(pop.curvature_spread_sq());
  return (pop.lipschitz() * sigma_c / mu) * (1.0 + sigma_a / mu) * ((1.0 - x) / x);
}

std::optional<double> distance_bound_fedavg(const Population& pop, double gamma, int k) {
  check_regime(gamma, 1.0 / pop.lipschitz(), "distance_bound_fedavg");
  const double mu = pop.mu();
  const double l = pop.lipschitz();
  const double denom = phi(k, mu, gamma);
  if (!(denom > 0.0)) return std::nullopt;
  const double sigma_c = std::sqrt(pop.center_spread_sq());
  const double sigma_a = std::sqrt(pop.curvature_spread_sq());
  const double discrepancy = static_cast<double>(k) * l - phi(k, l, gamma);
  return sigma_c * (1.0 + sigma_a / mu) * (discrepancy / denom);
}

double gamma_for_eps(int k, double l, double eps) {
  require(k >= 1 && l > 0.0, ErrorCode::invalid_argument, "gamma_for_eps: need k >= 1, l > 0");
  require(eps >= 0.0 && eps <= 1.0 - std::exp(-static_cast<double>(k)),
          ErrorCode::invalid_argument, "gamma_for_eps: eps outside [0, 1 - e^-k]");
  if (eps == 0.0) return 0.0;
  return std::log(1.0 / (1.0 - eps)) / (static_cast<double>(k) * l);
}

double distance_bound_eps(const Population& pop, int k, double eps) {
  require(eps >= 0.0 && eps <= 1.0 - std::exp(-static_cast<double>(k)),
          ErrorCode::invalid_argument, "distance_bound_eps: eps outside [0, 1 - e^-k]");
  if (eps == 0.0) return 0.0;
  const double mu = pop.mu();
  const double sigma_c = std::sqrt(pop.center_spread_sq());
  const double sigma_a = std::sqrt(pop.curvature_spread_sq());
  return sigma_c * (1.0 + sigma_a / mu) * (pop.lipschitz() / mu) * (eps / (1.0 - eps));
}

GammaPairBounds distance_bound_gamma_pair(const Population& pop, int k, double gamma1,
                                          double gamma2) {
  require(0.0 <= gamma1 && gamma1 <= gamma2, ErrorCode::invalid_argument,
          "distance_bound_gamma_pair: need 0 <= gamma1 <= gamma2");
  check_regime(gamma2, 1.0 / pop.lipschitz(), "distance_bound_gamma_pair");
  const double mu = pop.mu();
  const double l = pop.lipschitz();
  const double sigma_c = std::sqrt(pop.center_spread_sq());

  GammaPairBounds out;
  out.simple = 2.0 * sigma_c * (l * l * l) / (mu * mu) * (gamma2 - gamma1);
  const double denom1 = phi(k, mu, gamma1);
  const double denom2 = phi(k, mu, gamma2);
  if (denom1 > 0.0 && denom2 > 0.0) {
    out.tight = sigma_c * (1.0 + phi(k, l, gamma2) / denom2) *
                ((phi(k, l, gamma1) - phi(k, l, gamma2)) / denom1);
  }
  return out;
}

Vector asymptotic_minimizer(const Population& pop) { return pop.mean_center(); }

}  // namespace luq
