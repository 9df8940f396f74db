#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "luq/linalg.hpp"
#include "luq/rng.hpp"

namespace luq {

/// One data point z: loss f(x; z) = 1/2 (x - c)^T a (x - c).
struct QuadraticExample {
  SymMatrix a;
  Vector c;
};

double example_loss(const QuadraticExample& e, const Vector& x);
Vector example_grad(const QuadraticExample& e, const Vector& x);

/// A participant holding a finite weighted example distribution. The derived
/// effective quadratic (curvature, center, offset) reproduces the expected
/// example loss exactly:
///   E_z[loss(z, x)] = 1/2 (x-c)^T A (x-c) + tau   for all x.
class Client {
 public:
  /// Builds the effective quadratic from (example, probability) pairs.
  /// Probabilities must be positive and sum to 1 within 1e-12; the averaged
  /// curvature must be invertible. `label` names the client in errors.
  static Client from_examples(std::vector<std::pair<QuadraticExample, double>> examples,
                              const std::string& label = "client");

  const std::vector<std::pair<QuadraticExample, double>>& examples() const {
    return examples_;
  }
  /// Example probabilities in declaration order (sampling hot path).
  const std::vector<double>& example_probs() const { return probs_; }
  std::size_t dim() const { return center_.dim(); }

  const SymMatrix& curvature() const { return curvature_; }  // A_i
  const Vector& center() const { return center_; }           // c_i
  double offset() const { return offset_; }                  // tau_i
  double mu() const { return mu_; }                          // lambda_min(A_i)
  double lipschitz() const { return lipschitz_; }            // lambda_max(A_i)

  double loss(const Vector& x) const;
  Vector grad(const Vector& x) const;

  /// True when all examples share one curvature matrix (within 1e-12), the
  /// condition under which the uniform gradient-noise bound exists.
  bool has_common_curvature() const { return common_curvature_; }

  /// E_z ||A (c_z - c)||^2; the client's gradient variance contribution.
  double gradient_noise_sq() const;

 private:
  std::vector<std::pair<QuadraticExample, double>> examples_;
  std::vector<double> probs_;
  SymMatrix curvature_;
  Vector center_;
  double offset_ = 0.0;
  double mu_ = 0.0;
  double lipschitz_ = 0.0;
  bool common_curvature_ = false;
  std::string label_;
};

/// Finite weighted client set with the derived global statistics.
class Population {
 public:
  static Population from_clients(std::vector<std::pair<Client, double>> clients);

  const std::vector<std::pair<Client, double>>& clients() const { return clients_; }
  std::size_t size() const { return clients_.size(); }
  std::size_t dim() const { return mean_center_.dim(); }

  const SymMatrix& mean_curvature() const { return mean_curvature_; }  // A
  const Vector& mean_center() const { return mean_center_; }           // c
  double mu() const { return mu_; }
  double lipschitz() const { return lipschitz_; }
  double curvature_spread_sq() const { return curvature_spread_sq_; }  // sigma_A^2
  double center_spread_sq() const { return center_spread_sq_; }        // sigma_c^2
  const Vector& minimizer() const { return minimizer_; }               // x*

  /// Uniform gradient-noise bound G^2, defined only when every client has a
  /// common curvature matrix.
  std::optional<double> gradient_noise_sq() const { return gradient_noise_sq_; }

 private:
  std::vector<std::pair<Client, double>> clients_;
  SymMatrix mean_curvature_;
  Vector mean_center_;
  double mu_ = 0.0;
  double lipschitz_ = 0.0;
  double curvature_spread_sq_ = 0.0;
  double center_spread_sq_ = 0.0;
  Vector minimizer_;
  std::optional<double> gradient_noise_sq_;
};

double true_loss(const Population& pop, const Vector& x);
Vector true_grad(const Population& pop, const Vector& x);

/// G^2 as a checked operation: throws a regime error when some client mixes
/// curvature matrices (the uniform-in-x bound does not exist then).
double grad_noise_sq(const Population& pop);

/// Two clients (A=1, c=1) and (A=2, c=1/2), equal weight. Minimizer 2/3.
Population make_two_point();

/// Discretization of the 1-D family f_i(x) = (1/2) i x^2 - x with client
/// density proportional to 8i/15 on [0.5, 2]: n equally spaced midpoint
/// atoms, weights proportional to the density.
Population make_density_1d(int n_atoms);

/// Random population: each client draws one SPD curvature with eigenvalues
/// in [mu, l] shared by all its examples, and example centers Gaussian
/// around a client center. Reproducible from the seed.
Population make_synthetic(std::size_t dim, std::size_t n_clients, double mu, double l,
                          double center_spread, std::size_t examples_per_client,
                          std::uint64_t seed);

/// JSON document round-trip:
/// {dim, clients:[{weight, examples:[{a: upper-triangle row-major, c, p}]}]}
std::string population_to_json(const Population& pop);
Population population_from_json(const std::string& text);
Population population_from_file(const std::string& path);

}  // namespace luq
