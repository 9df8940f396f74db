#include "luq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "luq/harness.hpp"
#include "luq/maml.hpp"

namespace luq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Collects named checks; "observed <= bound" (or >=) decides pass.
class Checker {
 public:
  explicit Checker(SuiteReport& report) : report_(report) {}

  void le(const std::string& name, double observed, double bound) {
    report_.checks.push_back({name, observed <= bound, observed, bound});
  }
  void ge(const std::string& name, double observed, double bound) {
    report_.checks.push_back({name, observed >= bound, observed, bound});
  }

 private:
  SuiteReport& report_;
};

Vector random_vector(std::size_t d, Stream& s, double scale = 1.0) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = scale * s.next_gaussian();
  return v;
}

SymMatrix random_symmetric(std::size_t d, Stream& s) {
  SymMatrix m(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) m.set(i, j, s.next_gaussian());
  return m;
}

/// Random heterogeneous population: client curvatures share the population
/// eigenvalue range so Assumption-style mu/L are controlled.
Population random_population(Stream& s, std::size_t max_dim, std::size_t max_clients,
                             double mu, double l, double center_scale,
                             std::size_t examples_per_client = 1, double example_spread = 0.0) {
  const std::size_t d = 1 + s.next_below(max_dim);
  const std::size_t n = 2 + s.next_below(max_clients - 1);
  std::vector<std::pair<Client, double>> clients;
  std::vector<double> weights(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = 0.25 + s.next_unit();
    total += weights[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = mu + (l - mu) * 0.25 * s.next_unit();
    const double hi = lo + (l - lo) * s.next_unit();
    SymMatrix a = random_spd(d, lo, std::max(hi, lo), s);
    Vector base = random_vector(d, s, center_scale);
    std::vector<std::pair<QuadraticExample, double>> examples;
    const double p = 1.0 / static_cast<double>(examples_per_client);
    for (std::size_t e = 0; e < examples_per_client; ++e) {
      Vector c = base;
      if (example_spread > 0.0) c += example_spread * random_vector(d, s);
      examples.push_back({QuadraticExample{a, c}, p});
    }
    clients.emplace_back(Client::from_examples(std::move(examples)), weights[i] / total);
  }
  double acc = 0.0;
  for (const auto& [cl, w] : clients) acc += w;
  clients.back().second += 1.0 - acc;
  return Population::from_clients(std::move(clients));
}

ThetaWeights random_theta(Stream& s) {
  const std::size_t len = 1 + s.next_below(6);
  std::vector<double> w(len, 0.0);
  for (auto& x : w)
    if (s.next_unit() < 0.7) x = s.next_unit();
  w.back() = 0.25 + s.next_unit();
  return ThetaWeights::custom(std::move(w));
}

double central_diff(const std::function<double(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// linalg
// ---------------------------------------------------------------------------

void suite_linalg(Checker& ck, Stream root) {
  double worst_recon = 0.0;
  double worst_ortho = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(16);
    const SymMatrix m = random_symmetric(d, s);
    const auto eig = sym_eigen(m);
    const double scale =
        std::max(std::abs(eig.values.front()), std::abs(eig.values.back())) + 1e-300;
    double recon = 0.0;
    double ortho = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double rebuilt = 0.0;
        for (std::size_t k = 0; k < d; ++k)
          rebuilt += eig.vectors[k][i] * eig.values[k] * eig.vectors[k][j];
        const double r = rebuilt - m(i, j);
        recon += r * r;
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += eig.vectors[i][k] * eig.vectors[j][k];
        const double o = dot - (i == j ? 1.0 : 0.0);
        ortho += o * o;
      }
    }
    worst_recon = std::max(worst_recon, std::sqrt(recon) / scale);
    worst_ortho = std::max(worst_ortho, std::sqrt(ortho));
  }
  ck.le("eigen_reconstruction", worst_recon, 1e-10);
  ck.le("eigen_orthonormality", worst_ortho, 1e-10);

  double worst_inv = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Stream s = root.child(4000 + trial);
    const std::size_t d = 1 + s.next_below(12);
    const SymMatrix m = random_spd(d, 0.5 + s.next_unit(), 2.0 + 3.0 * s.next_unit(), s);
    const SymMatrix inv = sym_inverse(m);
    double resid = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += m(i, k) * inv(k, j);
        const double r = acc - (i == j ? 1.0 : 0.0);
        resid += r * r;
      }
    worst_inv = std::max(worst_inv, std::sqrt(resid));
  }
  ck.le("inverse_identity", worst_inv, 1e-10);

  double worst_norm = 0.0;
  double worst_rayleigh = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    Stream s = root.child(8000 + trial);
    const std::size_t d = 1 + s.next_below(8);
    const SymMatrix m = random_symmetric(d, s);
    const auto eig = sym_eigen(m);
    const double max_abs =
        std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
    worst_norm =
        std::max(worst_norm, std::abs(operator_norm(m) - max_abs) / (max_abs + 1e-300));
    const Vector v = random_vector(d, s);
    const double q = quad_form(m, v);
    const double n2 = v.norm_sq();
    const double slack = 1e-12 * (max_abs + 1.0) * n2;
    worst_rayleigh = std::max(worst_rayleigh, eig.values.front() * n2 - q - slack);
    worst_rayleigh = std::max(worst_rayleigh, q - eig.values.back() * n2 - slack);
  }
  ck.le("operator_norm_matches_eigen", worst_norm, 1e-12);
  ck.le("rayleigh_bounds", worst_rayleigh, 0.0);

  Stream s = root.child(12000);
  const auto eig_range = sym_eigen(random_spd(8, 1.0, 10.0, s));
  ck.le("random_spd_pins_extremes",
        std::max(std::abs(eig_range.values.front() - 1.0),
                 std::abs(eig_range.values.back() - 10.0)),
        1e-10);
  const auto eig_flat = sym_eigen(random_spd(4, 1.0, 1.0, s));
  ck.le("random_spd_flat_spectrum",
        std::max(std::abs(eig_flat.values.front() - 1.0),
                 std::abs(eig_flat.values.back() - 1.0)),
        1e-12);
}

// ---------------------------------------------------------------------------
// problem (effective quadratics and population statistics)
// ---------------------------------------------------------------------------

void suite_problem(Checker& ck, Stream root) {
  double worst_contract = 0.0;
  double worst_fd = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(4);
    const std::size_t n_ex = 1 + s.next_below(4);
    std::vector<std::pair<QuadraticExample, double>> examples;
    std::vector<double> probs(n_ex);
    double total = 0.0;
    for (auto& p : probs) {
      p = 0.2 + s.next_unit();
      total += p;
    }
    double acc_p = 0.0;
    for (std::size_t e = 0; e < n_ex; ++e) {
      double p = probs[e] / total;
      if (e + 1 == n_ex) p = 1.0 - acc_p;
      acc_p += p;
      examples.push_back(
          {QuadraticExample{random_spd(d, 0.4 + s.next_unit(), 2.0 + s.next_unit(), s),
                            random_vector(d, s)},
           p});
    }
    const Client cl = Client::from_examples(examples);

    for (int probe = 0; probe < 100; ++probe) {
      const Vector x = random_vector(d, s, 2.0);
      double expected = 0.0;
      for (const auto& [ex, p] : examples) expected += p * example_loss(ex, x);
      const double got = cl.loss(x);
      worst_contract =
          std::max(worst_contract, std::abs(expected - got) / (1.0 + std::abs(expected)));
    }

    // Gradient vs central finite differences of the loss.
    const Vector x = random_vector(d, s, 1.5);
    const Vector g = cl.grad(x);
    for (std::size_t i = 0; i < d; ++i) {
      const double fd = central_diff(
          [&](double h) {
            Vector y = x;
            y[i] += h;
            return cl.loss(y);
          },
          1e-6);
      worst_fd = std::max(worst_fd, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
    }
  }
  ck.le("effective_quadratic_contract", worst_contract, 1e-10);
  ck.le("grad_matches_finite_difference", worst_fd, 1e-6);

  double worst_stationarity = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Stream s = root.child(9000 + trial);
    const Population pop = random_population(s, 6, 12, 0.5, 3.0, 1.5);
    worst_stationarity = std::max(worst_stationarity, true_grad(pop, pop.minimizer()).norm());
  }
  ck.le("minimizer_stationarity", worst_stationarity, 1e-10);

  {
    // Different curvatures, identical centers, dyadic weights: the center
    // spread must vanish exactly while the curvature spread does not.
    Stream s = root.child(20000);
    const Vector c = random_vector(3, s);
    auto make = [&](double lo, double hi) {
      return Client::from_examples({{QuadraticExample{random_spd(3, lo, hi, s), c}, 1.0}});
    };
    const Population pop = Population::from_clients(
        {{make(1.0, 2.0), 0.25}, {make(0.5, 1.5), 0.25}, {make(2.0, 3.0), 0.5}});
    ck.le("sigma_c_zero_with_heterogeneous_curvature", pop.center_spread_sq(), 0.0);
    ck.ge("sigma_a_positive", pop.curvature_spread_sq(), 1e-6);
  }

  {
    const Population density = make_density_1d(2000);
    ck.le("density_minimizer_integral", std::abs(density.minimizer()[0] - 5.0 / 7.0), 1e-3);
    double avg_min = 0.0;
    for (const auto& [cl, w] : density.clients()) avg_min += w * cl.center()[0];
    ck.le("density_average_center_integral", std::abs(avg_min - 0.8), 1e-3);
  }

  {
    const Population a = make_synthetic(3, 5, 1.0, 4.0, 0.7, 3, 99);
    const Population b = make_synthetic(3, 5, 1.0, 4.0, 0.7, 3, 99);
    ck.le("synthetic_seed_determinism",
          population_to_json(a) == population_to_json(b) ? 0.0 : 1.0, 0.0);
    double worst = 0.0;
    for (const auto& [cl, w] : a.clients()) {
      worst = std::max(worst, 1.0 - cl.mu());          // mu <= lambda_min
      worst = std::max(worst, cl.lipschitz() - 4.0);   // lambda_max <= l
    }
    ck.le("synthetic_eigen_range", worst, 1e-10);
    const Population round_trip = population_from_json(population_to_json(a));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, (a.clients()[i].first.center() -
                             round_trip.clients()[i].first.center())
                                .norm());
    }
    ck.le("population_json_round_trip", diff, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// theorem1 (inner loop is SGD on the surrogate)
// ---------------------------------------------------------------------------

void suite_theorem1(Checker& ck, Stream root) {
  double worst_det = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(6);
    const Client cl = Client::from_examples(
        {{QuadraticExample{random_spd(d, 0.5, 2.5, s), random_vector(d, s)}, 1.0}});
    const Vector x = random_vector(d, s, 2.0);
    const ThetaWeights theta = random_theta(s);
    const double gamma = 0.3 * s.next_unit() / cl.lipschitz();
    const Vector got = inner_loop(cl, x, {gamma, theta, 1}, s.child(77));
    const Vector want = inner_loop_expected(cl, gamma, theta, x);
    worst_det = std::max(worst_det, (got - want).norm() / (1.0 + want.norm()));
  }
  ck.le("deterministic_clients_match_closed_form", worst_det, 1e-12);

  const int n_draws = 100000;
  double worst_z = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Stream s = root.child(1000 + trial);
    const std::size_t d = 1 + s.next_below(6);
    const SymMatrix a = random_spd(d, 0.6, 2.0, s);
    const std::size_t n_ex = 2 + s.next_below(3);
    std::vector<std::pair<QuadraticExample, double>> examples;
    const double p = 1.0 / static_cast<double>(n_ex);
    for (std::size_t e = 0; e < n_ex; ++e)
      examples.push_back({QuadraticExample{a, random_vector(d, s)}, p});
    const Client cl = Client::from_examples(examples);

    const Vector x = random_vector(d, s, 1.5);
    const int k = 1 + static_cast<int>(s.next_below(5));
    const int b = 1 + static_cast<int>(s.next_below(2));
    const double gamma = 0.5 * s.next_unit() / cl.lipschitz();
    const ThetaWeights theta = ThetaWeights::fedavg(k);
    const Vector want = inner_loop_expected(cl, gamma, theta, x);

    Vector mean(d);
    Vector m2(d);
    const InnerConfig cfg{gamma, theta, b};
    for (int n = 1; n <= n_draws; ++n) {
      const Vector q = inner_loop(cl, x, cfg, s.child(50000 + n));
      for (std::size_t i = 0; i < d; ++i) {
        const double delta = q[i] - mean[i];
        mean[i] += delta / n;
        m2[i] += delta * (q[i] - mean[i]);
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      const double se =
          std::sqrt(m2[i] / (n_draws - 1.0) / n_draws) + 1e-15 * (1.0 + std::abs(want[i]));
      worst_z = std::max(worst_z, std::abs(mean[i] - want[i]) / se);
    }
  }
  ck.le("monte_carlo_mean_within_5_se", worst_z, 5.0);
}

// ---------------------------------------------------------------------------
// spectra
// ---------------------------------------------------------------------------

SymMatrix matrix_power(const SymMatrix& m, int k) {
  SymMatrix acc = SymMatrix::identity(m.dim());
  for (int i = 0; i < k; ++i) acc = symmetrized_product(acc, m);
  return acc;
}

void suite_spectra(Checker& ck, Stream root) {
  double worst_map = 0.0;
  double worst_geo = 0.0;
  double worst_q = 0.0;
  double worst_extremes = 0.0;
  double worst_grad_identity = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(8);
    const double lo = 0.3 + 0.7 * s.next_unit();
    const double hi = lo + 0.5 + 3.0 * s.next_unit();
    const Client cl = Client::from_examples(
        {{QuadraticExample{random_spd(d, lo, hi, s), random_vector(d, s)}, 1.0}});
    const int k = 1 + static_cast<int>(s.next_below(8));

    ThetaWeights theta = ThetaWeights::fedavg(k);
    const int family = static_cast<int>(s.next_below(3));
    if (family == 1) theta = ThetaWeights::fomaml(k);
    if (family == 2) theta = random_theta(s);
    const double gamma = s.next_unit() / cl.lipschitz();

    const auto a_eig = sym_eigen(cl.curvature());
    const SymMatrix q = distortion_matrix(cl, gamma, theta);
    const SymMatrix qa = symmetrized_product(q, cl.curvature());
    const auto qa_eig = sym_eigen(qa);
    const double scale = operator_norm(qa) + 1e-300;

    std::vector<double> mapped(d);
    for (std::size_t i = 0; i < d; ++i)
      mapped[i] = q_eigenvalue(a_eig.values[i], gamma, theta) * a_eig.values[i];
    std::sort(mapped.begin(), mapped.end());
    for (std::size_t i = 0; i < d; ++i)
      worst_map = std::max(worst_map, std::abs(mapped[i] - qa_eig.values[i]) / scale);

    // phi is the all-ones special case of the map.
    if (theta.is_all_ones()) {
      std::vector<double> phis(d);
      for (std::size_t i = 0; i < d; ++i) phis[i] = phi(k, a_eig.values[i], gamma);
      std::sort(phis.begin(), phis.end());
      for (std::size_t i = 0; i < d; ++i)
        worst_map = std::max(worst_map, std::abs(phis[i] - qa_eig.values[i]) / scale);
    }

    const auto q_eig = sym_eigen(q);
    std::vector<double> q_mapped(d);
    for (std::size_t i = 0; i < d; ++i) q_mapped[i] = q_eigenvalue(a_eig.values[i], gamma, theta);
    std::sort(q_mapped.begin(), q_mapped.end());
    for (std::size_t i = 0; i < d; ++i)
      worst_q = std::max(worst_q,
                         std::abs(q_mapped[i] - q_eig.values[i]) / (operator_norm(q) + 1e-300));

    // Geometric-sum closed form (I - (I-gamma A)^K)(gamma A)^{-1} against the
    // Horner power sum, on the open-interval regime where the inverse exists.
    if (gamma > 1e-8) {
      const ThetaWeights ones = ThetaWeights::fedavg(k);
      SymMatrix step = SymMatrix::identity(d);
      step -= gamma * cl.curvature();
      SymMatrix closed = SymMatrix::identity(d);
      closed -= matrix_power(step, k);
      closed = symmetrized_product(closed, sym_inverse(gamma * cl.curvature()));
      const SymMatrix direct = distortion_matrix(cl, gamma, ones);
      SymMatrix diff = closed;
      diff -= direct;
      worst_geo =
          std::max(worst_geo, diff.frobenius_norm() / (direct.frobenius_norm() + 1e-300));
    }

    // Extreme eigenvalues via the monotone map.
    const bool monotone_ok =
        theta.is_all_ones() || gamma * theta.k() * cl.lipschitz() <= 1.0;
    if (monotone_ok) {
      const auto [min_e, max_e] = qa_spectrum(cl, gamma, theta);
      worst_extremes =
          std::max(worst_extremes, std::abs(min_e - qa_eig.values.front()) / scale);
      worst_extremes =
          std::max(worst_extremes, std::abs(max_e - qa_eig.values.back()) / scale);
    }

    // Gradient identity: Q (A (x - c)) equals the gradient of the
    // symmetrized quadratic, [QA]_sym (x - c).
    const Vector x = random_vector(d, s, 1.5);
    const Vector via_q = surrogate_client_grad(cl, gamma, theta, x);
    const Vector via_sym = qa.apply(x - cl.center());
    worst_grad_identity = std::max(
        worst_grad_identity, (via_q - via_sym).norm() / (1.0 + via_sym.norm()));
  }
  ck.le("surrogate_gradient_identity", worst_grad_identity, 1e-10);
  ck.le("qa_eigenvalues_match_map", worst_map, 1e-10);
  ck.le("q_eigenvalues_match_map", worst_q, 1e-10);
  ck.le("geometric_sum_closed_form", worst_geo, 1e-10);
  ck.le("qa_spectrum_extremes", worst_extremes, 1e-10);

  double worst_phi = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    Stream s = root.child(70000 + trial);
    const int k = 1 + static_cast<int>(s.next_below(30));
    const double lambda = 0.2 + 3.0 * s.next_unit();
    const double gamma = s.next_unit() / lambda;
    double direct = 0.0;
    for (int j = 0; j < k; ++j) direct += std::pow(1.0 - gamma * lambda, j) * lambda;
    worst_phi =
        std::max(worst_phi, std::abs(phi(k, lambda, gamma) - direct) / (1.0 + direct));
  }
  ck.le("phi_matches_direct_sum", worst_phi, 1e-12);
}

// ---------------------------------------------------------------------------
// bounds (distance-bound dominance and the supporting lemmas)
// ---------------------------------------------------------------------------

void suite_bounds(Checker& ck, Stream root) {
  double worst_general = -kInf;
  double worst_fedavg = -kInf;
  double worst_pair = -kInf;
  double worst_eps_dom = -kInf;
  double worst_stationarity = 0.0;
  double zero_at_zero = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Stream s = root.child(trial);
    const Population pop = random_population(s, 8, 20, 0.5, 3.0, 1.0);
    const int k = 1 + static_cast<int>(s.next_below(10));
    const ThetaWeights ones = ThetaWeights::fedavg(k);
    const ThetaWeights mixed = random_theta(s);
    const double l = pop.lipschitz();
    const Vector x_star = pop.minimizer();

    std::vector<double> grid;
    for (int g = 0; g <= 8; ++g) grid.push_back(0.95 / l * g / 8.0);

    std::vector<Vector> ones_minimizers;
    for (double gamma : grid) {
      for (const ThetaWeights* theta : {&ones, &mixed}) {
        const Vector xs = surrogate_minimizer(pop, gamma, *theta);
        const double exact = (xs - x_star).norm();
        if (trial % 50 == 0) {
          Vector grad(pop.dim());
          for (const auto& [cl, w] : pop.clients())
            grad += w * surrogate_client_grad(cl, gamma, *theta, xs);
          worst_stationarity = std::max(worst_stationarity, grad.norm());
        }
        const auto general = distance_bound_general(pop, gamma, *theta);
        if (general) worst_general = std::max(worst_general, exact - *general);
        if (gamma == 0.0 && general) zero_at_zero = std::max(zero_at_zero, *general);
        if (theta == &ones) {
          ones_minimizers.push_back(xs);
          const auto fedavg = distance_bound_fedavg(pop, gamma, k);
          if (fedavg) {
            worst_fedavg = std::max(worst_fedavg, exact - *fedavg);
          } else {
            worst_fedavg = kInf;  // fedavg denominator must stay positive here
          }
          if (gamma == 0.0) zero_at_zero = std::max(zero_at_zero, *fedavg);
        }
      }
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double exact = (ones_minimizers[i] - ones_minimizers[i + 1]).norm();
      const auto pair = distance_bound_gamma_pair(pop, k, grid[i], grid[i + 1]);
      if (pair.tight) worst_pair = std::max(worst_pair, exact - *pair.tight);
      if (pair.simple) worst_pair = std::max(worst_pair, exact - *pair.simple);
    }
    // The eps corollary dominates at its own learning rate.
    const double eps = (1.0 - std::exp(-k)) * s.next_unit();
    const double g_eps = gamma_for_eps(k, l, eps);
    const Vector xs = surrogate_minimizer(pop, g_eps, ones);
    worst_eps_dom =
        std::max(worst_eps_dom, (xs - x_star).norm() - distance_bound_eps(pop, k, eps));
  }
  ck.le("dominance_general", worst_general, 1e-12);
  ck.le("dominance_fedavg", worst_fedavg, 1e-12);
  ck.le("dominance_gamma_pair", worst_pair, 1e-12);
  ck.le("dominance_eps_corollary", worst_eps_dom, 1e-12);
  ck.le("minimizer_stationarity", worst_stationarity, 1e-10);
  ck.le("bounds_zero_at_gamma_zero", zero_at_zero, 0.0);

  {
    Stream s = root.child(500000);
    const Client proto = Client::from_examples(
        {{QuadraticExample{random_spd(3, 0.8, 2.2, s), random_vector(3, s)}, 1.0}});
    const Population homo =
        Population::from_clients({{proto, 0.5}, {proto, 0.25}, {proto, 0.25}});
    double worst = 0.0;
    for (double gamma : {0.0, 0.1, 0.3, 0.44}) {
      worst = std::max(worst, distance_bound_general(homo, gamma, ThetaWeights::fedavg(4))
                                  .value_or(kInf));
      worst = std::max(worst, distance_bound_fedavg(homo, gamma, 4).value_or(kInf));
      const auto pair = distance_bound_gamma_pair(homo, 4, gamma * 0.5, gamma);
      worst = std::max(worst, pair.tight.value_or(kInf));
      worst = std::max(worst, pair.simple.value_or(kInf));
    }
    ck.le("bounds_zero_for_homogeneous", worst, 0.0);
  }

  double worst_ratio = 0.0;
  double worst_disc = -kInf;
  double worst_eps = 0.0;
  for (int trial = 0; trial < 400; ++trial) {
    Stream s = root.child(600000 + trial);
    const double mu = 0.3 + s.next_unit();
    const double l = mu + 3.0 * s.next_unit();
    const int k = 1 + static_cast<int>(s.next_below(20));
    const double gamma = s.next_unit() / l;
    worst_ratio =
        std::max(worst_ratio, phi(k, l, gamma) / phi(k, mu, gamma) / (l / mu) - 1.0);

    // Discrepancy lemma, in the form the proof actually establishes:
    // ||tau Q A - A|| <= (K L - phi_{K,L}(gamma)) / K with the population L.
    const std::size_t d = 1 + s.next_below(6);
    const Client cl =
        Client::from_examples({{QuadraticExample{random_spd(d, mu, l, s), random_vector(d, s)},
                                1.0}});
    SymMatrix lhs = distortion_matrix(cl, gamma, ThetaWeights::fedavg(k));
    lhs = symmetrized_product(lhs, cl.curvature());
    lhs *= 1.0 / static_cast<double>(k);
    lhs -= cl.curvature();
    const double rhs = (k * l - phi(k, l, gamma)) / k;
    worst_disc = std::max(worst_disc, operator_norm(lhs) - rhs);

    const double eps = (1.0 - std::exp(-k)) * s.next_unit();
    const double g_eps = gamma_for_eps(k, l, eps);
    for (double lam : {mu, l}) {
      const double shortfall =
          ((1.0 - eps) * k * lam - phi(k, lam, g_eps)) / (k * lam);
      worst_eps = std::max(worst_eps, shortfall);
    }
  }
  ck.le("phi_ratio_lemma", worst_ratio, 1e-12);
  ck.le("discrepancy_lemma", worst_disc, 1e-12);
  ck.le("phi_eps_lower_bound", worst_eps, 1e-12);
}

// ---------------------------------------------------------------------------
// asymptotic (K -> infinity limit of the surrogate minimizer)
// ---------------------------------------------------------------------------

void suite_asymptotic(Checker& ck, Stream root) {
  double worst_increase = -kInf;
  double worst_final = 0.0;
  double worst_cross = 0.0;
  double worst_precondition = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Stream s = root.child(trial);
    // Clients share the population eigenvalue range [1, 3] and uniform
    // weights; the K sweep of the minimizer distance is robustly monotone on
    // this class (it need not be for adversarial spectra).
    const std::size_t dim = 1 + s.next_below(6);
    const std::size_t n = 2 + s.next_below(8);
    std::vector<std::pair<Client, double>> clients;
    for (std::size_t i = 0; i < n; ++i)
      clients.emplace_back(
          Client::from_examples(
              {{QuadraticExample{random_spd(dim, 1.0, 3.0, s), random_vector(dim, s)}, 1.0}}),
          1.0 / static_cast<double>(n));
    double wacc = 0.0;
    for (const auto& [cl, w] : clients) wacc += w;
    clients.back().second += 1.0 - wacc;
    const Population pop = Population::from_clients(std::move(clients));
    const double gamma = 0.5 / pop.lipschitz();
    worst_precondition =
        std::max(worst_precondition, std::pow(1.0 - gamma * pop.mu(), 200) - 1e-8);
    const Vector c_bar = pop.mean_center();
    const std::size_t d = pop.dim();

    // Incremental K sweep: track (I - gamma A_i)^K per client.
    std::vector<SymMatrix> powers;
    std::vector<SymMatrix> steps;
    for (const auto& [cl, w] : pop.clients()) {
      SymMatrix step = SymMatrix::identity(d);
      step -= gamma * cl.curvature();
      steps.push_back(step);
      powers.push_back(SymMatrix::identity(d));
    }
    double prev = kInf;
    double final_dist = kInf;
    for (int k = 1; k <= 200; ++k) {
      SymMatrix mass(d);
      Vector rhs(d);
      for (std::size_t i = 0; i < powers.size(); ++i) {
        powers[i] = symmetrized_product(powers[i], steps[i]);
        const auto& [cl, w] = pop.clients()[i];
        SymMatrix shrink = SymMatrix::identity(d);
        shrink -= powers[i];
        mass += w * shrink;
        rhs += w * shrink.apply(cl.center());
      }
      const Vector xk = sym_inverse(mass).apply(rhs);
      const double dist = (xk - c_bar).norm();
      // Rounding jitter near the floor (~1e-15 absolute) is not an increase.
      worst_increase = std::max(worst_increase, (dist - prev) / (1.0 + c_bar.norm()));
      prev = dist;
      final_dist = dist;
      if (k == 1 || k == 7 || k == 50) {
        const Vector direct = surrogate_minimizer(pop, gamma, ThetaWeights::fedavg(k));
        worst_cross = std::max(worst_cross, (xk - direct).norm());
      }
    }
    worst_final = std::max(worst_final, final_dist / (1e-6 * (1.0 + c_bar.norm())));
  }
  ck.le("contraction_precondition_holds", worst_precondition, 0.0);
  ck.le("distance_nonincreasing_in_k", worst_increase, 1e-13);
  ck.le("distance_small_at_k200", worst_final, 1.0);
  ck.le("incremental_matches_surrogate_minimizer", worst_cross, 1e-10);

  const Population two = make_two_point();
  ck.le("two_point_average_center", std::abs(asymptotic_minimizer(two)[0] - 0.75), 1e-15);
  const Population density = make_density_1d(2000);
  ck.le("density_average_center", std::abs(asymptotic_minimizer(density)[0] - 0.8), 1e-3);
}

// ---------------------------------------------------------------------------
// maml
// ---------------------------------------------------------------------------

void suite_maml(Checker& ck, Stream root) {
  double worst_equiv = 0.0;
  double worst_fd = 0.0;
  double worst_steps = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    Stream s = root.child(trial);
    const std::size_t d = 1 + s.next_below(5);
    const Client cl = Client::from_examples(
        {{QuadraticExample{random_spd(d, 0.5, 2.5, s), random_vector(d, s)}, 1.0}});
    const Vector x = random_vector(d, s, 1.5);
    const int k = 1 + static_cast<int>(s.next_below(5));
    const double gamma = 0.8 * s.next_unit() / cl.lipschitz();

    const Vector meta = maml_grad(cl, x, gamma, k);
    const Vector surr = surrogate_client_grad(cl, gamma, ThetaWeights::maml_equiv(k), x);
    worst_equiv = std::max(worst_equiv, (meta - surr).norm() / (1.0 + surr.norm()));

    for (std::size_t i = 0; i < d; ++i) {
      const double fd = central_diff(
          [&](double h) {
            Vector y = x;
            y[i] += h;
            return cl.loss(gd_k_steps(cl, y, gamma, k)) - cl.offset();
          },
          3e-6);
      worst_fd = std::max(worst_fd, std::abs(fd - meta[i]) / (1.0 + std::abs(meta[i])));
    }

    Vector iter = x;
    for (int step = 0; step < k; ++step) iter -= gamma * cl.grad(iter);
    worst_steps =
        std::max(worst_steps, (iter - gd_k_steps(cl, x, gamma, k)).norm() / (1.0 + iter.norm()));
  }
  ck.le("meta_gradient_matches_surrogate", worst_equiv, 1e-12);
  ck.le("meta_gradient_matches_finite_difference", worst_fd, 1e-6);
  ck.le("gd_steps_match_iteration", worst_steps, 1e-12);

  {
    // First-order and full meta gradients steer to different points.
    const Population two = make_two_point();
    const int k = 2;
    const double gamma = 0.2;
    const Vector fomaml = surrogate_minimizer(two, gamma, ThetaWeights::fomaml(k));
    const Vector maml = surrogate_minimizer(two, gamma, ThetaWeights::maml_equiv(k));
    ck.ge("fomaml_maml_stationary_gap", (fomaml - maml).norm(), 1e-6);
  }
}

// ---------------------------------------------------------------------------
// schedules (convergence-rate machinery)
// ---------------------------------------------------------------------------

Population schedules_population() {
  return make_synthetic(2, 4, 1.0, 2.0, 0.8, 3, 4242);
}

void suite_schedules(Checker& ck, Stream root) {
  {
    const auto [mu0, l0] = smoothness_params(1.0, 2.0, 0.0, 7);
    ck.le("smoothness_at_zero", std::abs(mu0 - 7.0) + std::abs(l0 - 14.0), 1e-12);
    const auto [mu1, l1] = smoothness_params(1.0, 2.0, 0.25, 2);
    ck.le("smoothness_formula", std::abs(mu1 - 1.75) + std::abs(l1 - 3.0), 1e-12);
    const auto [muk, lk] = smoothness_params(0.7, 1.9, 0.33, 1);
    ck.le("smoothness_k1", std::abs(muk - 0.7) + std::abs(lk - 1.9), 1e-12);

    const ScheduleContext ctx{1.0, 2.0, 10, 0.05};
    const auto [g1, e1] = schedule_eval(Schedule::joint({}), 1, ctx);
    ck.le("joint_gamma_first_round", std::abs(g1 - 1.0 / 26.0), 1e-15);
    ck.le("joint_eta_first_round", std::abs(e1 - (3.0 / phi(10, 1.0, g1)) / 13.0), 1e-15);

    const auto [gc, ec] = schedule_eval(Schedule::constant(0.01), 17, ctx);
    ck.le("constant_schedule", std::abs(gc - 0.05) + std::abs(ec - 0.01), 0.0);

    const auto [mu_g, l_g] = smoothness_params(1.0, 2.0, 0.05, 10);
    const double b_g = 2.0 * l_g * l_g / (mu_g * mu_g);
    const auto [gf, ef] =
        schedule_eval(Schedule::fixed_client_decaying_server({}, {}), 1, ctx);
    ck.le("decaying_server_first_round",
          std::abs(gf - 0.05) + std::abs(ef - (2.0 / mu_g) / (b_g + 1.0)), 1e-15);
  }

  const Population pop = schedules_population();
  const double g_sq = grad_noise_sq(pop);
  ck.ge("synthetic_noise_positive", g_sq, 1e-8);
  const int k = 5;
  const int m = static_cast<int>(pop.size());
  const int b = 1;
  const double gamma = 0.1;
  const ThetaWeights theta = ThetaWeights::fedavg(k);

  {
    // Variance of the averaged inner-loop output at a frozen point, against
    // K G^2 / (M B). Full participation isolates the within-client noise the
    // bound covers.
    Stream s = root.child(1);
    const Vector x = random_vector(pop.dim(), s, 1.0);
    Vector expected(pop.dim());
    for (const auto& [cl, w] : pop.clients())
      expected += w * surrogate_client_grad(cl, gamma, theta, x);
    const int n_draws = 100000;
    double second_moment = 0.0;
    const InnerConfig cfg{gamma, theta, b};
    for (int trial = 0; trial < n_draws; ++trial) {
      Vector q(pop.dim());
      double wsum = 0.0;
      for (const auto& [cl, w] : pop.clients()) wsum += w;
      std::size_t slot = 0;
      for (const auto& [cl, w] : pop.clients()) {
        q += (w / wsum) * inner_loop(cl, x, cfg, s.child(trial, slot));
        ++slot;
      }
      second_moment += (q - expected).norm_sq();
    }
    second_moment /= n_draws;
    ck.le("variance_bound_monte_carlo", second_moment, variance_bound(g_sq, k, m, b));
  }

  const auto [mu_g, l_g] = smoothness_params(pop.mu(), pop.lipschitz(), gamma, k);
  const Vector x_gamma = surrogate_minimizer(pop, gamma, theta);

  {
    // Constant-step plateau: mean squared distance at the horizon stays
    // under twice the theorem's floor (the slack absorbs the decayed term).
    const double eta = 0.8 * mu_g / (l_g * l_g);
    const double floor = error_floor(eta, k, g_sq, m, b, mu_g);
    RunSpec spec;
    spec.theta = theta;
    spec.gamma = gamma;
    spec.schedule = Schedule::constant(eta);
    spec.clients_per_round = m;
    spec.batch_size = b;
    spec.rounds = 5000;
    spec.x0 = x_gamma + Vector(pop.dim(), 0.3);
    double mean_sq = 0.0;
    const int n_seeds = 200;
    for (int seed = 0; seed < n_seeds; ++seed) {
      spec.master_seed = 1000 + seed;
      const RunResult r = run(pop, spec);
      mean_sq += (r.final_x - x_gamma).norm_sq() / n_seeds;
    }
    ck.le("error_floor_plateau", mean_sq, 2.0 * floor);
    ck.le("error_floor_zero_noise", error_floor(eta, k, 0.0, m, b, mu_g), 0.0);
  }

  {
    // Decaying-server theorem: mean over seeds of ||x_t - x*_gamma||^2 under
    // nu_gamma / (b_gamma + t) at every logged round.
    const double b_gamma = 2.0 * l_g * l_g / (mu_g * mu_g);
    const int rounds = 1200;
    const int n_seeds = 100;
    RunSpec spec;
    spec.theta = theta;
    spec.gamma = gamma;
    spec.schedule = Schedule::fixed_client_decaying_server({}, {});
    spec.clients_per_round = m;
    spec.batch_size = b;
    spec.rounds = rounds;
    const double noise_term = 4.0 * k * g_sq / (mu_g * mu_g * m * b);
    Vector x0 = x_gamma;
    x0[0] += std::sqrt(0.25 * noise_term / (b_gamma + 1.0));
    spec.x0 = x0;
    const double nu =
        std::max(noise_term, (b_gamma + 1.0) * (x0 - x_gamma).norm_sq());
    std::vector<double> mean_sq(rounds, 0.0);
    for (int seed = 0; seed < n_seeds; ++seed) {
      spec.master_seed = 7000 + seed;
      const RunResult r = run(pop, spec);
      for (int t = 0; t < rounds; ++t) {
        const double dist = r.rounds[t].dist_surrogate_min;
        mean_sq[t] += dist * dist / n_seeds;
      }
    }
    double worst = -kInf;
    for (int t = 0; t < rounds; ++t)
      worst = std::max(worst, mean_sq[t] * (b_gamma + (t + 1.0)) / nu);
    ck.le("decaying_server_theorem", worst, 1.0);
  }
}

// ---------------------------------------------------------------------------
// equivalence (special cases and server update algebra)
// ---------------------------------------------------------------------------

void suite_equivalence(Checker& ck, Stream root) {
  {
    // FedAvg with eta = gamma reproduces averaging of locally trained models.
    Stream s = root.child(1);
    const std::size_t d = 3;
    std::vector<std::pair<Client, double>> clients;
    for (int i = 0; i < 4; ++i)
      clients.emplace_back(
          Client::from_examples(
              {{QuadraticExample{random_spd(d, 0.5, 2.0, s), random_vector(d, s)}, 1.0}}),
          0.25);
    const Population pop = Population::from_clients(std::move(clients));
    const double gamma = 0.2;
    const int k = 4;
    const Vector x = random_vector(d, s, 1.0);
    ServerState server =
        ServerState::make(ServerOptimizer::sgd, UpdateMode::gradient_sum, d);
    const auto [x_round, row] = outer_round(pop, x, 4, gamma, gamma,
                                            ThetaWeights::fedavg(k), 1, server, 99, 1);
    Vector averaged(d);
    for (const auto& [cl, w] : pop.clients()) {
      Vector local = x;
      for (int step = 0; step < k; ++step) local -= gamma * cl.grad(local);
      averaged += w * local;
    }
    ck.le("fedavg_equals_model_averaging", (x_round - averaged).norm(), 1e-12);
  }

  {
    // model_delta(eta, gamma) == gradient_sum(eta*gamma, gamma), bitwise.
    const Population pop = schedules_population();
    RunSpec a;
    a.theta = ThetaWeights::fedavg(3);
    a.gamma = 0.2;
    a.schedule = Schedule::constant(0.3);
    a.mode = UpdateMode::model_delta;
    a.clients_per_round = 2;
    a.batch_size = 2;
    a.rounds = 25;
    a.x0 = Vector(pop.dim(), 0.7);
    a.master_seed = 31337;
    RunSpec b = a;
    b.mode = UpdateMode::gradient_sum;
    b.schedule = Schedule::constant(0.3 * 0.2);
    const RunResult ra = run(pop, a);
    const RunResult rb = run(pop, b);
    double diff = 0.0;
    for (std::size_t i = 0; i < pop.dim(); ++i)
      diff = std::max(diff, std::abs(ra.final_x[i] - rb.final_x[i]));
    ck.le("model_delta_coupling_bitwise", diff, 0.0);

    // model_delta with gamma = 0 never moves.
    RunSpec frozen = a;
    frozen.gamma = 0.0;
    frozen.rounds = 5;
    const RunResult rf = run(pop, frozen);
    ck.le("model_delta_gamma_zero_freezes", (rf.final_x - frozen.x0).norm(), 0.0);
  }

  {
    // Theta_1 output does not depend on the client learning rate.
    Stream s = root.child(2);
    const Client cl = Client::from_examples(
        {{QuadraticExample{random_spd(2, 0.5, 1.5, s), random_vector(2, s)}, 1.0}});
    const Vector x = random_vector(2, s);
    const ThetaWeights one = ThetaWeights::fedavg(1);
    const Vector g0 = inner_loop(cl, x, {0.0, one, 1}, s.child(5));
    const Vector g5 = inner_loop(cl, x, {5.0, one, 1}, s.child(5));
    ck.le("theta1_ignores_gamma", (g0 - g5).norm(), 0.0);
  }

  {
    // Yogi hand trace from zero state.
    ServerState st = ServerState::make(ServerOptimizer::yogi, UpdateMode::gradient_sum, 1);
    const Vector x(std::vector<double>{0.0});
    const Vector q(std::vector<double>{1.0});
    const Vector next = server_apply(st, x, q, 1.0, 0.0);
    const double want = -0.1 / (std::sqrt(0.01) + 1e-5);
    ck.le("yogi_hand_trace", std::abs(next[0] - want), 1e-12);
    ck.le("yogi_momentum", std::abs(st.momentum[0] - 0.1), 1e-15);
    ck.le("yogi_accumulator", std::abs(st.accumulator[0] - 0.01), 1e-15);
  }
}

// ---------------------------------------------------------------------------
// decay (plateau scheduler invariants)
// ---------------------------------------------------------------------------

RunSpec two_point_decay_spec() {
  const Population pop = make_two_point();
  RunSpec spec;
  spec.theta = ThetaWeights::fedavg(2);
  spec.gamma = 0.5;
  spec.schedule = Schedule::constant(0.1);
  spec.clients_per_round = 2;
  spec.batch_size = 1;
  spec.rounds = 400;
  spec.x0 = Vector(pop.dim(), 0.0);
  spec.master_seed = 7;
  return spec;
}

void suite_decay(Checker& ck, Stream) {
  const Population pop = make_two_point();
  DecayConfig decay;
  decay.delta = 1e-4;
  decay.alpha = 0.1;
  decay.beta = 0.9;
  decay.window = 5;
  decay.patience = 5;
  decay.cooldown = 5;

  RunSpec spec = two_point_decay_spec();
  const RunResult r = run_decay(pop, spec, decay);

  // gamma_t == gamma0 alpha^n exactly, eta likewise, both nonincreasing, and
  // decays spaced by more than the cooldown.
  double ladder_diff = 0.0;
  double worst_increase = -kInf;
  int last_decay = -1000000;
  int min_gap = 1 << 30;
  std::deque<double> window;
  double worst_window = 0.0;
  for (const auto& row : r.rounds) {
    double g = spec.gamma;
    double e = spec.schedule.value;
    for (int i = 0; i < row.n_decays - (row.decayed ? 1 : 0); ++i) {
      g *= decay.alpha;
      e *= decay.beta;
    }
    ladder_diff = std::max(ladder_diff, std::abs(row.gamma - g) + std::abs(row.eta - e));
    if (row.round > 1) {
      worst_increase = std::max(worst_increase, row.gamma - r.rounds[row.round - 2].gamma);
    }
    if (row.decayed) {
      if (last_decay > -1000000) min_gap = std::min(min_gap, row.round - last_decay);
      last_decay = row.round;
    }
    window.push_back(row.mean_client_loss);
    if (window.size() > static_cast<std::size_t>(decay.window)) window.pop_front();
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= static_cast<double>(window.size());
    worst_window = std::max(worst_window, std::abs(mean - row.window_avg_loss));
  }
  ck.le("gamma_ladder_exact", ladder_diff, 0.0);
  ck.le("gamma_nonincreasing", worst_increase, 0.0);
  ck.ge("decay_count_positive", r.rounds.back().n_decays, 1.0);
  ck.ge("cooldown_spacing", min_gap == (1 << 30) ? 1e9 : min_gap, decay.cooldown + 1.0);
  ck.le("window_average_matches", worst_window, 1e-12);

  {
    // Full participation, W = 1: the round loss equals the weighted true loss.
    DecayConfig w1 = decay;
    w1.window = 1;
    RunSpec short_spec = spec;
    short_spec.rounds = 50;
    const RunResult rr = run_decay(pop, short_spec, w1);
    RunSpec replay_spec = short_spec;
    double worst = 0.0;
    for (const auto& row : rr.rounds)
      worst = std::max(worst,
                       std::abs(row.mean_client_loss - row.true_loss) /
                           (1.0 + std::abs(row.true_loss)));
    ck.le("full_participation_loss_is_true_loss", worst, 1e-12);

    // Replaying the recorded (gamma_t, eta_t) sequence through the plain
    // driver reproduces the trajectory bitwise.
    const RunResult replay = run_with_schedule(pop, replay_spec, [&](int t) {
      const auto& row = rr.rounds[static_cast<std::size_t>(t - 1)];
      return std::make_pair(row.gamma, row.eta);
    });
    double diff = 0.0;
    for (std::size_t i = 0; i < pop.dim(); ++i)
      diff = std::max(diff, std::abs(replay.final_x[i] - rr.final_x[i]));
    for (std::size_t t = 0; t < rr.rounds.size(); ++t)
      diff = std::max(diff,
                      std::abs(replay.rounds[t].update_norm - rr.rounds[t].update_norm));
    ck.le("sandwich_replay_bitwise", diff, 0.0);
  }

  {
    // Huge delta: the initial cooldown blocks rounds 1..C, then a decay
    // fires every C+P rounds.
    DecayConfig huge;
    huge.delta = 1e9;
    huge.alpha = 0.5;
    huge.beta = 0.5;
    huge.window = 1;
    huge.patience = 3;
    huge.cooldown = 2;
    RunSpec tiny = two_point_decay_spec();
    tiny.rounds = 30;
    const RunResult rr = run_decay(pop, tiny, huge);
    std::vector<int> decay_rounds;
    for (const auto& row : rr.rounds)
      if (row.decayed) decay_rounds.push_back(row.round);
    const std::vector<int> expected{5, 10, 15, 20, 25, 30};
    ck.le("huge_delta_schedule", decay_rounds == expected ? 0.0 : 1.0, 0.0);
    ck.le("huge_delta_count", std::abs(rr.rounds.back().n_decays - 6.0), 0.0);
  }

  {
    bool rejected = false;
    try {
      DecayConfig bad;
      bad.delta = 0.0;
      bad.validate();
    } catch (const Error& e) {
      rejected = e.code() == ErrorCode::invalid_argument;
    }
    ck.le("delta_zero_rejected", rejected ? 0.0 : 1.0, 0.0);
  }
}

// ---------------------------------------------------------------------------
// determinism
// ---------------------------------------------------------------------------

void suite_determinism(Checker& ck, Stream) {
  RunConfig cfg;
  cfg.problem.kind = ProblemConfig::Kind::synthetic;
  cfg.problem.synthetic = {3, 6, 1.0, 3.0, 0.8, 3, 11};
  cfg.theta = {ThetaConfig::Kind::fedavg, 4, {}};
  cfg.gamma = 0.1;
  cfg.eta = Schedule::constant(0.05);
  cfg.clients_per_round = 4;
  cfg.batch_size = 2;
  cfg.rounds = 60;
  cfg.master_seed = 2024;

  const Population pop = build_population(cfg.problem);
  auto csv_for = [&](int threads, std::uint64_t seed) {
    RunSpec spec = build_run_spec(cfg, pop, threads, seed, true);
    return metrics_to_csv(run(pop, spec), false);
  };
  ck.le("csv_identical_across_worker_counts",
        csv_for(1, 2024) == csv_for(4, 2024) ? 0.0 : 1.0, 0.0);
  ck.le("csv_identical_repeat", csv_for(2, 2024) == csv_for(2, 2024) ? 0.0 : 1.0, 0.0);
  ck.le("different_seed_differs", csv_for(1, 2024) != csv_for(1, 2025) ? 0.0 : 1.0, 0.0);

  RunConfig dec = cfg;
  dec.decay = DecayConfig{1e-4, 0.1, 0.9, 5, 5, 5};
  auto decay_csv = [&](int threads) {
    RunSpec spec = build_run_spec(dec, pop, threads, {}, true);
    return metrics_to_csv(run_decay(pop, spec, *dec.decay), true);
  };
  ck.le("decay_csv_identical_across_worker_counts",
        decay_csv(1) == decay_csv(3) ? 0.0 : 1.0, 0.0);
}

// ---------------------------------------------------------------------------
// config (round-trip identity)
// ---------------------------------------------------------------------------

void suite_config(Checker& ck, Stream) {
  std::vector<std::string> docs;
  docs.push_back(R"({
    "problem": {"kind": "two_point"},
    "algorithm": {
      "theta": {"kind": "fedavg", "k": 2},
      "gamma": 0.2,
      "eta": {"kind": "constant", "value": 0.1},
      "clients_per_round": 2,
      "rounds": 100
    },
    "master_seed": 1
  })");
  docs.push_back(R"({
    "problem": {"kind": "density_1d", "n_atoms": 50},
    "algorithm": {
      "theta": {"kind": "custom", "weights": [0.5, 0.0, 1.5]},
      "gamma": 0.25,
      "eta": {"kind": "constant", "value": 0.05},
      "server": {"kind": "yogi", "beta1": 0.9, "beta2": 0.99, "eps": 1e-05},
      "mode": "model_delta",
      "clients_per_round": 10,
      "batch_size": 2,
      "rounds": 10,
      "x0": [0.5]
    },
    "decay": {"delta": 1e-4, "alpha": 0.1, "beta": 0.9, "window": 3, "patience": 4, "cooldown": 5},
    "master_seed": 99,
    "output": "out.csv"
  })");
  docs.push_back(R"({
    "problem": {"kind": "synthetic", "dim": 2, "n_clients": 3, "mu": 1.0, "l": 2.0,
                "center_spread": 0.5, "examples_per_client": 1, "seed": 5},
    "algorithm": {
      "theta": {"kind": "maml", "k": 2},
      "gamma": 0.1,
      "eta": {"kind": "joint"},
      "clients_per_round": 3,
      "rounds": 5,
      "x0": 1.5
    },
    "sweep": {"axis": "gamma", "values": [0.0, 0.1, 0.2]},
    "master_seed": 3
  })");
  docs.push_back(R"({
    "problem": {"kind": "two_point"},
    "algorithm": {
      "theta": {"kind": "fomaml", "k": 3},
      "gamma": 0.1,
      "eta": {"kind": "inverse_time", "a": 2.0, "b": 12.0},
      "clients_per_round": 1,
      "rounds": 3
    },
    "master_seed": 4
  })");
  docs.push_back(R"({
    "problem": {"kind": "two_point"},
    "algorithm": {
      "theta": {"kind": "fedavg", "k": 5},
      "gamma": 0.2,
      "eta": {"kind": "fixed_client_decaying_server", "b_gamma": 40.0},
      "clients_per_round": 2,
      "rounds": 3
    },
    "master_seed": 6
  })");

  double worst = 0.0;
  for (const auto& text : docs) {
    const RunConfig once = config_from_json(text);
    const std::string canon = config_to_json(once);
    const RunConfig twice = config_from_json(canon);
    if (config_to_json(twice) != canon) worst = 1.0;
  }
  ck.le("round_trip_identity", worst, 0.0);

  // Unknown / missing fields are named in errors.
  bool named = false;
  try {
    config_from_json(R"({"problem": {"kind": "two_point"}, "master_seed": 1})");
  } catch (const Error& e) {
    named = std::string(e.what()).find("algorithm") != std::string::npos;
  }
  ck.le("missing_field_named", named ? 0.0 : 1.0, 0.0);

  bool sweep_summary_matches = true;
  {
    // Converged sweep points agree with the closed-form surrogate minimizers.
    RunConfig cfg = config_from_json(docs[2]);
    cfg.sweep->gamma_values = {0.0, 0.1, 0.2};
    cfg.theta = {ThetaConfig::Kind::fedavg, 4, {}};
    cfg.rounds = 4000;
    cfg.eta = Schedule::constant(0.05);
    RunOptions opts;
    opts.quiet = true;
    opts.output_override = "/tmp/luq_verify_sweep.csv";
    const SweepResult sweep = execute_sweep(cfg, opts);
    const Population pop = build_population(cfg.problem);
    for (std::size_t i = 0; i < sweep.points.size(); ++i) {
      const Vector want =
          surrogate_minimizer(pop, cfg.sweep->gamma_values[i], ThetaWeights::fedavg(4));
      if ((sweep.points[i].result.final_x - want).norm() > 1e-4) sweep_summary_matches = false;
    }
  }
  ck.le("sweep_converges_to_surrogate_minimizers", sweep_summary_matches ? 0.0 : 1.0, 0.0);
}

using SuiteFn = void (*)(Checker&, Stream);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites = {
      {"linalg", suite_linalg},       {"problem", suite_problem},
      {"theorem1", suite_theorem1},   {"spectra", suite_spectra},
      {"bounds", suite_bounds},       {"asymptotic", suite_asymptotic},
      {"maml", suite_maml},           {"schedules", suite_schedules},
      {"equivalence", suite_equivalence}, {"decay", suite_decay},
      {"determinism", suite_determinism}, {"config", suite_config},
  };
  return suites;
}

}  // namespace

bool SuiteReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::vector<std::string> verify_suite_names() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

std::vector<SuiteReport> run_verify(const std::string& suite_or_all, std::uint64_t seed,
                                    int n_threads) {
  (void)n_threads;
  std::vector<SuiteReport> reports;
  bool found = false;
  for (const auto& [name, fn] : registry()) {
    if (suite_or_all != "all" && suite_or_all != name) continue;
    found = true;
    SuiteReport report;
    report.suite = name;
    Checker ck(report);
    fn(ck, Stream(seed).child(std::hash<std::string>{}(name)));
    reports.push_back(std::move(report));
  }
  if (!found)
    fail(ErrorCode::invalid_argument, "unknown verification suite: " + suite_or_all);
  return reports;
}

std::string format_report(const std::vector<SuiteReport>& reports) {
  std::ostringstream os;
  for (const auto& rep : reports) {
    for (const auto& c : rep.checks) {
      os << (c.pass ? "PASS" : "FAIL") << ' ' << rep.suite << '.' << c.name << ' '
         << format_double(c.observed) << ' ' << format_double(c.bound) << '\n';
    }
  }
  return os.str();
}

bool reports_all_pass(const std::vector<SuiteReport>& reports) {
  for (const auto& rep : reports)
    if (!rep.all_pass()) return false;
  return true;
}

}  // namespace luq
