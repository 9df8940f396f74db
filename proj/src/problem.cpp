#include "luq/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace luq {

namespace {

void check_dims(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    std::ostringstream os;
    os << where << ": dimension mismatch (" << a << " vs " << b << ")";
    fail(ErrorCode::dimension_mismatch, os.str());
  }
}

}  // namespace

double example_loss(const QuadraticExample& e, const Vector& x) {
  check_dims(e.c.dim(), x.dim(), "example_loss");
  return 0.5 * quad_form(e.a, x - e.c);
}

Vector example_grad(const QuadraticExample& e, const Vector& x) {
  check_dims(e.c.dim(), x.dim(), "example_grad");
  return e.a.apply(x - e.c);
}

Client Client::from_examples(std::vector<std::pair<QuadraticExample, double>> examples,
                             const std::string& label) {
  require(!examples.empty(), ErrorCode::invalid_argument,
          label + ": client needs at least one example");
  const std::size_t d = examples.front().first.c.dim();
  double total_p = 0.0;
  for (const auto& [ex, p] : examples) {
    check_dims(ex.c.dim(), d, "Client::from_examples");
    check_dims(ex.a.dim(), d, "Client::from_examples");
    require(p > 0.0, ErrorCode::invalid_argument, label + ": probabilities must be positive");
    require(ex.a.all_finite() && ex.c.all_finite(), ErrorCode::invalid_argument,
            label + ": example entries must be finite");
    total_p += p;
  }
  require(std::abs(total_p - 1.0) <= 1e-12, ErrorCode::invalid_argument,
          label + ": example probabilities must sum to 1");

  Client cl;
  cl.label_ = label;
  cl.examples_ = std::move(examples);
  cl.probs_.reserve(cl.examples_.size());
  for (const auto& [ex, p] : cl.examples_) cl.probs_.push_back(p);

  SymMatrix a_eff(d);
  Vector ac(d);
  double mean_cac = 0.0;  // E_z[c_z^T A_z c_z]
  for (const auto& [ex, p] : cl.examples_) {
    a_eff += p * ex.a;
    ac += p * ex.a.apply(ex.c);
    mean_cac += p * quad_form(ex.a, ex.c);
  }

  const auto eig = sym_eigen(a_eff);
  cl.mu_ = eig.values.front();
  cl.lipschitz_ = eig.values.back();
  if (!(cl.mu_ > 1e-12 * std::max(cl.lipschitz_, 0.0))) {
    std::ostringstream os;
    os << label << ": averaged curvature is singular (lambda_min = " << cl.mu_ << ")";
    fail(ErrorCode::singular_matrix, os.str());
  }

  cl.curvature_ = a_eff;
  if (cl.examples_.size() == 1) {
    // Single example: the effective quadratic is the example itself, exactly
    // (no solve round-trip residue).
    cl.center_ = cl.examples_.front().first.c;
    cl.offset_ = 0.0;
  } else {
    cl.center_ = sym_inverse(a_eff).apply(ac);
    // Offset chosen so the effective quadratic matches E_z[loss] exactly:
    // tau = 1/2 E[c_z^T A_z c_z] - 1/2 c^T A c.
    cl.offset_ = 0.5 * mean_cac - 0.5 * quad_form(a_eff, cl.center_);
  }

  cl.common_curvature_ = true;
  for (const auto& [ex, p] : cl.examples_) {
    SymMatrix diff = ex.a;
    diff -= a_eff;
    if (diff.frobenius_norm() > 1e-12 * (1.0 + a_eff.frobenius_norm())) {
      cl.common_curvature_ = false;
      break;
    }
  }
  return cl;
}

double Client::loss(const Vector& x) const {
  check_dims(dim(), x.dim(), "Client::loss");
  return 0.5 * quad_form(curvature_, x - center_) + offset_;
}

Vector Client::grad(const Vector& x) const {
  check_dims(dim(), x.dim(), "Client::grad");
  return curvature_.apply(x - center_);
}

double Client::gradient_noise_sq() const {
  double acc = 0.0;
  for (const auto& [ex, p] : examples_) acc += p * curvature_.apply(ex.c - center_).norm_sq();
  return acc;
}

Population Population::from_clients(std::vector<std::pair<Client, double>> clients) {
  require(!clients.empty(), ErrorCode::invalid_argument, "population needs at least one client");
  const std::size_t d = clients.front().first.dim();
  double total_w = 0.0;
  for (const auto& [cl, w] : clients) {
    check_dims(cl.dim(), d, "Population::from_clients");
    require(w > 0.0, ErrorCode::invalid_argument, "client weights must be positive");
    total_w += w;
  }
  require(std::abs(total_w - 1.0) <= 1e-12, ErrorCode::invalid_argument,
          "client weights must sum to 1");

  Population pop;
  pop.clients_ = std::move(clients);

  SymMatrix a_bar(d);
  Vector c_bar(d);
  Vector a_c(d);
  pop.mu_ = pop.clients_.front().first.mu();
  pop.lipschitz_ = pop.clients_.front().first.lipschitz();
  for (const auto& [cl, w] : pop.clients_) {
    a_bar += w * cl.curvature();
    c_bar += w * cl.center();
    a_c += w * cl.curvature().apply(cl.center());
    pop.mu_ = std::min(pop.mu_, cl.mu());
    pop.lipschitz_ = std::max(pop.lipschitz_, cl.lipschitz());
  }
  pop.mean_curvature_ = a_bar;
  pop.mean_center_ = c_bar;
  pop.minimizer_ = sym_inverse(a_bar).apply(a_c);

  double sig_a = 0.0;
  double sig_c = 0.0;
  for (const auto& [cl, w] : pop.clients_) {
    SymMatrix diff = cl.curvature();
    diff -= a_bar;
    const double dn = operator_norm(diff);
    sig_a += w * dn * dn;
    sig_c += w * (cl.center() - c_bar).norm_sq();
  }
  pop.curvature_spread_sq_ = sig_a;
  pop.center_spread_sq_ = sig_c;

  bool all_common = true;
  double g_sq = 0.0;
  for (const auto& [cl, w] : pop.clients_) {
    if (!cl.has_common_curvature()) {
      all_common = false;
      break;
    }
    g_sq = std::max(g_sq, cl.gradient_noise_sq());
  }
  if (all_common) pop.gradient_noise_sq_ = g_sq;
  return pop;
}

double true_loss(const Population& pop, const Vector& x) {
  double acc = 0.0;
  for (const auto& [cl, w] : pop.clients()) acc += w * cl.loss(x);
  return acc;
}

Vector true_grad(const Population& pop, const Vector& x) {
  Vector acc(pop.dim());
  for (const auto& [cl, w] : pop.clients()) acc += w * cl.grad(x);
  return acc;
}

double grad_noise_sq(const Population& pop) {
  std::size_t idx = 0;
  for (const auto& [cl, w] : pop.clients()) {
    if (!cl.has_common_curvature()) {
      std::ostringstream os;
      os << "grad_noise_sq: client " << idx << " mixes curvature matrices, so the "
         << "gradient variance depends on x and no uniform bound G^2 exists";
      fail(ErrorCode::regime_violation, os.str());
    }
    ++idx;
  }
  return *pop.gradient_noise_sq();
}

namespace {

Client scalar_client(double a, double c, const std::string& label) {
  QuadraticExample ex{SymMatrix::diagonal({a}), Vector({c})};
  return Client::from_examples({{ex, 1.0}}, label);
}

}  // namespace

Population make_two_point() {
  return Population::from_clients({{scalar_client(1.0, 1.0, "client 1"), 0.5},
                                   {scalar_client(2.0, 0.5, "client 2"), 0.5}});
}

Population make_density_1d(int n_atoms) {
  require(n_atoms >= 2, ErrorCode::invalid_argument, "make_density_1d: n_atoms must be >= 2");
  const double lo = 0.5;
  const double hi = 2.0;
  const double h = (hi - lo) / n_atoms;
  std::vector<double> atoms(n_atoms);
  std::vector<double> weights(n_atoms);
  double total = 0.0;
  for (int j = 0; j < n_atoms; ++j) {
    atoms[j] = lo + (j + 0.5) * h;
    weights[j] = 8.0 * atoms[j] / 15.0;
    total += weights[j];
  }
  std::vector<std::pair<Client, double>> clients;
  clients.reserve(n_atoms);
  for (int j = 0; j < n_atoms; ++j) {
    std::ostringstream label;
    label << "atom " << j;
    clients.emplace_back(scalar_client(atoms[j], 1.0 / atoms[j], label.str()),
                         weights[j] / total);
  }
  // Guard against the normalized weights drifting off 1 by accumulated
  // rounding: fold the residual into the last atom.
  double sum = 0.0;
  for (const auto& [cl, w] : clients) sum += w;
  clients.back().second += 1.0 - sum;
  return Population::from_clients(std::move(clients));
}

Population make_synthetic(std::size_t dim, std::size_t n_clients, double mu, double l,
                          double center_spread, std::size_t examples_per_client,
                          std::uint64_t seed) {
  require(mu > 0.0 && mu <= l, ErrorCode::invalid_argument,
          "make_synthetic: need 0 < mu <= l");
  require(n_clients >= 1 && examples_per_client >= 1, ErrorCode::invalid_argument,
          "make_synthetic: need at least one client and one example");
  require(center_spread >= 0.0, ErrorCode::invalid_argument,
          "make_synthetic: center_spread must be nonnegative");

  Stream root(seed);
  std::vector<std::pair<Client, double>> clients;
  clients.reserve(n_clients);
  for (std::size_t i = 0; i < n_clients; ++i) {
    Stream s = root.child(i);
    SymMatrix a = random_spd(dim, mu, l, s);
    // Client centers and within-client example offsets share the spread
    // knob; spread 0 collapses every center to the origin (sigma_c = 0).
    Vector client_center(dim);
    for (std::size_t k = 0; k < dim; ++k) client_center[k] = center_spread * s.next_gaussian();

    std::vector<std::pair<QuadraticExample, double>> examples;
    const double p = 1.0 / static_cast<double>(examples_per_client);
    for (std::size_t e = 0; e < examples_per_client; ++e) {
      Vector c = client_center;
      for (std::size_t k = 0; k < dim; ++k) c[k] += center_spread * s.next_gaussian();
      examples.push_back({QuadraticExample{a, c}, p});
    }
    std::ostringstream label;
    label << "synthetic client " << i;
    clients.emplace_back(Client::from_examples(std::move(examples), label.str()),
                         1.0 / static_cast<double>(n_clients));
  }
  double sum = 0.0;
  for (const auto& [cl, w] : clients) sum += w;
  clients.back().second += 1.0 - sum;
  return Population::from_clients(std::move(clients));
}

std::string population_to_json(const Population& pop) {
  nlohmann::json doc;
  doc["dim"] = pop.dim();
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& [cl, w] : pop.clients()) {
    nlohmann::json jc;
    jc["weight"] = w;
    nlohmann::json exs = nlohmann::json::array();
    for (const auto& [ex, p] : cl.examples()) {
      nlohmann::json je;
      je["a"] = ex.a.upper();
      je["c"] = ex.c.entries();
      je["p"] = p;
      exs.push_back(std::move(je));
    }
    jc["examples"] = std::move(exs);
    clients.push_back(std::move(jc));
  }
  doc["clients"] = std::move(clients);
  return doc.dump(2);
}

Population population_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("population JSON parse error: ") + e.what());
  }
  try {
    const std::size_t dim = doc.at("dim").get<std::size_t>();
    std::vector<std::pair<Client, double>> clients;
    std::size_t idx = 0;
    for (const auto& jc : doc.at("clients")) {
      std::vector<std::pair<QuadraticExample, double>> examples;
      for (const auto& je : jc.at("examples")) {
        QuadraticExample ex{
            SymMatrix::from_upper(dim, je.at("a").get<std::vector<double>>()),
            Vector(je.at("c").get<std::vector<double>>())};
        examples.emplace_back(std::move(ex), je.at("p").get<double>());
      }
      std::ostringstream label;
      label << "client " << idx++;
      clients.emplace_back(Client::from_examples(std::move(examples), label.str()),
                           jc.at("weight").get<double>());
    }
    return Population::from_clients(std::move(clients));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, std::string("population JSON field error: ") + e.what());
  }
}

Population population_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open population file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return population_from_json(buf.str());
}

}  // namespace luq
