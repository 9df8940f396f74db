#include "luq/config.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace luq {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& message) {
  fail(ErrorCode::config, "config: " + message);
}

const json& need(const json& j, const char* scope, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) {
    std::ostringstream os;
    os << "missing field '" << scope << field << "'";
    config_fail(os.str());
  }
  return *it;
}

template <typename T>
T get_as(const json& j, const char* scope, const char* field) {
  try {
    return need(j, scope, field).get<T>();
  } catch (const json::exception&) {
    std::ostringstream os;
    os << "field '" << scope << field << "' has the wrong type";
    config_fail(os.str());
  }
}

template <typename T>
T get_or(const json& j, const char* scope, const char* field, T fallback) {
  if (!j.contains(field)) return fallback;
  return get_as<T>(j, scope, field);
}

ProblemConfig parse_problem(const json& j) {
  ProblemConfig p;
  const std::string kind = get_as<std::string>(j, "problem.", "kind");
  if (kind == "two_point") {
    p.kind = ProblemConfig::Kind::two_point;
  } else if (kind == "density_1d") {
    p.kind = ProblemConfig::Kind::density_1d;
    p.n_atoms = get_as<int>(j, "problem.", "n_atoms");
  } else if (kind == "synthetic") {
    p.kind = ProblemConfig::Kind::synthetic;
    p.synthetic.dim = get_as<int>(j, "problem.", "dim");
    p.synthetic.n_clients = get_as<int>(j, "problem.", "n_clients");
    p.synthetic.mu = get_as<double>(j, "problem.", "mu");
    p.synthetic.l = get_as<double>(j, "problem.", "l");
    p.synthetic.center_spread = get_as<double>(j, "problem.", "center_spread");
    p.synthetic.examples_per_client = get_as<int>(j, "problem.", "examples_per_client");
    p.synthetic.seed = get_as<std::uint64_t>(j, "problem.", "seed");
  } else if (kind == "file") {
    p.kind = ProblemConfig::Kind::file;
    p.path = get_as<std::string>(j, "problem.", "path");
  } else {
    config_fail("field 'problem.kind' must be one of two_point, density_1d, synthetic, file");
  }
  return p;
}

json problem_to_json(const ProblemConfig& p) {
  json j;
  switch (p.kind) {
    case ProblemConfig::Kind::two_point:
      j["kind"] = "two_point";
      break;
    case ProblemConfig::Kind::density_1d:
      j["kind"] = "density_1d";
      j["n_atoms"] = p.n_atoms;
      break;
    case ProblemConfig::Kind::synthetic:
      j["kind"] = "synthetic";
      j["dim"] = p.synthetic.dim;
      j["n_clients"] = p.synthetic.n_clients;
      j["mu"] = p.synthetic.mu;
      j["l"] = p.synthetic.l;
      j["center_spread"] = p.synthetic.center_spread;
      j["examples_per_client"] = p.synthetic.examples_per_client;
      j["seed"] = p.synthetic.seed;
      break;
    case ProblemConfig::Kind::file:
      j["kind"] = "file";
      j["path"] = p.path;
      break;
  }
  return j;
}

ThetaConfig parse_theta(const json& j) {
  ThetaConfig t;
  const std::string kind = get_as<std::string>(j, "algorithm.theta.", "kind");
  if (kind == "fedavg") {
    t.kind = ThetaConfig::Kind::fedavg;
    t.k = get_as<int>(j, "algorithm.theta.", "k");
  } else if (kind == "fomaml") {
    t.kind = ThetaConfig::Kind::fomaml;
    t.k = get_as<int>(j, "algorithm.theta.", "k");
  } else if (kind == "maml") {
    t.kind = ThetaConfig::Kind::maml;
    t.k = get_as<int>(j, "algorithm.theta.", "k");
  } else if (kind == "custom") {
    t.kind = ThetaConfig::Kind::custom;
    t.weights = get_as<std::vector<double>>(j, "algorithm.theta.", "weights");
  } else {
    config_fail("field 'algorithm.theta.kind' must be one of fedavg, fomaml, maml, custom");
  }
  return t;
}

json theta_to_json(const ThetaConfig& t) {
  json j;
  switch (t.kind) {
    case ThetaConfig::Kind::fedavg:
      j["kind"] = "fedavg";
      j["k"] = t.k;
      break;
    case ThetaConfig::Kind::fomaml:
      j["kind"] = "fomaml";
      j["k"] = t.k;
      break;
    case ThetaConfig::Kind::maml:
      j["kind"] = "maml";
      j["k"] = t.k;
      break;
    case ThetaConfig::Kind::custom:
      j["kind"] = "custom";
      j["weights"] = t.weights;
      break;
  }
  return j;
}

Schedule parse_eta(const json& j) {
  const std::string kind = get_as<std::string>(j, "algorithm.eta.", "kind");
  if (kind == "constant") return Schedule::constant(get_as<double>(j, "algorithm.eta.", "value"));
  if (kind == "inverse_time")
    return Schedule::inverse_time(get_as<double>(j, "algorithm.eta.", "a"),
                                  get_as<double>(j, "algorithm.eta.", "b"));
  if (kind == "fixed_client_decaying_server") {
    std::optional<double> a, b;
    if (j.contains("a_gamma")) a = get_as<double>(j, "algorithm.eta.", "a_gamma");
    if (j.contains("b_gamma")) b = get_as<double>(j, "algorithm.eta.", "b_gamma");
    return Schedule::fixed_client_decaying_server(a, b);
  }
  if (kind == "joint") {
    std::optional<double> b;
    if (j.contains("b")) b = get_as<double>(j, "algorithm.eta.", "b");
    return Schedule::joint(b);
  }
  config_fail(
      "field 'algorithm.eta.kind' must be one of constant, inverse_time, "
      "fixed_client_decaying_server, joint");
}

json eta_to_json(const Schedule& s) {
  json j;
  switch (s.kind) {
    case Schedule::Kind::constant:
      j["kind"] = "constant";
      j["value"] = s.value;
      break;
    case Schedule::Kind::inverse_time:
      j["kind"] = "inverse_time";
      j["a"] = s.a;
      j["b"] = s.b;
      break;
    case Schedule::Kind::fixed_client_decaying_server:
      j["kind"] = "fixed_client_decaying_server";
      if (s.a_gamma) j["a_gamma"] = *s.a_gamma;
      if (s.b_gamma) j["b_gamma"] = *s.b_gamma;
      break;
    case Schedule::Kind::joint:
      j["kind"] = "joint";
      if (s.joint_b) j["b"] = *s.joint_b;
      break;
  }
  return j;
}

SweepConfig parse_sweep(const json& j) {
  SweepConfig s;
  const std::string axis = get_as<std::string>(j, "sweep.", "axis");
  if (axis == "gamma") {
    s.axis = SweepConfig::Axis::gamma;
    s.gamma_values = get_as<std::vector<double>>(j, "sweep.", "values");
    if (s.gamma_values.empty()) config_fail("field 'sweep.values' must be a nonempty list");
  } else if (axis == "k") {
    s.axis = SweepConfig::Axis::k;
    s.k_values = get_as<std::vector<int>>(j, "sweep.", "values");
    if (s.k_values.empty()) config_fail("field 'sweep.values' must be a nonempty list");
  } else {
    config_fail("field 'sweep.axis' must be 'gamma' or 'k'");
  }
  return s;
}

json sweep_to_json(const SweepConfig& s) {
  json j;
  if (s.axis == SweepConfig::Axis::gamma) {
    j["axis"] = "gamma";
    j["values"] = s.gamma_values;
  } else {
    j["axis"] = "k";
    j["values"] = s.k_values;
  }
  return j;
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_fail(std::string("JSON parse error: ") + e.what());
  }

  RunConfig cfg;
  cfg.problem = parse_problem(need(doc, "", "problem"));
  const json& alg = need(doc, "", "algorithm");
  cfg.theta = parse_theta(need(alg, "algorithm.", "theta"));
  cfg.gamma = get_as<double>(alg, "algorithm.", "gamma");
  cfg.eta = parse_eta(need(alg, "algorithm.", "eta"));

  if (alg.contains("server")) {
    const json& srv = alg["server"];
    const std::string kind = get_as<std::string>(srv, "algorithm.server.", "kind");
    if (kind == "sgd") {
      cfg.server = ServerOptimizer::sgd;
    } else if (kind == "yogi") {
      cfg.server = ServerOptimizer::yogi;
      cfg.yogi.beta1 = get_or<double>(srv, "algorithm.server.", "beta1", cfg.yogi.beta1);
      cfg.yogi.beta2 = get_or<double>(srv, "algorithm.server.", "beta2", cfg.yogi.beta2);
      cfg.yogi.eps = get_or<double>(srv, "algorithm.server.", "eps", cfg.yogi.eps);
    } else {
      config_fail("field 'algorithm.server.kind' must be 'sgd' or 'yogi'");
    }
  }

  const std::string mode = get_or<std::string>(alg, "algorithm.", "mode", "gradient_sum");
  if (mode == "gradient_sum") {
    cfg.mode = UpdateMode::gradient_sum;
  } else if (mode == "model_delta") {
    cfg.mode = UpdateMode::model_delta;
  } else {
    config_fail("field 'algorithm.mode' must be 'gradient_sum' or 'model_delta'");
  }

  cfg.clients_per_round = get_as<int>(alg, "algorithm.", "clients_per_round");
  cfg.batch_size = get_or<int>(alg, "algorithm.", "batch_size", 1);
  cfg.rounds = get_as<int>(alg, "algorithm.", "rounds");

  if (alg.contains("x0")) {
    const json& x0 = alg["x0"];
    if (x0.is_number()) {
      cfg.x0 = x0.get<double>();
    } else if (x0.is_array()) {
      cfg.x0 = x0.get<std::vector<double>>();
    } else {
      config_fail("field 'algorithm.x0' must be a number or an array");
    }
  }

  if (doc.contains("decay")) {
    const json& d = doc["decay"];
    DecayConfig dc;
    dc.delta = get_as<double>(d, "decay.", "delta");
    dc.alpha = get_as<double>(d, "decay.", "alpha");
    dc.beta = get_as<double>(d, "decay.", "beta");
    dc.window = get_as<int>(d, "decay.", "window");
    dc.patience = get_as<int>(d, "decay.", "patience");
    dc.cooldown = get_as<int>(d, "decay.", "cooldown");
    try {
      dc.validate();
    } catch (const Error& e) {
      config_fail(e.what());
    }
    cfg.decay = dc;
  }

  if (doc.contains("sweep")) cfg.sweep = parse_sweep(doc["sweep"]);

  cfg.master_seed = get_as<std::uint64_t>(doc, "", "master_seed");
  cfg.output = get_or<std::string>(doc, "", "output", cfg.output);

  // Cross-field validation with named fields.
  if (cfg.gamma < 0.0) config_fail("field 'algorithm.gamma' must be >= 0");
  if (cfg.clients_per_round < 1) config_fail("field 'algorithm.clients_per_round' must be >= 1");
  if (cfg.batch_size < 1) config_fail("field 'algorithm.batch_size' must be >= 1");
  if (cfg.rounds < 0) config_fail("field 'algorithm.rounds' must be >= 0");
  if (cfg.theta.kind != ThetaConfig::Kind::custom && cfg.theta.k < 1)
    config_fail("field 'algorithm.theta.k' must be >= 1");
  if (cfg.decay && cfg.eta.kind != Schedule::Kind::constant)
    config_fail("decay runs require 'algorithm.eta.kind' == 'constant'");
  try {
    build_theta(cfg.theta);
  } catch (const Error& e) {
    config_fail(std::string("field 'algorithm.theta': ") + e.what());
  }
  return cfg;
}

RunConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json doc;
  doc["problem"] = problem_to_json(cfg.problem);
  json alg;
  alg["theta"] = theta_to_json(cfg.theta);
  alg["gamma"] = cfg.gamma;
  alg["eta"] = eta_to_json(cfg.eta);
  json srv;
  if (cfg.server == ServerOptimizer::sgd) {
    srv["kind"] = "sgd";
  } else {
    srv["kind"] = "yogi";
    srv["beta1"] = cfg.yogi.beta1;
    srv["beta2"] = cfg.yogi.beta2;
    srv["eps"] = cfg.yogi.eps;
  }
  alg["server"] = srv;
  alg["mode"] = cfg.mode == UpdateMode::gradient_sum ? "gradient_sum" : "model_delta";
  alg["clients_per_round"] = cfg.clients_per_round;
  alg["batch_size"] = cfg.batch_size;
  alg["rounds"] = cfg.rounds;
  if (cfg.x0) {
    if (std::holds_alternative<double>(*cfg.x0)) {
      alg["x0"] = std::get<double>(*cfg.x0);
    } else {
      alg["x0"] = std::get<std::vector<double>>(*cfg.x0);
    }
  }
  doc["algorithm"] = alg;
  if (cfg.decay) {
    json d;
    d["delta"] = cfg.decay->delta;
    d["alpha"] = cfg.decay->alpha;
    d["beta"] = cfg.decay->beta;
    d["window"] = cfg.decay->window;
    d["patience"] = cfg.decay->patience;
    d["cooldown"] = cfg.decay->cooldown;
    doc["decay"] = d;
  }
  if (cfg.sweep) doc["sweep"] = sweep_to_json(*cfg.sweep);
  doc["master_seed"] = cfg.master_seed;
  doc["output"] = cfg.output;
  return doc.dump(2);
}

Population build_population(const ProblemConfig& cfg) {
  switch (cfg.kind) {
    case ProblemConfig::Kind::two_point:
      return make_two_point();
    case ProblemConfig::Kind::density_1d:
      return make_density_1d(cfg.n_atoms);
    case ProblemConfig::Kind::synthetic:
      return make_synthetic(cfg.synthetic.dim, cfg.synthetic.n_clients, cfg.synthetic.mu,
                            cfg.synthetic.l, cfg.synthetic.center_spread,
                            cfg.synthetic.examples_per_client, cfg.synthetic.seed);
    case ProblemConfig::Kind::file:
      return population_from_file(cfg.path);
  }
  fail(ErrorCode::config, "config: unknown problem kind");
}

ThetaWeights build_theta(const ThetaConfig& cfg) {
  switch (cfg.kind) {
    case ThetaConfig::Kind::fedavg:
      return ThetaWeights::fedavg(cfg.k);
    case ThetaConfig::Kind::fomaml:
      return ThetaWeights::fomaml(cfg.k);
    case ThetaConfig::Kind::maml:
      return ThetaWeights::maml_equiv(cfg.k);
    case ThetaConfig::Kind::custom:
      return ThetaWeights::custom(cfg.weights);
  }
  fail(ErrorCode::config, "config: unknown theta kind");
}

RunSpec build_run_spec(const RunConfig& cfg, const Population& pop, int n_threads,
                       std::optional<std::uint64_t> seed_override, bool quiet) {
  RunSpec spec;
  spec.theta = build_theta(cfg.theta);
  spec.gamma = cfg.gamma;
  spec.schedule = cfg.eta;
  spec.optimizer = cfg.server;
  spec.mode = cfg.mode;
  spec.yogi = cfg.yogi;
  spec.clients_per_round = cfg.clients_per_round;
  spec.batch_size = cfg.batch_size;
  spec.rounds = cfg.rounds;
  spec.master_seed = seed_override.value_or(cfg.master_seed);
  spec.n_threads = std::max(1, n_threads);
  if (cfg.theta.kind == ThetaConfig::Kind::maml) spec.maml_k = cfg.theta.k;

  if (static_cast<std::size_t>(cfg.clients_per_round) > pop.size()) {
    std::ostringstream os;
    os << "config: field 'algorithm.clients_per_round' (" << cfg.clients_per_round
       << ") exceeds the population size (" << pop.size() << ")";
    fail(ErrorCode::config, os.str());
  }

  if (!cfg.x0) {
    spec.x0 = Vector(pop.dim());
  } else if (std::holds_alternative<double>(*cfg.x0)) {
    spec.x0 = Vector(pop.dim(), std::get<double>(*cfg.x0));
  } else {
    const auto& v = std::get<std::vector<double>>(*cfg.x0);
    if (v.size() != pop.dim()) {
      std::ostringstream os;
      os << "config: field 'algorithm.x0' has length " << v.size()
         << " but the problem dimension is " << pop.dim();
      fail(ErrorCode::config, os.str());
    }
    spec.x0 = Vector(v);
  }
  require(spec.x0.all_finite(), ErrorCode::config, "config: field 'algorithm.x0' must be finite");

  // Descent-lemma cap: warn (not reject) when a constant server step exceeds
  // mu_gamma / L_gamma^2.
  if (cfg.eta.kind == Schedule::Kind::constant && !cfg.decay && !quiet) {
    const auto [mu_g, l_g] =
        smoothness_params(pop.mu(), pop.lipschitz(), cfg.gamma, spec.theta.k());
    if (mu_g > 0.0 && cfg.eta.value > mu_g / (l_g * l_g)) {
      std::cerr << "warning: constant server learning rate " << cfg.eta.value
                << " exceeds the descent-lemma cap mu_gamma/L_gamma^2 = "
                << mu_g / (l_g * l_g) << "\n";
    }
  }
  return spec;
}

}  // namespace luq
