#include "luq.h"

#include <cstring>
#include <string>

#include "luq/harness.hpp"
#include "luq/verify.hpp"

namespace {

thread_local std::string g_last_error;

luq_status code_to_status(luq::ErrorCode code) {
  using luq::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument:
      return LUQ_ERROR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch:
      return LUQ_ERROR_DIMENSION_MISMATCH;
    case ErrorCode::singular_matrix:
      return LUQ_ERROR_SINGULAR_MATRIX;
    case ErrorCode::regime_violation:
      return LUQ_ERROR_REGIME;
    case ErrorCode::no_convergence:
      return LUQ_ERROR_NO_CONVERGENCE;
    case ErrorCode::config:
      return LUQ_ERROR_CONFIG;
    case ErrorCode::io:
      return LUQ_ERROR_IO;
    case ErrorCode::verify_failed:
      return LUQ_ERROR_VERIFY_FAILED;
  }
  return LUQ_ERROR_INTERNAL;
}

template <typename Fn>
luq_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const luq::Error& e) {
    g_last_error = e.what();
    return code_to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LUQ_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LUQ_ERROR_INTERNAL;
  }
}

char* duplicate(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

luq::RunOptions to_options(const luq_run_options* opts) {
  luq::RunOptions out;
  if (opts) {
    if (opts->output_path) out.output_override = opts->output_path;
    if (opts->has_seed) out.seed_override = opts->seed;
    out.n_threads = opts->n_threads > 0 ? opts->n_threads : 1;
    out.quiet = opts->quiet != 0;
  }
  return out;
}

luq_status copy_vector(const luq::Vector& v, double* out, size_t dim) {
  luq::require(out != nullptr, luq::ErrorCode::invalid_argument, "out must not be null");
  luq::require(dim == v.dim(), luq::ErrorCode::dimension_mismatch,
               "output buffer length does not match the problem dimension");
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i];
  return LUQ_OK;
}

luq::ThetaWeights theta_from(const double* theta, size_t theta_len) {
  luq::require(theta != nullptr && theta_len > 0, luq::ErrorCode::invalid_argument,
               "theta must be a nonempty array");
  return luq::ThetaWeights::custom(std::vector<double>(theta, theta + theta_len));
}

}  // namespace

struct luq_population {
  luq::Population value;
};

extern "C" {

const char* luq_error_message(void) { return g_last_error.c_str(); }

void luq_string_free(char* s) { delete[] s; }

luq_status luq_population_two_point(luq_population** out) {
  return guarded([&]() {
    luq::require(out != nullptr, luq::ErrorCode::invalid_argument, "out must not be null");
    *out = new luq_population{luq::make_two_point()};
    return LUQ_OK;
  });
}

luq_status luq_population_density_1d(int n_atoms, luq_population** out) {
  return guarded([&]() {
    luq::require(out != nullptr, luq::ErrorCode::invalid_argument, "out must not be null");
    *out = new luq_population{luq::make_density_1d(n_atoms)};
    return LUQ_OK;
  });
}

luq_status luq_population_synthetic(int dim, int n_clients, double mu, double l,
                                    double center_spread, int examples_per_client,
                                    uint64_t seed, luq_population** out) {
  return guarded([&]() {
    luq::require(out != nullptr, luq::ErrorCode::invalid_argument, "out must not be null");
    luq::require(dim >= 1 && n_clients >= 1 && examples_per_client >= 1,
                 luq::ErrorCode::invalid_argument,
                 "dim, n_clients, examples_per_client must be >= 1");
    *out = new luq_population{luq::make_synthetic(
        static_cast<std::size_t>(dim), static_cast<std::size_t>(n_clients), mu, l,
        center_spread, static_cast<std::size_t>(examples_per_client), seed)};
    return LUQ_OK;
  });
}

luq_status luq_population_from_json(const char* text, luq_population** out) {
  return guarded([&]() {
    luq::require(text != nullptr && out != nullptr, luq::ErrorCode::invalid_argument,
                 "text and out must not be null");
    *out = new luq_population{luq::population_from_json(text)};
    return LUQ_OK;
  });
}

luq_status luq_population_to_json(const luq_population* pop, char** out_text) {
  return guarded([&]() {
    luq::require(pop != nullptr && out_text != nullptr, luq::ErrorCode::invalid_argument,
                 "pop and out_text must not be null");
    *out_text = duplicate(luq::population_to_json(pop->value));
    return LUQ_OK;
  });
}

void luq_population_free(luq_population* pop) { delete pop; }

luq_status luq_population_stats(const luq_population* pop, luq_population_info* out) {
  return guarded([&]() {
    luq::require(pop != nullptr && out != nullptr, luq::ErrorCode::invalid_argument,
                 "pop and out must not be null");
    out->dim = static_cast<int>(pop->value.dim());
    out->n_clients = static_cast<int>(pop->value.size());
    out->mu = pop->value.mu();
    out->lipschitz = pop->value.lipschitz();
    out->curvature_spread_sq = pop->value.curvature_spread_sq();
    out->center_spread_sq = pop->value.center_spread_sq();
    out->grad_noise_sq = pop->value.gradient_noise_sq().value_or(-1.0);
    return LUQ_OK;
  });
}

luq_status luq_population_minimizer(const luq_population* pop, double* out, size_t dim) {
  return guarded([&]() {
    luq::require(pop != nullptr, luq::ErrorCode::invalid_argument, "pop must not be null");
    return copy_vector(pop->value.minimizer(), out, dim);
  });
}

luq_status luq_population_mean_center(const luq_population* pop, double* out, size_t dim) {
  return guarded([&]() {
    luq::require(pop != nullptr, luq::ErrorCode::invalid_argument, "pop must not be null");
    return copy_vector(luq::asymptotic_minimizer(pop->value), out, dim);
  });
}

double luq_phi(int k, double lambda, double gamma) { return luq::phi(k, lambda, gamma); }

luq_status luq_surrogate_minimizer(const luq_population* pop, double gamma,
                                   const double* theta, size_t theta_len, double* out,
                                   size_t dim) {
  return guarded([&]() {
    luq::require(pop != nullptr, luq::ErrorCode::invalid_argument, "pop must not be null");
    return copy_vector(
        luq::surrogate_minimizer(pop->value, gamma, theta_from(theta, theta_len)), out, dim);
  });
}

luq_status luq_distance_bound_general(const luq_population* pop, double gamma,
                                      const double* theta, size_t theta_len,
                                      double* out_value, int* out_bounded) {
  return guarded([&]() {
    luq::require(pop != nullptr && out_value != nullptr && out_bounded != nullptr,
                 luq::ErrorCode::invalid_argument, "pop and outputs must not be null");
    const auto bound =
        luq::distance_bound_general(pop->value, gamma, theta_from(theta, theta_len));
    *out_bounded = bound.has_value() ? 1 : 0;
    *out_value = bound.value_or(0.0);
    return LUQ_OK;
  });
}

luq_status luq_distance_bound_fedavg(const luq_population* pop, double gamma, int k,
                                     double* out_value, int* out_bounded) {
  return guarded([&]() {
    luq::require(pop != nullptr && out_value != nullptr && out_bounded != nullptr,
                 luq::ErrorCode::invalid_argument, "pop and outputs must not be null");
    const auto bound = luq::distance_bound_fedavg(pop->value, gamma, k);
    *out_bounded = bound.has_value() ? 1 : 0;
    *out_value = bound.value_or(0.0);
    return LUQ_OK;
  });
}

luq_status luq_run_json(const char* config_text, const luq_run_options* opts) {
  return guarded([&]() {
    luq::require(config_text != nullptr, luq::ErrorCode::invalid_argument,
                 "config_text must not be null");
    const luq::RunConfig cfg = luq::config_from_json(config_text);
    luq::execute_run(cfg, to_options(opts));
    return LUQ_OK;
  });
}

luq_status luq_sweep_json(const char* config_text, const luq_run_options* opts) {
  return guarded([&]() {
    luq::require(config_text != nullptr, luq::ErrorCode::invalid_argument,
                 "config_text must not be null");
    const luq::RunConfig cfg = luq::config_from_json(config_text);
    luq::execute_sweep(cfg, to_options(opts));
    return LUQ_OK;
  });
}

luq_status luq_verify(const char* suite, uint64_t seed, int n_threads, char** report_out) {
  return guarded([&]() {
    luq::require(suite != nullptr, luq::ErrorCode::invalid_argument, "suite must not be null");
    const auto reports = luq::run_verify(suite, seed, n_threads);
    if (report_out) *report_out = duplicate(luq::format_report(reports));
    if (!luq::reports_all_pass(reports)) {
      g_last_error = "verification failed";
      return LUQ_ERROR_VERIFY_FAILED;
    }
    return LUQ_OK;
  });
}

luq_status luq_verify_suites(char** out_text) {
  return guarded([&]() {
    luq::require(out_text != nullptr, luq::ErrorCode::invalid_argument,
                 "out_text must not be null");
    std::string joined;
    for (const auto& name : luq::verify_suite_names()) {
      joined += name;
      joined += '\n';
    }
    *out_text = duplicate(joined);
    return LUQ_OK;
  });
}

}  // extern "C"
