/* C API for the luq local-update optimization laboratory.
 *
 * All entry points return a luq_status; LUQ_OK is 0. On failure,
 * luq_error_message() returns a thread-local description of the last error.
 * Objects returned through out-parameters are owned by the caller and
 * released with the matching _free function.
 */
#ifndef LUQ_H
#define LUQ_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum luq_status {
  LUQ_OK = 0,
  LUQ_ERROR_INVALID_ARGUMENT = 1,
  LUQ_ERROR_CONFIG = 2,
  LUQ_ERROR_IO = 3,
  LUQ_ERROR_VERIFY_FAILED = 4,
  LUQ_ERROR_DIMENSION_MISMATCH = 5,
  LUQ_ERROR_SINGULAR_MATRIX = 6,
  LUQ_ERROR_REGIME = 7,
  LUQ_ERROR_NO_CONVERGENCE = 8,
  LUQ_ERROR_INTERNAL = 9
} luq_status;

/* Thread-local message for the most recent failure in this thread. */
const char* luq_error_message(void);

/* Frees strings allocated by this library. */
void luq_string_free(char* s);

/* ----- populations (opaque) ---------------------------------------------- */

typedef struct luq_population luq_population;

luq_status luq_population_two_point(luq_population** out);
luq_status luq_population_density_1d(int n_atoms, luq_population** out);
luq_status luq_population_synthetic(int dim, int n_clients, double mu, double l,
                                    double center_spread, int examples_per_client,
                                    uint64_t seed, luq_population** out);
luq_status luq_population_from_json(const char* text, luq_population** out);
luq_status luq_population_to_json(const luq_population* pop, char** out_text);
void luq_population_free(luq_population* pop);

typedef struct luq_population_info {
  int dim;
  int n_clients;
  double mu;
  double lipschitz;
  double curvature_spread_sq; /* sigma_A^2 */
  double center_spread_sq;    /* sigma_c^2 */
  double grad_noise_sq;       /* G^2; negative when undefined */
} luq_population_info;

luq_status luq_population_stats(const luq_population* pop, luq_population_info* out);
/* Writes the true minimizer (dim entries) into out. */
luq_status luq_population_minimizer(const luq_population* pop, double* out, size_t dim);
/* Writes the average client center (the K -> infinity limit point). */
luq_status luq_population_mean_center(const luq_population* pop, double* out, size_t dim);

/* ----- closed forms ------------------------------------------------------- */

/* Eigenvalue map of the K-step gradient-sum curvature; phi(k, lambda, 0) = k*lambda. */
double luq_phi(int k, double lambda, double gamma);

/* Surrogate minimizer for theta weights theta[0..theta_len). */
luq_status luq_surrogate_minimizer(const luq_population* pop, double gamma,
                                   const double* theta, size_t theta_len, double* out,
                                   size_t dim);

/* Distance bounds; *out_bounded is 0 when the bound is unbounded. */
luq_status luq_distance_bound_general(const luq_population* pop, double gamma,
                                      const double* theta, size_t theta_len,
                                      double* out_value, int* out_bounded);
luq_status luq_distance_bound_fedavg(const luq_population* pop, double gamma, int k,
                                     double* out_value, int* out_bounded);

/* ----- experiments -------------------------------------------------------- */

typedef struct luq_run_options {
  const char* output_path; /* NULL keeps the config's output path */
  uint64_t seed;           /* master seed override, honored when has_seed != 0 */
  int has_seed;
  int n_threads; /* parallel client workers per round; <= 1 is sequential */
  int quiet;
} luq_run_options;

/* Executes the JSON experiment config (see README for the schema) and writes
 * the metrics CSV. Divergence is recorded in the output, not an error. */
luq_status luq_run_json(const char* config_text, const luq_run_options* opts);

/* Runs the config's sweep block: one run per grid point sharing the master
 * seed; writes the combined CSV and a converged-point summary. */
luq_status luq_sweep_json(const char* config_text, const luq_run_options* opts);

/* ----- verification ------------------------------------------------------- */

/* Runs one named invariant suite, or all of them for "all". The report (one
 * "PASS|FAIL suite.check observed bound" line per check) is returned through
 * report_out when non-NULL. Returns LUQ_ERROR_VERIFY_FAILED when any check
 * fails. */
luq_status luq_verify(const char* suite, uint64_t seed, int n_threads, char** report_out);

/* Newline-joined list of the registered suite names. */
luq_status luq_verify_suites(char** out_text);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* LUQ_H */
