/* C ABI for the modid toolkit.
 *
 * Conventions:
 *   - every function returns a modid_status; MODID_OK (0) means success;
 *   - handles are opaque; create with *_new / *_load, release with *_free
 *     (freeing NULL is a no-op);
 *   - output buffers are caller-allocated, lengths passed explicitly;
 *   - on failure, modid_last_error_message() reads a thread-local message.
 */

#ifndef MODID_H
#define MODID_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum modid_status {
  MODID_OK = 0,
  MODID_ERR_INVALID_PARAMETER = 1,
  MODID_ERR_INVALID_ARCHITECTURE = 2,
  MODID_ERR_SHAPE = 3,
  MODID_ERR_DOMAIN = 4,
  MODID_ERR_STATE = 5,
  MODID_ERR_DEGENERATE_PROBES = 6,
  MODID_ERR_SINGULAR = 7,
  MODID_ERR_INVALID_PAIR = 8,
  MODID_ERR_CONVERGENCE = 9,
  MODID_ERR_INVALID_CONFIG = 10,
  MODID_ERR_IO = 11,
  MODID_ERR_JSON = 12,
  MODID_ERR_NULL_POINTER = 13,
  MODID_ERR_UTF8 = 14,
  MODID_ERR_PANIC = 15,
} modid_status;

/* Opaque handles. */
typedef struct ModidHill ModidHill;
typedef struct ModidMap ModidMap;
typedef struct ModidModel ModidModel;
typedef struct ModidRre ModidRre;

/* Diagnostics. Both return the full length; they truncate into buf and
 * NUL-terminate when buf is non-NULL. */
size_t modid_last_error_message(char *buf, size_t cap);
size_t modid_version(char *buf, size_t cap);

/* Hill regulatory functions. kind: 0 = activating, 1 = repressing. */
modid_status modid_hill_new(int kind, double amplitude, double half_point,
                            double coefficient, double basal, ModidHill **out);
modid_status modid_hill_eval(const ModidHill *hill, double u, double *out);
void modid_hill_free(ModidHill *hill);

/* Resource-sharing composition map G_i(y) = theta_i y_i / (1 + sum_j y_j). */
modid_status modid_map_new(const double *theta, size_t n, ModidMap **out);
modid_status modid_map_eval(const ModidMap *map, const double *y, size_t n,
                            double *out);
void modid_map_free(ModidMap *map);

/* Trained models saved by the trainer (checkpoint JSON). */
modid_status modid_model_load(const char *path, ModidModel **out);
modid_status modid_model_input_dim(const ModidModel *model, size_t *out);
modid_status modid_model_predict(const ModidModel *model, const double *u,
                                 size_t n_in, double *out, size_t n_out);
void modid_model_free(ModidModel *model);

/* Closed-form two-module identification.
 * theta: 2 entries; f1, f2: values at (probe 1, probe 2, anchor); g: the 8
 * composed outputs ordered G11_1, G21_1, G12_1, G22_1, G11_2, G21_2, G12_2,
 * G22_2; probes: u1_a, u1_b, u2_a, u2_b. */
modid_status modid_forward_map(const double *theta, const double *f1,
                               const double *f2, double *g_out);
modid_status modid_recover(const double *probes, const double *g,
                           double *theta_out, double *f1_out, double *f2_out);

/* Aliasing value f_hat with
 * theta_hat * f_hat/(1+f_hat) == theta * f/(1+f). */
modid_status modid_counterexample_transform(double theta, double theta_hat,
                                            double f_value, double *out);

/* Mass-action model of modules sharing a ribosome pool. */
modid_status modid_rre_default_single(ModidRre **out);
modid_status modid_rre_load(const char *path, ModidRre **out);
modid_status modid_rre_n_modules(const ModidRre *params, size_t *out);
/* method: 0 = explicit integration, 1 = damped root finding. */
modid_status modid_rre_steady_state(const ModidRre *params, const double *u,
                                    size_t n, int method, double *y_out);
void modid_rre_free(ModidRre *params);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MODID_H */
