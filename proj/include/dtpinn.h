/* C interface to the dtpinn toolkit. All functions return a status code
 * (DTPINN_OK on success); on failure dtpinn_last_error() carries a
 * thread-local message. Objects are opaque handles owned by the caller and
 * released with the matching _free function. */
#ifndef DTPINN_H
#define DTPINN_H

#include <stddef.h>

#if defined(_WIN32)
#define DTPINN_API __declspec(dllexport)
#else
#define DTPINN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    DTPINN_OK = 0,
    DTPINN_ERR_INVALID_ARGUMENT = 1,
    DTPINN_ERR_IO = 2,
    DTPINN_ERR_SINGULAR = 3,
    DTPINN_ERR_LINE_SEARCH = 4,
    DTPINN_ERR_INTERNAL = 5,
};

DTPINN_API const char* dtpinn_version(void);
DTPINN_API const char* dtpinn_status_name(int status);
/* Message from the most recent failing call on this thread; empty after a
 * successful call. The pointer stays valid until the next call. */
DTPINN_API const char* dtpinn_last_error(void);

/* ------------------------------------------------------------------ nodes */

typedef struct dtpinn_cloud dtpinn_cloud;

/* shape is "disk" or "star"; star_petals/star_amplitude are ignored for the
 * disk. Ghost points are included. */
DTPINN_API int dtpinn_cloud_generate(const char* shape, int star_petals,
                                     double star_amplitude, int target_n,
                                     unsigned long long seed,
                                     dtpinn_cloud** out);
DTPINN_API int dtpinn_cloud_read(const char* path, dtpinn_cloud** out);
DTPINN_API int dtpinn_cloud_write(const dtpinn_cloud* cloud, const char* path);
DTPINN_API int dtpinn_cloud_counts(const dtpinn_cloud* cloud,
                                   long long* n_interior, long long* n_boundary,
                                   long long* n_ghost);
DTPINN_API int dtpinn_cloud_spacing(const dtpinn_cloud* cloud, double* spacing);
/* Copies interior, boundary, then ghost coordinates as x,y pairs; capacity is
 * the number of doubles xy can hold (>= 2 * total point count). */
DTPINN_API int dtpinn_cloud_points(const dtpinn_cloud* cloud, double* xy,
                                   long long capacity);
DTPINN_API void dtpinn_cloud_free(dtpinn_cloud* cloud);

/* --------------------------------------------------------------- matrices */

typedef struct dtpinn_matrix dtpinn_matrix;

/* op is "laplacian", "robin", or "biharmonic"; p in [2, 5]. Robin rows use
 * alpha * d/dn + beta. Columns span interior + boundary + ghost. */
DTPINN_API int dtpinn_matrix_assemble(const dtpinn_cloud* cloud, const char* op,
                                      int p, double alpha, double beta,
                                      dtpinn_matrix** out);
DTPINN_API int dtpinn_matrix_shape(const dtpinn_matrix* matrix, long long* rows,
                                   long long* cols, long long* nnz);
/* y := M x with x_len == cols and y_len == rows. */
DTPINN_API int dtpinn_matrix_spmv(const dtpinn_matrix* matrix, const double* x,
                                  long long x_len, double* y, long long y_len);
DTPINN_API int dtpinn_matrix_write(const dtpinn_matrix* matrix,
                                   const char* path);
DTPINN_API int dtpinn_matrix_read(const char* path, dtpinn_matrix** out);
DTPINN_API void dtpinn_matrix_free(dtpinn_matrix* matrix);

/* --------------------------------------------------------------- training */

typedef struct dtpinn_train_summary {
    double best_error;
    long long best_epoch;
    long long epochs_run;
    double assembly_seconds;
    double total_seconds;
    double final_loss;
    char stop_reason[32];
} dtpinn_train_summary;

/* config_json is a JSON object; unknown keys are rejected. Keys (all
 * optional): pde (linear-poisson | nonlinear-poisson | heat), mode
 * (dt | vanilla), p, precision (fp32 | fp64), n, seed, n_t, shape
 * (disk | star), star_petals, star_amplitude, width, layers, alpha, beta,
 * error_every, stop_error, test_refine, lbfgs.history, lbfgs.lr,
 * lbfgs.max_epochs, lbfgs.wolfe_c1, lbfgs.wolfe_c2, nodes_in, nodes_out,
 * checkpoint_in, checkpoint_out.
 *
 * Writes record.csv and summary.json into out_dir (skipped when out_dir is
 * NULL or empty) and fills *summary if non-NULL. */
DTPINN_API int dtpinn_train_run(const char* config_json, const char* out_dir,
                                dtpinn_train_summary* summary);

/* study_id as in the study CLI: depth, biharmonic, linear-poisson,
 * nonlinear-poisson, heat, star, fp32-dt. Writes per-run artifacts and
 * report.json into out_dir. */
DTPINN_API int dtpinn_study_run(const char* study_id, const char* config_json,
                                const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
