/* C interface to the MO-PINN experiment runner.
 *
 * All functions return MOPINN_OK on success; on failure they return an
 * error code and leave a message retrievable via mopinn_last_error().
 * Handles are opaque and must be released with the matching destroy call.
 */
#ifndef MOPINN_H
#define MOPINN_H

#ifdef __cplusplus
extern "C" {
#endif

enum {
  MOPINN_OK = 0,
  MOPINN_ERR_CONFIG = 2,  /* bad experiment id, key, value, or file */
  MOPINN_ERR_NUMERIC = 3  /* non-finite loss or parameters during training */
};

typedef struct mopinn_experiment mopinn_experiment;

/* Experiment ids: linear1d_forward, nonlinear1d_forward, allen_cahn_2d,
 * inverse1d, inverse2d, fem_compare, prior_augmented. Returns NULL on an
 * unknown id. */
mopinn_experiment* mopinn_experiment_create(const char* experiment_id);
void mopinn_experiment_destroy(mopinn_experiment* exp);

/* Keys: noise (case1|case2), seed, init_seed, outputs, epochs,
 * deterministic (0|1), paper_scale (0|1), ensemble, out, prior. */
int mopinn_experiment_set(mopinn_experiment* exp, const char* key,
                          const char* value);

/* Runs the experiment and writes all artifacts into the configured output
 * directory. When manifest_json is non-NULL it receives a malloc'd JSON
 * string (release with mopinn_free). */
int mopinn_experiment_run(mopinn_experiment* exp, char** manifest_json);

/* Pairs empirical quantiles (10%..100%) of two ensemble CSV files at their
 * common evaluation points and writes a QQ CSV. */
int mopinn_qq_files(const char* ensemble_csv_a, const char* ensemble_csv_b,
                    const char* out_csv);

const char* mopinn_last_error(void);
void mopinn_free(char* ptr);
const char* mopinn_version(void);

#ifdef __cplusplus
}
#endif

#endif /* MOPINN_H */
