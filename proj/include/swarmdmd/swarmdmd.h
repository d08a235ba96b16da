#ifndef SWARMDMD_H
#define SWARMDMD_H

/* C interface to the swarm interaction-model library.
 *
 * Every function returns an sdmd_status. On failure the thread-local message
 * from sdmd_last_error() describes the problem. Handles are opaque and owned
 * by the caller; free each with the matching *_free function (NULL is
 * accepted). Output handles are only written on success.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SDMD_API __declspec(dllexport)
#else
#define SDMD_API __attribute__((visibility("default")))
#endif

typedef enum sdmd_status {
    SDMD_OK = 0,
    SDMD_INVALID_ARGUMENT = 1,
    SDMD_CONFIG = 2,
    SDMD_IO = 3,
    SDMD_NUMERICS = 4,
    SDMD_INTERNAL = 5
} sdmd_status;

typedef struct sdmd_config sdmd_config;
typedef struct sdmd_trajectory sdmd_trajectory;
typedef struct sdmd_model sdmd_model;
typedef struct sdmd_suite sdmd_suite;

SDMD_API const char* sdmd_version(void);
SDMD_API const char* sdmd_status_name(sdmd_status status);
/* Message for the last failing call on this thread; "" after a success. */
SDMD_API const char* sdmd_last_error(void);

/* ---- experiment configuration ---- */

/* Loads an INI experiment file; relative paths resolve against its directory. */
SDMD_API sdmd_status sdmd_config_load(const char* path, sdmd_config** out);
/* Default configuration for scenario "standard" or "milling". */
SDMD_API sdmd_status sdmd_config_default(const char* scenario, sdmd_config** out);
/* Overrides one key, e.g. ("params", "seed", "3"). Derived defaults are
 * recomputed and the result is validated; on failure the config is unchanged. */
SDMD_API sdmd_status sdmd_config_set(sdmd_config* config, const char* section, const char* key, const char* value);
/* Writes the fully resolved configuration as INI text. */
SDMD_API sdmd_status sdmd_config_write(const sdmd_config* config, const char* path);
/* Copies the resolved INI text into buf (NUL-terminated, truncated to
 * buf_size). *required receives the full length including the terminator. */
SDMD_API sdmd_status sdmd_config_text(const sdmd_config* config, char* buf, size_t buf_size, size_t* required);
SDMD_API void sdmd_config_free(sdmd_config* config);

/* ---- trajectories ---- */

typedef struct sdmd_trajectory_info {
    size_t n_snapshots;
    size_t n_agents;
    double dt;
    double start_time;
} sdmd_trajectory_info;

/* Raw simulation (warmup + train + predict seconds, no preprocessing). */
SDMD_API sdmd_status sdmd_simulate(const sdmd_config* config, sdmd_trajectory** out);
/* Ground truth as used by the experiment: warmup removed, times rebased to 0,
 * interpolated and subsampled as configured. */
SDMD_API sdmd_status sdmd_prepare_ground_truth(const sdmd_config* config, sdmd_trajectory** out);

SDMD_API sdmd_status sdmd_trajectory_load(const char* path, sdmd_trajectory** out);
SDMD_API sdmd_status sdmd_trajectory_save(const sdmd_trajectory* traj, const char* path);
SDMD_API sdmd_status sdmd_trajectory_info_get(const sdmd_trajectory* traj, sdmd_trajectory_info* info);
/* Snapshot k into caller buffers of n_agents doubles each (any may be NULL). */
SDMD_API sdmd_status sdmd_trajectory_snapshot(const sdmd_trajectory* traj, size_t k, double* time, double* x,
                                              double* y, double* theta);
/* Builds a trajectory from row-major [n_snapshots][n_agents] arrays; snapshot
 * k sits at start_time + k * dt. */
SDMD_API sdmd_status sdmd_trajectory_create(size_t n_snapshots, size_t n_agents, double dt, double start_time,
                                            const double* x, const double* y, const double* theta,
                                            sdmd_trajectory** out);
SDMD_API sdmd_status sdmd_trajectory_interpolate(const sdmd_trajectory* traj, double target_dt,
                                                 sdmd_trajectory** out);
SDMD_API sdmd_status sdmd_trajectory_subsample(const sdmd_trajectory* traj, size_t n_agents, uint64_t seed,
                                               sdmd_trajectory** out);
SDMD_API void sdmd_trajectory_free(sdmd_trajectory* traj);

/* ---- interaction models ---- */

typedef struct sdmd_model_info {
    size_t n_agents;
    size_t n_features; /* rows of y */
    size_t rank;       /* rank actually retained */
    double dt;
    const char* dynamics; /* "standard", "fo_cartesian" or "fo_polar"; owned by the model */
    const char* layout;   /* feature kinds, comma separated; owned by the model */
} sdmd_model_info;

/* Fits K on every snapshot of `train` using the config's dynamics, layout and rank. */
SDMD_API sdmd_status sdmd_fit(const sdmd_config* config, const sdmd_trajectory* train, sdmd_model** out);
/* Fits on the first train_duration seconds of a prepared ground truth. */
SDMD_API sdmd_status sdmd_fit_window(const sdmd_config* config, const sdmd_trajectory* ground_truth,
                                     sdmd_model** out);
SDMD_API sdmd_status sdmd_model_load(const char* path, sdmd_model** out);
SDMD_API sdmd_status sdmd_model_save(const sdmd_model* model, const char* path);
SDMD_API sdmd_status sdmd_model_info_get(const sdmd_model* model, sdmd_model_info* info);
/* Copies K (row-major, rows = 2 * n_agents) into buf of at least rows * n_features doubles. */
SDMD_API sdmd_status sdmd_model_matrix(const sdmd_model* model, double* buf, size_t buf_len);
SDMD_API void sdmd_model_free(sdmd_model* model);

/* ---- rollouts ---- */

/* Closed-loop prediction seeded by the first two snapshots of `seed`, running
 * `duration` seconds from the first. *diverged_at (optional) receives the
 * time of the first non-finite state, or NAN when the rollout completed. */
SDMD_API sdmd_status sdmd_rollout(const sdmd_model* model, const sdmd_trajectory* seed, double duration,
                                  sdmd_trajectory** out, double* diverged_at);

/* Re-initialised rollouts restarted from the ground truth every `period`
 * seconds, each running `horizon` seconds, written to `dir`. */
SDMD_API sdmd_status sdmd_rollout_reinit_write(const sdmd_model* model, const sdmd_trajectory* ground_truth,
                                               double period, double horizon, const char* dir,
                                               size_t* n_rollouts);

/* ---- scoring and experiments ---- */

/* Training-window means and post-training times below threshold. A time of
 * INFINITY means the threshold was never exceeded. */
typedef struct sdmd_summary {
    double e_x, e_theta, e_P, e_M;
    double t_x, t_theta, t_P, t_M;
} sdmd_summary;

SDMD_API sdmd_status sdmd_score(const sdmd_trajectory* truth, const sdmd_trajectory* prediction, double train_end,
                                double threshold, int centered_momentum, sdmd_summary* out);

/* Runs the whole pipeline and writes every output under the config's output_dir. */
SDMD_API sdmd_status sdmd_run_experiment(const sdmd_config* config, sdmd_summary* out);

SDMD_API sdmd_status sdmd_suite_load(const char* path, sdmd_suite** out);
SDMD_API sdmd_status sdmd_suite_size(const sdmd_suite* suite, size_t* n_experiments);
/* Overrides the suite's output directory. */
SDMD_API sdmd_status sdmd_suite_set_output(sdmd_suite* suite, const char* dir);
/* Runs every experiment. A failing experiment is recorded in the tables and
 * counted in *n_failed; the call itself still returns SDMD_OK. */
SDMD_API sdmd_status sdmd_suite_run(const sdmd_suite* suite, size_t* n_failed);
SDMD_API void sdmd_suite_free(sdmd_suite* suite);

#ifdef __cplusplus
}
#endif

#endif
