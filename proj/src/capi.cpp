#include "swarmdmd/swarmdmd.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>
#include <new>
#include <string>

#include "swarmdmd/dmd.hpp"
#include "swarmdmd/error.hpp"
#include "swarmdmd/experiment.hpp"
#include "swarmdmd/io.hpp"
#include "swarmdmd/version.hpp"

using namespace swarmdmd;

struct sdmd_config {
    ConfigEntries entries;
    ExperimentConfig resolved;
};

struct sdmd_trajectory {
    SwarmTrajectory traj;
};

struct sdmd_model {
    InteractionModel model;
    std::string dynamics;
    std::string layout;
};

struct sdmd_suite {
    SuiteConfig suite;
};

namespace {

thread_local std::string g_last_error;

sdmd_status fail(sdmd_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Maps the library's exception hierarchy onto status codes.
template <class F>
sdmd_status guarded(F&& f) {
    try {
        f();
        g_last_error.clear();
        return SDMD_OK;
    } catch (const InvalidArgument& e) {
        return fail(SDMD_INVALID_ARGUMENT, e.what());
    } catch (const ConfigError& e) {
        return fail(SDMD_CONFIG, e.what());
    } catch (const IoError& e) {
        return fail(SDMD_IO, e.what());
    } catch (const NumericalError& e) {
        return fail(SDMD_NUMERICS, e.what());
    } catch (const InternalError& e) {
        return fail(SDMD_INTERNAL, std::string("internal error: ") + e.what());
    } catch (const std::bad_alloc&) {
        return fail(SDMD_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SDMD_INTERNAL, e.what());
    } catch (...) {
        return fail(SDMD_INTERNAL, "unknown exception");
    }
}

void require(const void* p, const char* name) {
    if (!p) throw InvalidArgument(std::string(name) + " must not be NULL");
}

double time_or_inf(const std::optional<double>& t) {
    return t ? *t : std::numeric_limits<double>::infinity();
}

sdmd_summary to_summary(const SummaryRow& row) {
    return {row.e_x, row.e_theta, row.e_P, row.e_M,
            time_or_inf(row.t_x), time_or_inf(row.t_theta), time_or_inf(row.t_P), time_or_inf(row.t_M)};
}

sdmd_model* wrap_model(InteractionModel model) {
    auto* m = new sdmd_model{std::move(model), {}, {}};
    m->dynamics = to_string(m->model.dynamics);
    m->layout = m->model.layout.spec();
    return m;
}

} // namespace

extern "C" {

const char* sdmd_version(void) { return kVersion; }

const char* sdmd_status_name(sdmd_status status) {
    switch (status) {
    case SDMD_OK: return "ok";
    case SDMD_INVALID_ARGUMENT: return "invalid argument";
    case SDMD_CONFIG: return "configuration error";
    case SDMD_IO: return "i/o error";
    case SDMD_NUMERICS: return "numerical error";
    case SDMD_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* sdmd_last_error(void) { return g_last_error.c_str(); }

sdmd_status sdmd_config_load(const char* path, sdmd_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        auto entries = load_config_entries(path);
        ExperimentConfig resolved;
        try {
            resolved = resolve_experiment_config(entries);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(path) + ": " + e.what());
        }
        *out = new sdmd_config{std::move(entries), std::move(resolved)};
    });
}

sdmd_status sdmd_config_default(const char* scenario, sdmd_config** out) {
    return guarded([&] {
        require(scenario, "scenario");
        require(out, "out");
        ConfigEntries entries;
        entries.base_dir = std::filesystem::current_path();
        entries.set("experiment", "scenario", scenario);
        auto resolved = resolve_experiment_config(entries);
        *out = new sdmd_config{std::move(entries), std::move(resolved)};
    });
}

sdmd_status sdmd_config_set(sdmd_config* config, const char* section, const char* key, const char* value) {
    return guarded([&] {
        require(config, "config");
        require(section, "section");
        require(key, "key");
        require(value, "value");
        ConfigEntries next = config->entries;
        next.set(section, key, value);
        auto resolved = resolve_experiment_config(next);
        config->entries = std::move(next);
        config->resolved = std::move(resolved);
    });
}

sdmd_status sdmd_config_write(const sdmd_config* config, const char* path) {
    return guarded([&] {
        require(config, "config");
        require(path, "path");
        std::ofstream os(path);
        if (!os) throw IoError(std::string("cannot open ") + path + " for writing");
        os << to_ini(config->resolved);
        if (!os) throw IoError(std::string("failed writing ") + path);
    });
}

sdmd_status sdmd_config_text(const sdmd_config* config, char* buf, size_t buf_size, size_t* required) {
    return guarded([&] {
        require(config, "config");
        const std::string text = to_ini(config->resolved);
        if (required) *required = text.size() + 1;
        if (buf && buf_size > 0) {
            const size_t n = std::min(buf_size - 1, text.size());
            std::memcpy(buf, text.data(), n);
            buf[n] = '\0';
        }
    });
}

void sdmd_config_free(sdmd_config* config) { delete config; }

sdmd_status sdmd_simulate(const sdmd_config* config, sdmd_trajectory** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        const auto& c = config->resolved;
        auto traj = simulate(c.params, c.domain, c.scenario, c.warmup + c.train_duration + c.predict_duration);
        *out = new sdmd_trajectory{std::move(traj)};
    });
}

sdmd_status sdmd_prepare_ground_truth(const sdmd_config* config, sdmd_trajectory** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        *out = new sdmd_trajectory{prepare_ground_truth(config->resolved)};
    });
}

sdmd_status sdmd_trajectory_load(const char* path, sdmd_trajectory** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new sdmd_trajectory{load_trajectory(path)};
    });
}

sdmd_status sdmd_trajectory_save(const sdmd_trajectory* traj, const char* path) {
    return guarded([&] {
        require(traj, "traj");
        require(path, "path");
        save_trajectory(traj->traj, path);
    });
}

sdmd_status sdmd_trajectory_info_get(const sdmd_trajectory* traj, sdmd_trajectory_info* info) {
    return guarded([&] {
        require(traj, "traj");
        require(info, "info");
        *info = {traj->traj.size(), traj->traj.agent_count(), traj->traj.dt, traj->traj.start_time()};
    });
}

sdmd_status sdmd_trajectory_snapshot(const sdmd_trajectory* traj, size_t k, double* time, double* x, double* y,
                                     double* theta) {
    return guarded([&] {
        require(traj, "traj");
        if (k >= traj->traj.size()) {
            throw InvalidArgument("snapshot index " + std::to_string(k) + " out of range (" +
                                  std::to_string(traj->traj.size()) + " snapshots)");
        }
        const auto& snap = traj->traj.snapshots[k];
        if (time) *time = snap.time;
        for (size_t i = 0; i < snap.agents.size(); ++i) {
            if (x) x[i] = snap.agents[i].position.x();
            if (y) y[i] = snap.agents[i].position.y();
            if (theta) theta[i] = snap.agents[i].heading;
        }
    });
}

sdmd_status sdmd_trajectory_create(size_t n_snapshots, size_t n_agents, double dt, double start_time, const double* x,
                                   const double* y, const double* theta, sdmd_trajectory** out) {
    return guarded([&] {
        require(x, "x");
        require(y, "y");
        require(theta, "theta");
        require(out, "out");
        SwarmTrajectory traj;
        traj.dt = dt;
        traj.snapshots.resize(n_snapshots);
        for (size_t k = 0; k < n_snapshots; ++k) {
            auto& snap = traj.snapshots[k];
            snap.time = start_time + static_cast<double>(k) * dt;
            snap.agents.resize(n_agents);
            for (size_t i = 0; i < n_agents; ++i) {
                const size_t idx = k * n_agents + i;
                snap.agents[i].position = {x[idx], y[idx]};
                snap.agents[i].heading = theta[idx];
            }
        }
        const auto report = validate_trajectory(traj);
        if (!report.ok()) throw InvalidArgument(report.to_string());
        *out = new sdmd_trajectory{std::move(traj)};
    });
}

sdmd_status sdmd_trajectory_interpolate(const sdmd_trajectory* traj, double target_dt, sdmd_trajectory** out) {
    return guarded([&] {
        require(traj, "traj");
        require(out, "out");
        *out = new sdmd_trajectory{interpolate_trajectory(traj->traj, target_dt)};
    });
}

sdmd_status sdmd_trajectory_subsample(const sdmd_trajectory* traj, size_t n_agents, uint64_t seed,
                                      sdmd_trajectory** out) {
    return guarded([&] {
        require(traj, "traj");
        require(out, "out");
        *out = new sdmd_trajectory{subsample_agents(traj->traj, n_agents, seed)};
    });
}

void sdmd_trajectory_free(sdmd_trajectory* traj) { delete traj; }

sdmd_status sdmd_fit(const sdmd_config* config, const sdmd_trajectory* train, sdmd_model** out) {
    return guarded([&] {
        require(config, "config");
        require(train, "train");
        require(out, "out");
        const auto& c = config->resolved;
        const auto layout = FeatureLayout::parse(c.resolved_layout(), train->traj.agent_count());
        const auto mats = assemble_matrices(train->traj, layout, c.dynamics);
        *out = wrap_model(estimate_K(mats, FixedRank{c.rank}));
    });
}

sdmd_status sdmd_fit_window(const sdmd_config* config, const sdmd_trajectory* ground_truth, sdmd_model** out) {
    return guarded([&] {
        require(config, "config");
        require(ground_truth, "ground_truth");
        require(out, "out");
        *out = wrap_model(fit_model(config->resolved, ground_truth->traj));
    });
}

sdmd_status sdmd_model_load(const char* path, sdmd_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = wrap_model(load_model(path));
    });
}

sdmd_status sdmd_model_save(const sdmd_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        save_model(model->model, path);
    });
}

sdmd_status sdmd_model_info_get(const sdmd_model* model, sdmd_model_info* info) {
    return guarded([&] {
        require(model, "model");
        require(info, "info");
        const auto& m = model->model;
        *info = {m.n_agents(), static_cast<size_t>(m.K.cols()), m.rank, m.dt, model->dynamics.c_str(),
                 model->layout.c_str()};
    });
}

sdmd_status sdmd_model_matrix(const sdmd_model* model, double* buf, size_t buf_len) {
    return guarded([&] {
        require(model, "model");
        require(buf, "buf");
        const auto& K = model->model.K;
        const auto need = static_cast<size_t>(K.size());
        if (buf_len < need) {
            throw InvalidArgument("buffer holds " + std::to_string(buf_len) + " doubles, K needs " +
                                  std::to_string(need));
        }
        for (Eigen::Index r = 0; r < K.rows(); ++r) {
            for (Eigen::Index c = 0; c < K.cols(); ++c) {
                buf[static_cast<size_t>(r * K.cols() + c)] = K(r, c);
            }
        }
    });
}

void sdmd_model_free(sdmd_model* model) { delete model; }

sdmd_status sdmd_rollout(const sdmd_model* model, const sdmd_trajectory* seed, double duration,
                         sdmd_trajectory** out, double* diverged_at) {
    return guarded([&] {
        require(model, "model");
        require(seed, "seed");
        require(out, "out");
        if (seed->traj.size() < 2) throw InvalidArgument("rollout needs at least two seed snapshots");
        auto result = rollout(model->model, seed->traj.slice(0, 2), duration);
        if (diverged_at) {
            *diverged_at = result.divergence ? result.divergence->time : std::numeric_limits<double>::quiet_NaN();
        }
        *out = new sdmd_trajectory{std::move(result.trajectory)};
    });
}

sdmd_status sdmd_rollout_reinit_write(const sdmd_model* model, const sdmd_trajectory* ground_truth, double period,
                                      double horizon, const char* dir, size_t* n_rollouts) {
    return guarded([&] {
        require(model, "model");
        require(ground_truth, "ground_truth");
        require(dir, "dir");
        RolloutConfig cfg;
        cfg.mode = RolloutMode::reinit;
        cfg.reinit_period = period;
        cfg.reinit_horizon = horizon;
        cfg.duration = ground_truth->traj.end_time() - ground_truth->traj.start_time();
        const auto family = rollout_with_reinit(model->model, ground_truth->traj, cfg);
        save_rollout_result(family, dir);
        if (n_rollouts) *n_rollouts = family.rollouts.size();
    });
}

sdmd_status sdmd_score(const sdmd_trajectory* truth, const sdmd_trajectory* prediction, double train_end,
                       double threshold, int centered_momentum, sdmd_summary* out) {
    return guarded([&] {
        require(truth, "truth");
        require(prediction, "prediction");
        require(out, "out");
        if (!truth->traj.index_of(prediction->traj.start_time())) {
            throw InvalidArgument("prediction does not start on the ground-truth time grid");
        }
        *out = to_summary(score(truth->traj, prediction->traj, train_end, threshold, centered_momentum != 0));
    });
}

sdmd_status sdmd_run_experiment(const sdmd_config* config, sdmd_summary* out) {
    return guarded([&] {
        require(config, "config");
        const auto report = run_experiment(config->resolved);
        if (out) *out = to_summary(report.row);
    });
}

sdmd_status sdmd_suite_load(const char* path, sdmd_suite** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new sdmd_suite{load_suite_config(path)};
    });
}

sdmd_status sdmd_suite_size(const sdmd_suite* suite, size_t* n_experiments) {
    return guarded([&] {
        require(suite, "suite");
        require(n_experiments, "n_experiments");
        *n_experiments = suite->suite.experiments.size();
    });
}

sdmd_status sdmd_suite_set_output(sdmd_suite* suite, const char* dir) {
    return guarded([&] {
        require(suite, "suite");
        require(dir, "dir");
        suite->suite.output_dir = std::filesystem::absolute(dir).lexically_normal();
    });
}

sdmd_status sdmd_suite_run(const sdmd_suite* suite, size_t* n_failed) {
    return guarded([&] {
        require(suite, "suite");
        const auto result = run_suite(suite->suite);
        if (n_failed) *n_failed = result.failures();
    });
}

void sdmd_suite_free(sdmd_suite* suite) { delete suite; }

} // extern "C"
