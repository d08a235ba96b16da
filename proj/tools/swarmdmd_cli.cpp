// Command-line front end. Talks to the library only through the C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "swarmdmd/swarmdmd.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitError = 2;
constexpr int kExitSuitePartial = 3;

struct Failure {
    sdmd_status status;
    std::string message;
};

void check(sdmd_status status) {
    if (status != SDMD_OK) throw Failure{status, sdmd_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Config = std::unique_ptr<sdmd_config, Deleter<sdmd_config, sdmd_config_free>>;
using Trajectory = std::unique_ptr<sdmd_trajectory, Deleter<sdmd_trajectory, sdmd_trajectory_free>>;
using Model = std::unique_ptr<sdmd_model, Deleter<sdmd_model, sdmd_model_free>>;
using Suite = std::unique_ptr<sdmd_suite, Deleter<sdmd_suite, sdmd_suite_free>>;

std::string absolute(const std::string& path) {
    return std::filesystem::absolute(path).lexically_normal().string();
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> rank;
    std::optional<double> threshold;
    std::string out;
};

void add_overrides(CLI::App* cmd, Overrides& o, bool with_out_dir) {
    cmd->add_option("--seed", o.seed, "Override params.seed");
    cmd->add_option("--rank", o.rank, "Override experiment.rank");
    cmd->add_option("--threshold", o.threshold, "Override experiment.threshold");
    if (with_out_dir) cmd->add_option("--out", o.out, "Output directory (overrides experiment.output_dir)");
}

Config load_config(const std::string& path, const Overrides& o) {
    sdmd_config* raw = nullptr;
    check(sdmd_config_load(path.c_str(), &raw));
    Config config(raw);
    if (o.seed) check(sdmd_config_set(raw, "params", "seed", std::to_string(*o.seed).c_str()));
    if (o.rank) check(sdmd_config_set(raw, "experiment", "rank", std::to_string(*o.rank).c_str()));
    if (o.threshold) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", *o.threshold);
        check(sdmd_config_set(raw, "experiment", "threshold", buf));
    }
    return config;
}

Trajectory load_trajectory(const std::string& path) {
    sdmd_trajectory* raw = nullptr;
    check(sdmd_trajectory_load(path.c_str(), &raw));
    return Trajectory(raw);
}

std::string time_text(double t) {
    if (std::isinf(t)) return "never";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f s", t);
    return buf;
}

void print_summary(const sdmd_summary& s) {
    std::printf("training mean error   position %.3e  heading %.3e  polarisation %.3e  momentum %.3e\n", s.e_x,
                s.e_theta, s.e_P, s.e_M);
    std::printf("time below threshold  position %s  heading %s  polarisation %s  momentum %s\n",
                time_text(s.t_x).c_str(), time_text(s.t_theta).c_str(), time_text(s.t_P).c_str(),
                time_text(s.t_M).c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learn and evaluate interaction models of simulated swarms"};
    app.set_version_flag("--version", std::string(sdmd_version()));
    app.require_subcommand(1);

    std::string config_path, trajectory_path, model_path, truth_path, test_path, out_path, suite_path;
    bool raw = false;
    double duration = 10.0, train_end = 5.0, threshold = 0.1;
    bool centered = false;
    Overrides overrides;

    auto* simulate = app.add_subcommand("simulate", "Simulate a swarm and write its trajectory CSV");
    simulate->add_option("--config,-c", config_path, "Experiment config")->required();
    simulate->add_option("--out,-o", out_path, "Trajectory CSV to write")->required();
    simulate->add_flag("--raw", raw, "Keep the warmup and skip interpolation and subsampling");
    simulate->add_option("--seed", overrides.seed, "Override params.seed");

    auto* fit = app.add_subcommand("fit", "Fit an interaction model on the training window");
    fit->add_option("--config,-c", config_path, "Experiment config")->required();
    fit->add_option("--trajectory,-t", trajectory_path,
                    "Prepared ground truth CSV (default: simulate from the config)");
    fit->add_option("--out,-o", out_path, "Model file to write")->required();
    fit->add_option("--seed", overrides.seed, "Override params.seed");
    fit->add_option("--rank", overrides.rank, "Override experiment.rank");

    auto* roll = app.add_subcommand("rollout", "Closed-loop prediction from the first two snapshots");
    roll->add_option("--model,-m", model_path, "Model file")->required();
    roll->add_option("--trajectory,-t", trajectory_path, "Trajectory whose first two snapshots seed the rollout")
        ->required();
    roll->add_option("--duration,-d", duration, "Seconds to predict from the first seed snapshot")
        ->check(CLI::PositiveNumber);
    roll->add_option("--out,-o", out_path, "Prediction CSV to write")->required();

    auto* score = app.add_subcommand("score", "Compare a prediction with ground truth");
    score->add_option("--truth", truth_path, "Ground truth CSV")->required();
    score->add_option("--test", test_path, "Prediction CSV")->required();
    score->add_option("--train-end", train_end, "End of the training window in seconds");
    score->add_option("--threshold", threshold, "Error threshold for the time-below statistics")
        ->check(CLI::PositiveNumber);
    score->add_flag("--centered", centered, "Centre positions before computing angular momentum");

    auto* run = app.add_subcommand("run", "Run one experiment end to end");
    run->add_option("--config,-c", config_path, "Experiment config")->required();
    add_overrides(run, overrides, true);

    auto* suite = app.add_subcommand("suite", "Run every experiment of a suite and write the summary tables");
    suite->add_option("suite", suite_path, "Suite file")->required();
    suite->add_option("--out,-o", out_path, "Output directory (overrides the suite's output_dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; usage errors count as config errors.
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (*simulate) {
            auto config = load_config(config_path, overrides);
            sdmd_trajectory* traj = nullptr;
            check(raw ? sdmd_simulate(config.get(), &traj) : sdmd_prepare_ground_truth(config.get(), &traj));
            Trajectory owned(traj);
            check(sdmd_trajectory_save(traj, out_path.c_str()));
            sdmd_trajectory_info info{};
            check(sdmd_trajectory_info_get(traj, &info));
            std::printf("wrote %zu snapshots of %zu agents (dt %g s) to %s\n", info.n_snapshots, info.n_agents,
                        info.dt, out_path.c_str());
        } else if (*fit) {
            auto config = load_config(config_path, overrides);
            Trajectory gt;
            if (trajectory_path.empty()) {
                sdmd_trajectory* traj = nullptr;
                check(sdmd_prepare_ground_truth(config.get(), &traj));
                gt.reset(traj);
            } else {
                gt = load_trajectory(trajectory_path);
            }
            sdmd_model* model = nullptr;
            check(sdmd_fit_window(config.get(), gt.get(), &model));
            Model owned(model);
            check(sdmd_model_save(model, out_path.c_str()));
            sdmd_model_info info{};
            check(sdmd_model_info_get(model, &info));
            std::printf("fitted %s model: %zu agents, %zu features, rank %zu; wrote %s\n", info.dynamics,
                        info.n_agents, info.n_features, info.rank, out_path.c_str());
        } else if (*roll) {
            sdmd_model* model = nullptr;
            check(sdmd_model_load(model_path.c_str(), &model));
            Model owned_model(model);
            auto seed = load_trajectory(trajectory_path);
            sdmd_trajectory* pred = nullptr;
            double diverged = NAN;
            check(sdmd_rollout(model, seed.get(), duration, &pred, &diverged));
            Trajectory owned(pred);
            check(sdmd_trajectory_save(pred, out_path.c_str()));
            if (!std::isnan(diverged)) {
                std::fprintf(stderr, "warning: rollout diverged at t = %g s; output truncated\n", diverged);
            }
            std::printf("wrote %s\n", out_path.c_str());
        } else if (*score) {
            auto truth = load_trajectory(truth_path);
            auto test = load_trajectory(test_path);
            sdmd_summary s{};
            check(sdmd_score(truth.get(), test.get(), train_end, threshold, centered ? 1 : 0, &s));
            print_summary(s);
        } else if (*run) {
            auto config = load_config(config_path, overrides);
            if (!overrides.out.empty()) {
                check(sdmd_config_set(config.get(), "experiment", "output_dir", absolute(overrides.out).c_str()));
            }
            sdmd_summary s{};
            check(sdmd_run_experiment(config.get(), &s));
            print_summary(s);
        } else if (*suite) {
            sdmd_suite* raw_suite = nullptr;
            check(sdmd_suite_load(suite_path.c_str(), &raw_suite));
            Suite owned(raw_suite);
            if (!out_path.empty()) check(sdmd_suite_set_output(raw_suite, absolute(out_path).c_str()));
            std::size_t n = 0, failed = 0;
            check(sdmd_suite_size(raw_suite, &n));
            check(sdmd_suite_run(raw_suite, &failed));
            std::printf("%zu of %zu experiments completed\n", n - failed, n);
            if (failed > 0) {
                std::fprintf(stderr, "error: %zu experiment(s) failed; see the summary tables\n", failed);
                return kExitSuitePartial;
            }
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "error (%s): %s\n", sdmd_status_name(f.status), f.message.c_str());
        return f.status == SDMD_CONFIG ? kExitConfig : kExitError;
    }
    return 0;
}
