#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmdmd/metrics.hpp"
#include "swarmdmd/observables.hpp"
#include "swarmdmd/rollout.hpp"
#include "swarmdmd/types.hpp"
#include "swarmdmd/vicsek.hpp"

namespace swarmdmd {

/// Default y layout for a dynamics formulation.
std::string default_layout(Dynamics dynamics);

/// Default parameters for a scenario. Milling derives eta = 0.5 omega / dt
/// and nu = 1.03 r omega from the other entries.
SwarmParams scenario_params(SwarmModel scenario);

struct ExperimentConfig {
    std::string name = "experiment";
    SwarmModel scenario = SwarmModel::standard;
    SwarmParams params;
    SimDomain domain;
    Dynamics dynamics = Dynamics::standard;
    std::string layout; // kind list; empty selects default_layout(dynamics)
    std::size_t rank = 8;
    double train_duration = 5.0;
    double predict_duration = 5.0;
    /// Simulated time discarded before the training window starts.
    double warmup = 0.0;
    double threshold = 1e-1;
    RolloutConfig rollout;
    std::filesystem::path output_dir = "out";
    /// Load ground truth from this CSV instead of simulating.
    std::optional<std::filesystem::path> trajectory;

    std::optional<double> interpolate_dt;
    std::optional<std::size_t> subsample;

    bool centered_momentum = false;
    DensityGridSpec density;

    bool write_model = true;
    bool write_trajectories = true;

    std::string resolved_layout() const { return layout.empty() ? default_layout(dynamics) : layout; }
    /// Throws ConfigError naming the offending key.
    void validate() const;
};

/// Raw section -> key -> value text of an experiment file, before defaults
/// are applied. Overrides go here so that derived defaults (milling speed
/// and noise) follow the overridden values.
struct ConfigEntries {
    std::map<std::string, std::map<std::string, std::string>> sections;
    /// Relative paths in the entries resolve against this directory.
    std::filesystem::path base_dir;

    /// Throws ConfigError for an unknown section or key.
    void set(const std::string& section, const std::string& key, const std::string& value);
};

ConfigEntries read_config_entries(std::istream& is, const std::filesystem::path& base_dir = {});
ConfigEntries load_config_entries(const std::filesystem::path& path);

/// Applies scenario defaults to the entries and validates the result.
ExperimentConfig resolve_experiment_config(const ConfigEntries& entries);

ExperimentConfig parse_experiment_config(std::istream& is, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Fully resolved INI text; parsing it yields the same config.
std::string to_ini(const ExperimentConfig& config);

/// Parses "1.5", "pi", "pi/12", "0.5*pi", ... (products and quotients of
/// numbers and pi).
double parse_number(const std::string& text);

/// One row of the summary tables.
struct SummaryRow {
    std::string name;
    SwarmModel scenario = SwarmModel::standard;
    Dynamics dynamics = Dynamics::standard;
    double radius = 0.0;
    double noise = 0.0;
    double e_x = 0.0, e_theta = 0.0, e_P = 0.0, e_M = 0.0;
    std::optional<double> t_x, t_theta, t_P, t_M; // empty = never exceeded
    std::optional<std::string> failure;
};

struct ScoreSeries {
    MetricSeries position, heading, polarisation, momentum; // errors
    MetricSeries polarisation_truth, polarisation_model;
    MetricSeries momentum_truth, momentum_model;
};

struct ExperimentReport {
    SummaryRow row;
    std::size_t retained_rank = 0;
    std::optional<Divergence> divergence;
    SwarmTrajectory ground_truth; // preprocessed, times start at 0
    SwarmTrajectory prediction;   // basic rollout
    ScoreSeries series;
    DensityGrid density_truth_train, density_model_train;
    DensityGrid density_truth_predict, density_model_predict;
};

/// Simulated or loaded trajectory after warmup, re-based to t = 0, cut to
/// train + predict duration and preprocessed.
SwarmTrajectory prepare_ground_truth(const ExperimentConfig& config);

/// Fits on the first train_duration seconds of `ground_truth`.
InteractionModel fit_model(const ExperimentConfig& config, const SwarmTrajectory& ground_truth);

/// Scores a prediction against ground truth over their shared time range.
/// train_end splits the training mean from the time-below statistics. A
/// prediction that stops before the truth does (divergence) counts as
/// exceeding the threshold at its first missing sample.
SummaryRow score(const SwarmTrajectory& truth, const SwarmTrajectory& prediction, double train_end, double threshold,
                 bool centered_momentum, ScoreSeries* series = nullptr);

/// Full pipeline; writes everything under config.output_dir.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct SuiteConfig {
    std::string name = "suite";
    std::filesystem::path output_dir = "out";
    std::vector<ExperimentConfig> experiments;
    /// 0 = hardware concurrency (further capped by SWARMDMD_THREADS).
    std::size_t threads = 0;
};

SuiteConfig load_suite_config(const std::filesystem::path& path);

struct SuiteResult {
    std::vector<SummaryRow> rows;
    std::size_t failures() const;
};

/// Runs every experiment into output_dir/<name>, recording failures per row,
/// and writes the combined tables.
SuiteResult run_suite(const SuiteConfig& suite);

/// Aligned plain-text error and time tables.
std::string format_error_table(const std::vector<SummaryRow>& rows);
std::string format_time_table(const std::vector<SummaryRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);

} // namespace swarmdmd
