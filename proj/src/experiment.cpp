#include "swarmdmd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "swarmdmd/dmd.hpp"
#include "swarmdmd/error.hpp"
#include "swarmdmd/io.hpp"
#include "swarmdmd/plot.hpp"
#include "swarmdmd/version.hpp"

namespace swarmdmd {

namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"experiment",
         {"name", "scenario", "dynamics", "layout", "rank", "train_duration", "predict_duration", "warmup",
          "threshold", "output_dir", "trajectory"}},
        {"params",
         {"n_agents", "dt", "density", "interaction_radius", "field_of_view", "max_turn_rate", "noise", "speed",
          "seed"}},
        {"domain", {"sim_width"}},
        {"rollout", {"mode", "reinit_period", "reinit_horizon"}},
        {"preprocess", {"interpolate_dt", "subsample"}},
        {"metrics", {"centered_momentum", "density_bins", "density_spacing", "density_width", "density_frame"}},
        {"output", {"write_model", "write_trajectories"}},
    };
    return keys;
}

// Written into manifests; ignored on input.
const std::string kManifestSection = "manifest";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string short_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

bool is_none(const std::string& v) {
    const auto l = lower(trim(v));
    return l == "none" || l.empty();
}

std::size_t steps_of(double duration, double dt, const std::string& what) {
    const double steps = duration / dt;
    const double rounded = std::round(steps);
    if (!(duration >= 0.0) || std::abs(steps - rounded) > 1e-6 * std::max(1.0, steps)) {
        throw ConfigError(what + " (" + shortest(duration) + " s) must be a non-negative multiple of dt (" +
                          shortest(dt) + " s)");
    }
    return static_cast<std::size_t>(rounded);
}

// Rethrows with the pipeline stage prefixed, preserving the error category.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    const std::string prefix = std::string(name) + ": ";
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const IoError& e) {
        throw IoError(prefix + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what());
    } catch (const InternalError& e) {
        throw InternalError(prefix + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(prefix + e.what());
    }
}

class EntryReader {
  public:
    explicit EntryReader(const ConfigEntries& entries) : entries_(entries) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto s = entries_.sections.find(section);
        if (s == entries_.sections.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return trim(k->second);
    }

    std::optional<double> number(const std::string& section, const std::string& key) const {
        const auto v = raw(section, key);
        if (!v) return std::nullopt;
        try {
            return parse_number(*v);
        } catch (const ConfigError& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        }
    }

    std::optional<std::uint64_t> integer(const std::string& section, const std::string& key) const {
        const auto v = raw(section, key);
        if (!v) return std::nullopt;
        std::uint64_t out = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) {
            throw ConfigError(section + "." + key + ": expected a non-negative integer, got '" + *v + "'");
        }
        return out;
    }

    std::optional<bool> boolean(const std::string& section, const std::string& key) const {
        const auto v = raw(section, key);
        if (!v) return std::nullopt;
        const auto l = lower(*v);
        if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
        if (l == "false" || l == "no" || l == "off" || l == "0") return false;
        throw ConfigError(section + "." + key + ": expected true or false, got '" + *v + "'");
    }

    template <class T, class Parse>
    std::optional<T> parsed(const std::string& section, const std::string& key, Parse&& parse) const {
        const auto v = raw(section, key);
        if (!v) return std::nullopt;
        try {
            return parse(*v);
        } catch (const InvalidArgument& e) {
            throw ConfigError(section + "." + key + ": " + e.what());
        }
    }

  private:
    const ConfigEntries& entries_;
};

fs::path resolve_path(const fs::path& base, const std::string& value) {
    fs::path p(value);
    if (p.is_relative() && !base.empty()) p = base / p;
    return fs::absolute(p).lexically_normal();
}

bool valid_name(const std::string& name) {
    if (name.empty() || name == "." || name == "..") return false;
    return std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    os << text;
}

SwarmTrajectory rebased(SwarmTrajectory traj) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
        traj.snapshots[k].time = static_cast<double>(k) * traj.dt;
    }
    return traj;
}

std::optional<double> first_time_above(const MetricSeries& s, double train_end, double threshold) {
    return summarize(s, train_end, threshold).time_below;
}

double mean_until(const MetricSeries& s, double train_end) { return summarize(s, train_end, 0.0).train_mean; }

} // namespace

std::string default_layout(Dynamics dynamics) {
    switch (dynamics) {
    case Dynamics::standard: return "position,velocity,heading,rel_distance";
    case Dynamics::fo_cartesian: return "rel_position,rel_velocity";
    case Dynamics::fo_polar: return "rel_distance,rel_speed,rel_heading";
    }
    throw InternalError("unhandled dynamics");
}

SwarmParams scenario_params(SwarmModel scenario) {
    SwarmParams p;
    if (scenario == SwarmModel::standard) {
        p.n_agents = 50;
        p.dt = 0.1;
        p.density = 16.0;
        p.interaction_radius = 0.25;
        p.noise = 0.0;
        p.speed = 0.03;
        return p;
    }
    p.n_agents = 1000;
    p.dt = 1.0;
    p.density = 2.5;
    p.interaction_radius = 1.0;
    p.field_of_view = kPi / 2.0;
    p.max_turn_rate = kPi / 18.0;
    p.noise = 0.5 * *p.max_turn_rate / p.dt;
    p.speed = 1.03 * p.interaction_radius * *p.max_turn_rate;
    return p;
}

double parse_number(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) {
        throw ConfigError("empty number");
    }
    std::size_t pos = 0;
    auto factor = [&]() {
        while (pos < s.size() && s[pos] == ' ') ++pos;
        double sign = 1.0;
        if (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
            if (s[pos] == '-') sign = -1.0;
            ++pos;
        }
        if (s.compare(pos, 2, "pi") == 0) {
            pos += 2;
            return sign * kPi;
        }
        double v = 0.0;
        const auto res = std::from_chars(s.data() + pos, s.data() + s.size(), v);
        if (res.ec != std::errc{}) {
            throw ConfigError("cannot parse number '" + s + "'");
        }
        pos = static_cast<std::size_t>(res.ptr - s.data());
        return sign * v;
    };
    double value = factor();
    while (true) {
        while (pos < s.size() && s[pos] == ' ') ++pos;
        if (pos == s.size()) break;
        const char op = s[pos++];
        if (op == '*') {
            value *= factor();
        } else if (op == '/') {
            value /= factor();
        } else {
            throw ConfigError("cannot parse number '" + s + "'");
        }
    }
    if (!std::isfinite(value)) {
        throw ConfigError("number '" + s + "' is not finite");
    }
    return value;
}

void ConfigEntries::set(const std::string& section, const std::string& key, const std::string& value) {
    const auto& keys = known_keys();
    const auto s = keys.find(section);
    if (s == keys.end()) {
        throw ConfigError("unknown config section [" + section + "]");
    }
    if (!s->second.count(key)) {
        throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
    sections[section][key] = value;
}

ConfigEntries read_config_entries(std::istream& is, const fs::path& base_dir) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    ConfigEntries entries;
    entries.base_dir = base_dir;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("key '" + section + "' appears outside any section");
        }
        if (section == kManifestSection) continue;
        for (const auto& [key, value] : body) {
            entries.set(section, key, value.data());
        }
    }
    return entries;
}

ConfigEntries load_config_entries(const fs::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open config " + path.string());
    }
    try {
        return read_config_entries(is, path.parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentConfig resolve_experiment_config(const ConfigEntries& entries) {
    const EntryReader in(entries);
    ExperimentConfig c;

    if (auto v = in.raw("experiment", "name")) c.name = *v;
    if (auto v = in.parsed<SwarmModel>("experiment", "scenario", parse_swarm_model)) c.scenario = *v;
    if (auto v = in.parsed<Dynamics>("experiment", "dynamics", parse_dynamics)) c.dynamics = *v;
    if (auto v = in.raw("experiment", "layout")) c.layout = *v;
    if (auto v = in.integer("experiment", "rank")) c.rank = *v;
    if (auto v = in.number("experiment", "train_duration")) c.train_duration = *v;
    if (auto v = in.number("experiment", "predict_duration")) c.predict_duration = *v;
    if (auto v = in.number("experiment", "warmup")) c.warmup = *v;
    if (auto v = in.number("experiment", "threshold")) c.threshold = *v;
    if (auto v = in.raw("experiment", "output_dir")) c.output_dir = resolve_path(entries.base_dir, *v);
    else c.output_dir = resolve_path(entries.base_dir, "out/" + c.name);
    if (auto v = in.raw("experiment", "trajectory"); v && !is_none(*v)) {
        c.trajectory = resolve_path(entries.base_dir, *v);
    }

    auto& p = c.params;
    p = scenario_params(c.scenario);
    if (auto v = in.integer("params", "n_agents")) p.n_agents = *v;
    if (auto v = in.number("params", "dt")) p.dt = *v;
    if (auto v = in.number("params", "density")) p.density = *v;
    if (auto v = in.number("params", "interaction_radius")) p.interaction_radius = *v;
    if (auto v = in.raw("params", "field_of_view")) {
        p.field_of_view = is_none(*v) ? std::nullopt : in.number("params", "field_of_view");
    }
    if (auto v = in.raw("params", "max_turn_rate")) {
        p.max_turn_rate = is_none(*v) ? std::nullopt : in.number("params", "max_turn_rate");
    }
    if (auto v = in.integer("params", "seed")) p.seed = *v;
    if (c.scenario == SwarmModel::milling && p.max_turn_rate) {
        p.noise = 0.5 * *p.max_turn_rate / p.dt;
        p.speed = 1.03 * p.interaction_radius * *p.max_turn_rate;
    }
    if (auto v = in.number("params", "noise")) p.noise = *v;
    if (auto v = in.number("params", "speed")) p.speed = *v;

    if (p.n_agents > 0 && p.density > 0.0) {
        c.domain = SimDomain::from_params(p, in.number("domain", "sim_width"));
    }

    if (auto v = in.parsed<RolloutMode>("rollout", "mode", parse_rollout_mode)) c.rollout.mode = *v;
    if (auto v = in.number("rollout", "reinit_period")) c.rollout.reinit_period = *v;
    if (auto v = in.number("rollout", "reinit_horizon")) c.rollout.reinit_horizon = *v;
    c.rollout.duration = c.train_duration + c.predict_duration;

    if (c.scenario == SwarmModel::milling) {
        c.interpolate_dt = 0.1;
        c.subsample = 200;
    }
    if (auto v = in.raw("preprocess", "interpolate_dt")) {
        c.interpolate_dt = is_none(*v) ? std::nullopt : in.number("preprocess", "interpolate_dt");
    }
    if (auto v = in.raw("preprocess", "subsample")) {
        c.subsample = is_none(*v) ? std::nullopt : std::optional<std::size_t>(*in.integer("preprocess", "subsample"));
    }

    if (auto v = in.boolean("metrics", "centered_momentum")) c.centered_momentum = *v;
    c.density = DensityGridSpec::for_radius(p.interaction_radius);
    if (auto v = in.integer("metrics", "density_bins")) c.density.bins = *v;
    if (auto v = in.number("metrics", "density_spacing")) {
        c.density.spacing = *v;
        c.density.width = *v;
    }
    if (auto v = in.number("metrics", "density_width")) c.density.width = *v;
    if (auto v = in.raw("metrics", "density_frame")) {
        const auto l = lower(*v);
        if (l == "world") c.density.frame = DensityFrame::world;
        else if (l == "heading") c.density.frame = DensityFrame::heading;
        else throw ConfigError("metrics.density_frame: expected world or heading, got '" + *v + "'");
    }

    if (auto v = in.boolean("output", "write_model")) c.write_model = *v;
    if (auto v = in.boolean("output", "write_trajectories")) c.write_trajectories = *v;

    c.validate();
    return c;
}

ExperimentConfig parse_experiment_config(std::istream& is, const fs::path& base_dir) {
    return resolve_experiment_config(read_config_entries(is, base_dir));
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    const auto entries = load_config_entries(path);
    try {
        return resolve_experiment_config(entries);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void ExperimentConfig::validate() const {
    auto check = [](const std::string& key, auto&& f) {
        try {
            f();
        } catch (const InvalidArgument& e) {
            throw ConfigError(key + ": " + e.what());
        }
    };
    if (!valid_name(name)) {
        throw ConfigError("experiment.name must be non-empty and use only letters, digits, '_', '-' and '.'");
    }
    if (!trajectory) {
        check("params", [&] { params.validate(); });
        check("domain", [&] { domain.validate(params); });
    }
    check("rollout", [&] { rollout.validate(); });
    check("metrics", [&] { density.validate(); });
    if (rank == 0) {
        throw ConfigError("experiment.rank must be >= 1");
    }
    if (!(threshold > 0.0)) {
        throw ConfigError("experiment.threshold must be > 0");
    }
    if (!(train_duration > 0.0) || !(predict_duration >= 0.0) || !(warmup >= 0.0)) {
        throw ConfigError("experiment durations must be >= 0 (train_duration > 0)");
    }
    if (interpolate_dt && !(*interpolate_dt > 0.0)) {
        throw ConfigError("preprocess.interpolate_dt must be > 0");
    }
    if (subsample && *subsample == 0) {
        throw ConfigError("preprocess.subsample must be >= 1");
    }
    if (!trajectory) {
        if (subsample && *subsample > params.n_agents) {
            throw ConfigError("preprocess.subsample exceeds params.n_agents");
        }
        steps_of(warmup, params.dt, "experiment.warmup");
        steps_of(train_duration + predict_duration, params.dt, "experiment.train_duration + predict_duration");
        const double data_dt = interpolate_dt.value_or(params.dt);
        if (interpolate_dt) {
            const double factor = params.dt / *interpolate_dt;
            if (std::abs(factor - std::round(factor)) > 1e-9 * factor || std::round(factor) < 1.0) {
                throw ConfigError("preprocess.interpolate_dt must divide params.dt");
            }
        }
        if (steps_of(train_duration, data_dt, "experiment.train_duration") < 2) {
            throw ConfigError("experiment.train_duration must span at least 2 steps");
        }
        steps_of(predict_duration, data_dt, "experiment.predict_duration");
        const std::size_t n = subsample.value_or(params.n_agents);
        check("experiment.layout", [&] { FeatureLayout::parse(resolved_layout(), n); });
    }
}

std::string to_ini(const ExperimentConfig& c) {
    std::ostringstream os;
    const auto& p = c.params;
    os << "[experiment]\n";
    os << "name = " << c.name << '\n';
    os << "scenario = " << to_string(c.scenario) << '\n';
    os << "dynamics = " << to_string(c.dynamics) << '\n';
    os << "layout = " << c.resolved_layout() << '\n';
    os << "rank = " << c.rank << '\n';
    os << "train_duration = " << shortest(c.train_duration) << '\n';
    os << "predict_duration = " << shortest(c.predict_duration) << '\n';
    os << "warmup = " << shortest(c.warmup) << '\n';
    os << "threshold = " << shortest(c.threshold) << '\n';
    os << "output_dir = " << c.output_dir.string() << '\n';
    os << "trajectory = " << (c.trajectory ? c.trajectory->string() : "none") << '\n';
    os << "\n[params]\n";
    os << "n_agents = " << p.n_agents << '\n';
    os << "dt = " << shortest(p.dt) << '\n';
    os << "density = " << shortest(p.density) << '\n';
    os << "interaction_radius = " << shortest(p.interaction_radius) << '\n';
    os << "field_of_view = " << (p.field_of_view ? shortest(*p.field_of_view) : "none") << '\n';
    os << "max_turn_rate = " << (p.max_turn_rate ? shortest(*p.max_turn_rate) : "none") << '\n';
    os << "noise = " << shortest(p.noise) << '\n';
    os << "speed = " << shortest(p.speed) << '\n';
    os << "seed = " << p.seed << '\n';
    os << "\n[domain]\n";
    os << "sim_width = " << shortest(c.domain.sim_width) << '\n';
    os << "\n[rollout]\n";
    os << "mode = " << to_string(c.rollout.mode) << '\n';
    os << "reinit_period = " << shortest(c.rollout.reinit_period) << '\n';
    os << "reinit_horizon = " << shortest(c.rollout.reinit_horizon) << '\n';
    os << "\n[preprocess]\n";
    os << "interpolate_dt = " << (c.interpolate_dt ? shortest(*c.interpolate_dt) : "none") << '\n';
    os << "subsample = " << (c.subsample ? std::to_string(*c.subsample) : "none") << '\n';
    os << "\n[metrics]\n";
    os << "centered_momentum = " << (c.centered_momentum ? "true" : "false") << '\n';
    os << "density_bins = " << c.density.bins << '\n';
    os << "density_spacing = " << shortest(c.density.spacing) << '\n';
    os << "density_width = " << shortest(c.density.width) << '\n';
    os << "density_frame = " << (c.density.frame == DensityFrame::world ? "world" : "heading") << '\n';
    os << "\n[output]\n";
    os << "write_model = " << (c.write_model ? "true" : "false") << '\n';
    os << "write_trajectories = " << (c.write_trajectories ? "true" : "false") << '\n';
    return os.str();
}

SwarmTrajectory prepare_ground_truth(const ExperimentConfig& config) {
    const double span = config.train_duration + config.predict_duration;
    SwarmTrajectory raw;
    if (config.trajectory) {
        raw = load_trajectory(*config.trajectory);
    } else {
        raw = simulate(config.params, config.domain, config.scenario, config.warmup + span);
    }
    const std::size_t warm = steps_of(config.warmup, raw.dt, "experiment.warmup");
    const std::size_t steps = steps_of(span, raw.dt, "experiment.train_duration + predict_duration");
    if (raw.size() < warm + steps + 1) {
        throw InvalidArgument("trajectory has " + std::to_string(raw.size()) + " snapshots, the experiment needs " +
                              std::to_string(warm + steps + 1) + " (warmup + train + predict)");
    }
    SwarmTrajectory gt = rebased(raw.slice(warm, steps + 1));
    if (config.interpolate_dt && std::abs(*config.interpolate_dt - gt.dt) > 1e-12 * gt.dt) {
        gt = interpolate_trajectory(gt, *config.interpolate_dt);
    }
    if (config.subsample && *config.subsample < gt.agent_count()) {
        gt = subsample_agents(gt, *config.subsample, config.params.seed);
    }
    return gt;
}

InteractionModel fit_model(const ExperimentConfig& config, const SwarmTrajectory& ground_truth) {
    const std::size_t train_steps = steps_of(config.train_duration, ground_truth.dt, "experiment.train_duration");
    if (ground_truth.size() < train_steps + 1) {
        throw InvalidArgument("ground truth is shorter than the training window");
    }
    const auto train = ground_truth.slice(0, train_steps + 1);
    const auto layout = FeatureLayout::parse(config.resolved_layout(), train.agent_count());
    const auto mats = assemble_matrices(train, layout, config.dynamics);
    return estimate_K(mats, FixedRank{config.rank});
}

SummaryRow score(const SwarmTrajectory& truth, const SwarmTrajectory& prediction, double train_end, double threshold,
                 bool centered_momentum, ScoreSeries* series) {
    ScoreSeries s;
    s.position = position_error(truth, prediction);
    s.heading = heading_error(truth, prediction);

    const auto first = *truth.index_of(prediction.start_time());
    const std::size_t count = std::min(truth.size() - first, prediction.size());
    const auto shared_truth = truth.slice(first, count);
    const auto shared_pred = prediction.slice(0, count);

    s.polarisation_truth = polarisation_series(shared_truth);
    s.polarisation_model = polarisation_series(shared_pred);
    s.momentum_truth = angular_momentum_series(shared_truth, centered_momentum);
    s.momentum_model = angular_momentum_series(shared_pred, centered_momentum);
    {
        auto a = s.polarisation_truth, b = s.polarisation_model;
        align_series(a, b);
        s.polarisation = metric_error_series(a, b);
        s.polarisation.metric = "polarisation_error";
    }
    {
        auto a = s.momentum_truth, b = s.momentum_model;
        align_series(a, b);
        s.momentum = metric_error_series(a, b);
        s.momentum.metric = "angular_momentum_error";
    }

    // Divergence: the first time the prediction no longer covers the truth.
    std::optional<double> cutoff;
    if (count < truth.size() - first) {
        cutoff = std::max(0.0, truth.snapshots[first + count].time - train_end);
    }
    auto time_below = [&](const MetricSeries& m) {
        auto t = first_time_above(m, train_end, threshold);
        if (cutoff && (!t || *t > *cutoff)) t = cutoff;
        return t;
    };

    SummaryRow row;
    row.e_x = mean_until(s.position, train_end);
    row.e_theta = mean_until(s.heading, train_end);
    row.e_P = mean_until(s.polarisation, train_end);
    row.e_M = mean_until(s.momentum, train_end);
    row.t_x = time_below(s.position);
    row.t_theta = time_below(s.heading);
    row.t_P = time_below(s.polarisation);
    row.t_M = time_below(s.momentum);
    if (series) *series = std::move(s);
    return row;
}

namespace {

void write_reinit_outputs(const RolloutResult& family, const SwarmTrajectory& gt, const fs::path& dir) {
    save_rollout_result(family, dir);
    // Mean over rollouts of the position error at each elapsed time.
    std::vector<double> sum;
    std::vector<std::size_t> n;
    std::vector<MetricSeries> curves;
    for (const auto& r : family.rollouts) {
        auto err = position_error(gt, r.trajectory);
        const auto ms = static_cast<long long>(std::llround(r.start_time * 1000.0));
        err.metric = "position_error_" + std::to_string(ms);
        save_series(err, dir / ("error_position_" + std::to_string(ms) + ".csv"));
        for (std::size_t k = 0; k < err.size(); ++k) {
            if (sum.size() <= k) {
                sum.push_back(0.0);
                n.push_back(0);
            }
            sum[k] += err.values[k];
            ++n[k];
        }
        if (curves.size() < 4) curves.push_back(std::move(err));
    }
    MetricSeries mean;
    mean.metric = "mean_position_error";
    for (std::size_t k = 0; k < sum.size(); ++k) {
        mean.times.push_back(static_cast<double>(k) * gt.dt);
        mean.values.push_back(sum[k] / static_cast<double>(n[k]));
    }
    save_series(mean, dir / "error_position_mean.csv");
    save_log_chart({mean}, {"Re-initialised rollouts: mean position error vs elapsed time", "position error", {}, {}},
                   dir / "error_position_mean.svg");
    save_log_chart(curves, {"Re-initialised rollouts: position error", "position error", {}, {}},
                   dir / "error_position.svg");
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const fs::path out = config.output_dir;
    stage("output", [&] {
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    });

    ExperimentReport report;
    report.ground_truth = stage("preprocess", [&] { return prepare_ground_truth(config); });
    const auto& gt = report.ground_truth;
    const InteractionModel model = stage("fit", [&] { return fit_model(config, gt); });
    report.retained_rank = model.rank;

    RolloutConfig basic = config.rollout;
    basic.mode = RolloutMode::basic;
    basic.duration = config.train_duration + config.predict_duration;
    const auto result = stage("rollout", [&] { return rollout_basic(model, gt, basic); });
    report.prediction = result.rollouts.front().trajectory;
    report.divergence = result.rollouts.front().divergence;

    stage("metrics", [&] {
        report.row = score(gt, report.prediction, config.train_duration, config.threshold, config.centered_momentum,
                           &report.series);
        const double t_train = config.train_duration;
        const double t_end = t_train + config.predict_duration;
        report.density_truth_train = neighbor_density(gt, 0.0, t_train, config.density);
        report.density_model_train = neighbor_density(report.prediction, 0.0, t_train, config.density);
        if (config.predict_duration > 0.0) {
            report.density_truth_predict = neighbor_density(gt, t_train, t_end, config.density);
            report.density_model_predict = neighbor_density(report.prediction, t_train, t_end, config.density);
        }
    });
    auto& row = report.row;
    row.name = config.name;
    row.scenario = config.scenario;
    row.dynamics = config.dynamics;
    row.radius = config.params.interaction_radius;
    row.noise = config.params.noise;

    stage("output", [&] {
        if (config.write_trajectories) {
            save_trajectory(gt, out / "ground_truth.csv");
            save_trajectory(report.prediction, out / "prediction.csv");
        }
        if (config.write_model) {
            save_model(model, out / "model.txt");
        }
        const auto& s = report.series;
        save_series(s.position, out / "error_position.csv");
        save_series(s.heading, out / "error_heading.csv");
        save_series(s.polarisation, out / "error_polarisation.csv");
        save_series(s.momentum, out / "error_momentum.csv");
        save_series(s.polarisation_truth, out / "polarisation_truth.csv");
        save_series(s.polarisation_model, out / "polarisation_model.csv");
        save_series(s.momentum_truth, out / "momentum_truth.csv");
        save_series(s.momentum_model, out / "momentum_model.csv");

        const ChartOptions base{"", "", config.train_duration, config.threshold};
        auto chart = [&](const MetricSeries& m, const std::string& title, const std::string& file) {
            ChartOptions o = base;
            o.title = config.name + ": " + title;
            o.y_label = title;
            save_log_chart({m}, o, out / file);
        };
        chart(s.position, "position error", "error_position.svg");
        chart(s.heading, "heading error", "error_heading.svg");
        chart(s.polarisation, "polarisation error", "error_polarisation.svg");
        chart(s.momentum, "angular momentum error", "error_momentum.svg");

        save_density(report.density_truth_train, out / "density_truth_train.csv");
        save_density(report.density_model_train, out / "density_model_train.csv");
        if (config.predict_duration > 0.0) {
            save_density(report.density_truth_predict, out / "density_truth_predict.csv");
            save_density(report.density_model_predict, out / "density_model_predict.csv");
        }

        if (config.rollout.mode == RolloutMode::reinit) {
            const auto family = stage("rollout", [&] { return rollout_with_reinit(model, gt, config.rollout); });
            write_reinit_outputs(family, gt, out / "reinit");
        }

        {
            std::ostringstream csv;
            write_summary_csv(csv, {row});
            write_text(out / "summary.csv", csv.str());
            write_text(out / "summary.txt", format_error_table({row}) + "\n" + format_time_table({row}));
        }

        std::ostringstream manifest;
        manifest << "# Re-running this file as an experiment config reproduces every output here.\n";
        manifest << to_ini(config);
        manifest << "\n[" << kManifestSection << "]\n";
        manifest << "version = " << kVersion << '\n';
        manifest << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION
                 << '\n';
        manifest << "seed = " << config.params.seed << '\n';
        manifest << "retained_rank = " << model.rank << '\n';
        manifest << "diverged_at = " << (report.divergence ? shortest(report.divergence->time) : "none") << '\n';
        write_text(out / "manifest.ini", manifest.str());
    });
    return report;
}

std::size_t SuiteResult::failures() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const SummaryRow& r) { return r.failure.has_value(); }));
}

SuiteConfig load_suite_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open suite " + path.string());
    }
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(path.string() + ": malformed suite: " + e.what());
    }
    const auto base = path.parent_path();
    SuiteConfig suite;
    suite.name = path.stem().string();
    suite.output_dir = resolve_path(base, "out/" + suite.name);
    std::string list;
    for (const auto& [section, body] : tree) {
        if (section != "suite") {
            throw ConfigError(path.string() + ": unknown section [" + section + "] (expected [suite])");
        }
        for (const auto& [key, value] : body) {
            const auto v = trim(value.data());
            if (key == "name") {
                suite.name = v;
            } else if (key == "output_dir") {
                suite.output_dir = resolve_path(base, v);
            } else if (key == "threads") {
                try {
                    suite.threads = static_cast<std::size_t>(std::stoul(v));
                } catch (const std::exception&) {
                    throw ConfigError(path.string() + ": suite.threads must be a non-negative integer");
                }
            } else if (key == "experiments") {
                list = v;
            } else {
                throw ConfigError(path.string() + ": unknown key '" + key + "' in [suite]");
            }
        }
    }
    std::set<std::string> names;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto cfg = load_experiment_config(resolve_path(base, item));
        if (!names.insert(cfg.name).second) {
            throw ConfigError(path.string() + ": duplicate experiment name '" + cfg.name + "'");
        }
        suite.experiments.push_back(std::move(cfg));
    }
    if (suite.experiments.empty()) {
        throw ConfigError(path.string() + ": suite lists no experiments");
    }
    return suite;
}

SuiteResult run_suite(const SuiteConfig& suite) {
    if (suite.experiments.empty()) {
        throw ConfigError("suite lists no experiments");
    }
    std::size_t threads = suite.threads ? suite.threads : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SWARMDMD_THREADS")) {
        const auto cap = std::strtoul(env, nullptr, 10);
        if (cap > 0) threads = std::min<std::size_t>(threads, cap);
    }
    threads = std::min(threads, suite.experiments.size());

    SuiteResult result;
    result.rows.resize(suite.experiments.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < suite.experiments.size(); i = next++) {
            ExperimentConfig cfg = suite.experiments[i];
            cfg.output_dir = suite.output_dir / cfg.name;
            SummaryRow& row = result.rows[i];
            try {
                row = run_experiment(cfg).row;
            } catch (const std::exception& e) {
                row = SummaryRow{};
                row.name = cfg.name;
                row.scenario = cfg.scenario;
                row.dynamics = cfg.dynamics;
                row.radius = cfg.params.interaction_radius;
                row.noise = cfg.params.noise;
                row.failure = e.what();
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::error_code ec;
    fs::create_directories(suite.output_dir, ec);
    if (ec) throw IoError("cannot create " + suite.output_dir.string() + ": " + ec.message());
    write_text(suite.output_dir / "table_errors.txt", format_error_table(result.rows));
    write_text(suite.output_dir / "table_times.txt", format_time_table(result.rows));
    std::ostringstream csv;
    write_summary_csv(csv, result.rows);
    write_text(suite.output_dir / "summary.csv", csv.str());
    return result;
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string seconds(const std::optional<double>& t) {
    if (!t) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", *t);
    return buf;
}

std::string format_table(const std::vector<SummaryRow>& rows, const std::vector<std::string>& metric_names,
                         const std::function<std::vector<std::string>(const SummaryRow&)>& cells) {
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header = {"name", "scenario", "dynamics", "r", "eta"};
    header.insert(header.end(), metric_names.begin(), metric_names.end());
    table.push_back(header);
    for (const auto& r : rows) {
        std::vector<std::string> line = {r.name, to_string(r.scenario), to_string(r.dynamics), short_g(r.radius),
                                         short_g(r.noise)};
        if (r.failure) {
            line.push_back("FAILED: " + *r.failure);
        } else {
            const auto c = cells(r);
            line.insert(line.end(), c.begin(), c.end());
        }
        table.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size() && i < width.size(); ++i) {
            // A failure message spans the metric columns; do not widen them.
            if (i == metric_names.size() + 4 + 1 && line.size() < header.size()) continue;
            width[i] = std::max(width[i], line[i].size());
        }
    }
    std::string out;
    for (const auto& line : table) {
        std::string text;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) text += "  ";
            text += line[i];
            if (i + 1 < line.size() && i < width.size()) text.append(width[i] - std::min(width[i], line[i].size()), ' ');
        }
        out += text + '\n';
    }
    return out;
}

} // namespace

std::string format_error_table(const std::vector<SummaryRow>& rows) {
    return format_table(rows, {"e_x", "e_theta", "e_P", "e_M"}, [](const SummaryRow& r) {
        return std::vector<std::string>{sci(r.e_x), sci(r.e_theta), sci(r.e_P), sci(r.e_M)};
    });
}

std::string format_time_table(const std::vector<SummaryRow>& rows) {
    return format_table(rows, {"t_x", "t_theta", "t_P", "t_M"}, [](const SummaryRow& r) {
        return std::vector<std::string>{seconds(r.t_x), seconds(r.t_theta), seconds(r.t_P), seconds(r.t_M)};
    });
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "name,scenario,dynamics,r,eta,e_x,e_theta,e_P,e_M,t_x,t_theta,t_P,t_M,status\n";
    auto t = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
    for (const auto& r : rows) {
        os << r.name << ',' << to_string(r.scenario) << ',' << to_string(r.dynamics) << ','
           << format_double(r.radius) << ',' << format_double(r.noise) << ',';
        if (r.failure) {
            std::string msg = *r.failure;
            std::replace(msg.begin(), msg.end(), '"', '\'');
            os << ",,,,,,,,\"failed: " << msg << "\"\n";
            continue;
        }
        os << format_double(r.e_x) << ',' << format_double(r.e_theta) << ',' << format_double(r.e_P) << ','
           << format_double(r.e_M) << ',' << t(r.t_x) << ',' << t(r.t_theta) << ',' << t(r.t_P) << ',' << t(r.t_M)
           << ",ok\n";
    }
}

} // namespace swarmdmd
