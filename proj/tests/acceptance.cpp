// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "swarmdmd/dmd.hpp"
#include "swarmdmd/experiment.hpp"
#include "swarmdmd/metrics.hpp"
#include "swarmdmd/rng.hpp"
#include "swarmdmd/rollout.hpp"
#include "swarmdmd/vicsek.hpp"

using namespace swarmdmd;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
    }
    return m;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [x]");
    }
};

// ---- scenario runs shared by criteria 3, 4, 5 and 8 ----

struct ScenarioRun {
    ExperimentConfig config;
    SwarmTrajectory truth;
    InteractionModel model;
    RolloutTrajectory prediction;
    SummaryRow row;
    double seconds = 0.0;
};

ScenarioRun run_scenario(const std::string& config_name) {
    ScenarioRun run;
    const auto start = Clock::now();
    run.config = load_experiment_config(fs::path(SWARMDMD_SOURCE_DIR) / "configs" / config_name);
    run.truth = prepare_ground_truth(run.config);
    run.model = fit_model(run.config, run.truth);
    RolloutConfig basic;
    basic.duration = run.config.train_duration + run.config.predict_duration;
    run.prediction = rollout_basic(run.model, run.truth, basic).rollouts.front();
    run.row = score(run.truth, run.prediction.trajectory, run.config.train_duration, run.config.threshold,
                    run.config.centered_momentum);
    run.seconds = seconds_since(start);
    return run;
}

// ---- criteria ----

Outcome k_recovery() {
    Outcome out;
    const auto start = Clock::now();
    Rng rng(2024);
    const Eigen::MatrixXd K0 = random_matrix(rng, 4, 8);
    const Eigen::MatrixXd Y = random_matrix(rng, 8, 49);
    Eigen::MatrixXd X(4, 50);
    X.col(0) = random_matrix(rng, 4, 1);
    for (Eigen::Index k = 0; k < 49; ++k) X.col(k + 1) = X.col(k) + K0 * Y.col(k);

    InteractionModel model;
    model.layout = FeatureLayout::parse("position,velocity", 2);
    model.K = estimate_K(X.rightCols(49) - X.leftCols(49), Y, FixedRank{8}, &model.rank);
    model.dt = 0.1;
    const double rel = (model.K - K0).norm() / K0.norm();
    const Eigen::MatrixXd replay = rollout_with_inputs(model, X.col(0), Y);
    const double worst = (replay - X).cwiseAbs().maxCoeff();
    const double t = seconds_since(start);
    out.require(rel <= 1e-8, "relative error " + sci(rel));
    out.require(worst <= 1e-6, "max rollout deviation " + sci(worst));
    out.require(t < 1.0, "runtime " + sci(t) + " s");
    return out;
}

Outcome pseudoinverse() {
    Outcome out;
    const auto start = Clock::now();
    Rng rng(7);
    std::size_t beaten = 0, non_monotone = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const auto rows = static_cast<Eigen::Index>(2 + rng.index(8));
        const auto feats = static_cast<Eigen::Index>(2 + rng.index(10));
        const auto cols = feats + static_cast<Eigen::Index>(rng.index(30));
        const Eigen::MatrixXd S = random_matrix(rng, rows, cols);
        const Eigen::MatrixXd Y = random_matrix(rng, feats, cols);
        const Eigen::MatrixXd K = estimate_K(S, Y, FixedRank{static_cast<std::size_t>(feats)});
        const double best = (S - K * Y).norm();
        for (int c = 0; c < 100; ++c) {
            const double scale = std::pow(10.0, rng.uniform(-6.0, 0.0));
            const Eigen::MatrixXd M = K + scale * random_matrix(rng, rows, feats);
            if ((S - M * Y).norm() < best) ++beaten;
        }
        double previous = INFINITY;
        for (Eigen::Index r = 1; r <= feats; ++r) {
            const double res = (S - estimate_K(S, Y, FixedRank{static_cast<std::size_t>(r)}) * Y).norm();
            if (res > previous * (1.0 + 1e-12)) ++non_monotone;
            previous = res;
        }
    }
    const double t = seconds_since(start);
    out.require(beaten == 0, std::to_string(beaten) + " of 5000 competitors beat the fit");
    out.require(non_monotone == 0, std::to_string(non_monotone) + " rank increases raised the residual");
    out.require(t < 10.0, "runtime " + sci(t) + " s");
    return out;
}

Outcome table_errors(const std::vector<ScenarioRun>& std_runs, const ScenarioRun& milling) {
    Outcome out;
    const double limits[] = {1e-4, 1e-4, 1e-5};
    for (std::size_t i = 0; i < std_runs.size(); ++i) {
        const auto& r = std_runs[i];
        out.require(r.row.e_x <= limits[i] && r.seconds < 60.0,
                    "r=" + sci(r.config.params.interaction_radius) + " e_x " + sci(r.row.e_x) + " (<= " +
                        sci(limits[i]) + ", " + sci(r.seconds) + " s)");
    }
    out.require(milling.row.e_x <= 1e-3 && milling.seconds < 60.0,
                "milling e_x " + sci(milling.row.e_x) + " (<= 1e-3, " + sci(milling.seconds) + " s)");
    return out;
}

Outcome table_times(const std::vector<ScenarioRun>& std_runs) {
    Outcome out;
    auto text = [](const std::optional<double>& t) { return t ? sci(*t) + " s" : std::string("unbounded"); };
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& r = std_runs[i];
        out.require(!r.row.t_x || *r.row.t_x >= 3.0,
                    "r=" + sci(r.config.params.interaction_radius) + " t_x " + text(r.row.t_x) + " (>= 3 s)");
    }
    const auto& wide = std_runs[2];
    // Unbounded over a 10 s horizon: no crossing before train_end + 10.
    out.require(wide.config.predict_duration >= 10.0 && (!wide.row.t_x || *wide.row.t_x >= 10.0),
                "r=0.5 t_x " + text(wide.row.t_x) + " over a " + sci(wide.config.predict_duration) + " s horizon");
    return out;
}

Outcome polar_vs_cartesian() {
    Outcome out;
    for (double r : {0.25, 0.5}) {
        const std::string tag = r == 0.25 ? "r25" : "r5";
        const auto polar = run_scenario("fo_polar_" + tag + ".ini");
        const auto cart = run_scenario("fo_cartesian_" + tag + ".ini");
        out.require(polar.row.e_x < cart.row.e_x,
                    "r=" + sci(r) + " polar " + sci(polar.row.e_x) + " vs Cartesian " + sci(cart.row.e_x));
    }
    return out;
}

Outcome metric_identities() {
    Outcome out;
    Eigen::Matrix2Xd aligned(2, 3), antipodal(2, 2), p(2, 2), v(2, 2);
    aligned << 0.3, 0.3, 0.3, -0.1, -0.1, -0.1;
    antipodal << 1, -1, 2, -2;
    out.require(std::abs(*polarisation(aligned) - 1.0) <= 1e-12, "aligned P = 1");
    out.require(std::abs(*polarisation(antipodal)) <= 1e-12, "antipodal P = 0");
    p << 1, 0, 0, 1;
    v << 0, -1, 1, 0;
    out.require(std::abs(*angular_momentum(p, v) - 1.0) <= 1e-12, "co-rotating M = 1");
    out.require(std::abs(*angular_momentum(p, p)) <= 1e-12, "radial M = 0");

    Rng rng(11);
    std::size_t violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto n = static_cast<Eigen::Index>(1 + rng.index(20));
        const Eigen::Matrix2Xd pos = 5.0 * random_matrix(rng, 2, n);
        const Eigen::Matrix2Xd vel = random_matrix(rng, 2, n);
        const double c = std::pow(10.0, rng.uniform(-3.0, 3.0));
        const double a = rng.uniform(-kPi, kPi);
        Eigen::Matrix2d R;
        R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        const double P = *polarisation(vel);
        const double M = *angular_momentum(pos, vel);
        if (std::abs(*polarisation(c * vel) - P) > 1e-12) ++violations;
        if (std::abs(*angular_momentum(pos, c * vel) - M) > 1e-12) ++violations;
        if (std::abs(*polarisation(R * vel) - P) > 1e-12) ++violations;
        if (std::abs(*angular_momentum(R * pos, R * vel) - M) > 1e-12) ++violations;

        SwarmTrajectory truth, test;
        truth.dt = test.dt = 1.0;
        SwarmSnapshot s1, s2;
        for (Eigen::Index i = 0; i < n; ++i) {
            s1.agents.push_back({pos.col(i), rng.uniform(-kPi, kPi)});
            s2.agents.push_back({pos.col(i), wrap_angle(rng.uniform(-20.0, 20.0))});
        }
        truth.snapshots = {s1};
        test.snapshots = {s2};
        const double h = heading_error(truth, test).values[0];
        if (!(h >= 0.0 && h <= kPi)) ++violations;
    }
    out.require(violations == 0, std::to_string(violations) + " invariance violations in 500 random swarms");
    return out;
}

Outcome simulator_invariants() {
    Outcome out;
    Rng pick(5);
    std::size_t speed_bad = 0, turn_bad = 0;

    SwarmParams sp = scenario_params(SwarmModel::standard);
    sp.noise = kPi / 6;
    SwarmParams mp = scenario_params(SwarmModel::milling);
    mp.n_agents = 200;
    for (int step = 0; step < 1000; ++step) {
        // Fresh random states each step keep the checks away from any one regime.
        Rng rng(pick.next_u64());
        const bool milling = step % 2 == 1;
        const SwarmParams& p = milling ? mp : sp;
        const auto domain = SimDomain::from_params(p);
        const auto before = init_swarm(p, domain, rng);
        const auto after = milling ? step_milling(before, p, rng) : step_standard(before, p, rng);
        for (std::size_t i = 0; i < before.agents.size(); ++i) {
            const double d = (after.agents[i].position - before.agents[i].position).norm();
            const double scale = std::max(1.0, before.agents[i].position.cwiseAbs().maxCoeff());
            if (std::abs(d - p.speed * p.dt) > 1e-12 * scale) ++speed_bad;
            if (milling) {
                const double turn = std::abs(wrap_angle(after.agents[i].heading - before.agents[i].heading));
                if (turn > *p.max_turn_rate * p.dt + 0.5 * p.noise + 1e-12) ++turn_bad;
            }
        }
    }
    out.require(speed_bad == 0, std::to_string(speed_bad) + " displacements off nu*dt");
    out.require(turn_bad == 0, std::to_string(turn_bad) + " milling turns over the bound");

    SwarmParams still = scenario_params(SwarmModel::standard);
    still.noise = 0.0;
    Rng rng(9);
    auto snap = init_swarm(still, SimDomain::from_params(still), rng);
    for (auto& a : snap.agents) a.heading = 0.7;
    bool fixed = true;
    for (int step = 0; step < 1000 && fixed; ++step) {
        snap = step_standard(snap, still, rng);
        for (const auto& a : snap.agents) fixed = fixed && a.heading == 0.7;
    }
    out.require(fixed, "consensus held for 1000 steps");

    SwarmParams rerun = scenario_params(SwarmModel::standard);
    rerun.noise = kPi / 12;
    rerun.seed = 42;
    const auto a = simulate(rerun, SimDomain::from_params(rerun), SwarmModel::standard, 100.0);
    const auto b = simulate(rerun, SimDomain::from_params(rerun), SwarmModel::standard, 100.0);
    SwarmParams mrerun = scenario_params(SwarmModel::milling);
    mrerun.n_agents = 200;
    const auto c = simulate(mrerun, SimDomain::from_params(mrerun), SwarmModel::milling, 1000.0);
    const auto d = simulate(mrerun, SimDomain::from_params(mrerun), SwarmModel::milling, 1000.0);
    out.require(a == b && c == d, "reruns bit-identical");
    return out;
}

Outcome milling_structure(const ScenarioRun& milling) {
    Outcome out;
    const auto& cfg = milling.config;
    const double mill_radius = cfg.params.speed / *cfg.params.max_turn_rate;
    auto ring_ratio = [&](const SwarmTrajectory& traj) {
        const auto grid = neighbor_density(traj, 0.0, cfg.train_duration, cfg.density);
        const double centre = 0.5 * static_cast<double>(cfg.density.bins - 1);
        double best = 0.0;
        for (Eigen::Index row = 0; row < grid.grid.rows(); ++row) {
            for (Eigen::Index col = 0; col < grid.grid.cols(); ++col) {
                const double r = cfg.density.spacing * std::hypot(static_cast<double>(col) - centre,
                                                                  static_cast<double>(row) - centre);
                if (std::abs(r - mill_radius) <= cfg.density.spacing) best = std::max(best, grid.grid(row, col));
            }
        }
        const double mean = grid.grid.mean();
        return mean > 0.0 ? best / mean : 0.0;
    };
    const double truth_ratio = ring_ratio(milling.truth);
    const double model_ratio = ring_ratio(milling.prediction.trajectory);
    out.require(truth_ratio > 2.0, "ground-truth annulus max / mean " + sci(truth_ratio));
    out.require(model_ratio > 2.0, "model annulus max / mean " + sci(model_ratio));

    RolloutConfig reinit;
    reinit.mode = RolloutMode::reinit;
    reinit.reinit_period = 0.5;
    reinit.reinit_horizon = 10.0;
    const auto family = rollout_with_reinit(milling.model, milling.truth, reinit);
    double worst = 0.0;
    for (const auto& r : family.rollouts) {
        worst = std::max(worst, position_error(milling.truth, r.trajectory).values.front());
    }
    out.require(worst == 0.0, std::to_string(family.rollouts.size()) + " restarts, max error at restart " +
                                  sci(worst));
    return out;
}

} // namespace

int main() {
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria;

    std::vector<ScenarioRun> std_runs;
    ScenarioRun milling;
    auto standard_runs = [&]() -> const std::vector<ScenarioRun>& {
        if (std_runs.empty()) {
            for (const char* name : {"standard_r05_eta0.ini", "standard_r25_eta0.ini", "standard_r5_eta0.ini"}) {
                std_runs.push_back(run_scenario(name));
            }
        }
        return std_runs;
    };
    auto milling_run = [&]() -> const ScenarioRun& {
        if (milling.truth.size() == 0) milling = run_scenario("milling.ini");
        return milling;
    };

    criteria.emplace_back("1 K recovery on a linear swarm", k_recovery);
    criteria.emplace_back("2 pseudoinverse optimality and rank monotonicity", pseudoinverse);
    criteria.emplace_back("3 training position errors",
                          [&] { return table_errors(standard_runs(), milling_run()); });
    criteria.emplace_back("4 time below threshold after training", [&] { return table_times(standard_runs()); });
    criteria.emplace_back("5 polar beats Cartesian first-order dynamics", polar_vs_cartesian);
    criteria.emplace_back("6 metric identities", metric_identities);
    criteria.emplace_back("7 simulator invariants", simulator_invariants);
    criteria.emplace_back("8 milling ring and reinit restarts", [&] { return milling_structure(milling_run()); });

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        const auto start = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("error: ") + e.what();
        }
        std::printf("%s  criterion %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                    seconds_since(start));
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
