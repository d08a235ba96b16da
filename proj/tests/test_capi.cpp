#include <doctest.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "swarmdmd/swarmdmd.h"

namespace fs = std::filesystem;

namespace {

std::string config_text(const sdmd_config* c) {
    size_t required = 0;
    REQUIRE(sdmd_config_text(c, nullptr, 0, &required) == SDMD_OK);
    std::string text(required, '\0');
    REQUIRE(sdmd_config_text(c, text.data(), text.size(), &required) == SDMD_OK);
    text.resize(required - 1);
    return text;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("swarmdmd_capi_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small standard configuration: 12 agents, 2 s training, 1 s prediction.
sdmd_config* small_config(const fs::path& out) {
    sdmd_config* c = nullptr;
    REQUIRE(sdmd_config_default("standard", &c) == SDMD_OK);
    const char* entries[][3] = {
        {"experiment", "name", "capi"},          {"experiment", "train_duration", "2"},
        {"experiment", "predict_duration", "1"}, {"experiment", "rank", "6"},
        {"params", "n_agents", "12"},            {"params", "interaction_radius", "0.5"},
    };
    for (const auto& e : entries) REQUIRE(sdmd_config_set(c, e[0], e[1], e[2]) == SDMD_OK);
    REQUIRE(sdmd_config_set(c, "experiment", "output_dir", out.string().c_str()) == SDMD_OK);
    return c;
}

} // namespace

TEST_CASE("library metadata") {
    CHECK(std::string(sdmd_version()) == "0.1.0");
    CHECK(std::string(sdmd_status_name(SDMD_OK)) == "ok");
    CHECK(std::string(sdmd_status_name(SDMD_CONFIG)) == "configuration error");
    CHECK(std::string(sdmd_status_name(static_cast<sdmd_status>(42))) == "unknown status");
}

TEST_CASE("errors set and clear the last message") {
    sdmd_config* c = nullptr;
    CHECK(sdmd_config_default("spiral", &c) == SDMD_CONFIG);
    CHECK(c == nullptr);
    CHECK(std::strlen(sdmd_last_error()) > 0);
    REQUIRE(sdmd_config_default("standard", &c) == SDMD_OK);
    CHECK(std::string(sdmd_last_error()).empty());

    CHECK(sdmd_config_load("/nonexistent/exp.ini", &c) == SDMD_IO);
    CHECK(std::string(sdmd_last_error()).find("/nonexistent/exp.ini") != std::string::npos);
    sdmd_config_free(c);
}

TEST_CASE("null arguments are rejected") {
    sdmd_config* c = nullptr;
    CHECK(sdmd_config_default(nullptr, &c) == SDMD_INVALID_ARGUMENT);
    CHECK(sdmd_config_default("standard", nullptr) == SDMD_INVALID_ARGUMENT);
    CHECK(sdmd_config_set(nullptr, "a", "b", "c") == SDMD_INVALID_ARGUMENT);
    sdmd_trajectory_info info;
    CHECK(sdmd_trajectory_info_get(nullptr, &info) == SDMD_INVALID_ARGUMENT);
    sdmd_summary summary;
    CHECK(sdmd_score(nullptr, nullptr, 1.0, 0.1, 0, &summary) == SDMD_INVALID_ARGUMENT);
    sdmd_config_free(nullptr);
    sdmd_trajectory_free(nullptr);
    sdmd_model_free(nullptr);
    sdmd_suite_free(nullptr);
}

TEST_CASE("config_set validates and leaves the config unchanged on failure") {
    sdmd_config* c = nullptr;
    REQUIRE(sdmd_config_default("milling", &c) == SDMD_OK);
    const std::string before = config_text(c);
    CHECK(before.find("n_agents = 1000") != std::string::npos);

    CHECK(sdmd_config_set(c, "params", "wingspan", "3") == SDMD_CONFIG);
    CHECK(sdmd_config_set(c, "experiment", "rank", "0") == SDMD_CONFIG);
    CHECK(sdmd_config_set(c, "params", "density", "pi*") == SDMD_CONFIG);
    CHECK(config_text(c) == before);

    // Derived milling noise follows the turn rate.
    REQUIRE(sdmd_config_set(c, "params", "max_turn_rate", "pi/9") == SDMD_OK);
    const std::string after = config_text(c);
    char num[64];
    const auto res = std::to_chars(num, num + sizeof num, 0.5 * 3.141592653589793 / 9);
    CHECK(after.find("noise = " + std::string(num, res.ptr) + "\n") != std::string::npos);
    sdmd_config_free(c);
}

TEST_CASE("config_text truncates safely") {
    sdmd_config* c = nullptr;
    REQUIRE(sdmd_config_default("standard", &c) == SDMD_OK);
    char buf[8];
    size_t required = 0;
    REQUIRE(sdmd_config_text(c, buf, sizeof buf, &required) == SDMD_OK);
    CHECK(required > sizeof buf);
    CHECK(std::strlen(buf) == 7);
    CHECK(std::string(buf) == "[experi");

    const auto dir = scratch("config");
    REQUIRE(sdmd_config_write(c, (dir / "c.ini").string().c_str()) == SDMD_OK);
    sdmd_config* back = nullptr;
    REQUIRE(sdmd_config_load((dir / "c.ini").string().c_str(), &back) == SDMD_OK);
    CHECK(config_text(back) == config_text(c));
    sdmd_config_free(back);
    sdmd_config_free(c);
    fs::remove_all(dir);
}

TEST_CASE("trajectory handles") {
    const double x[] = {0, 1, 0.5, 1.5, 1.0, 2.0};
    const double y[] = {0, 0, 0, 0, 0, 0};
    const double th[] = {0, 0, 0, 0, 0, 0};
    sdmd_trajectory* t = nullptr;
    REQUIRE(sdmd_trajectory_create(3, 2, 0.5, 1.0, x, y, th, &t) == SDMD_OK);
    sdmd_trajectory_info info{};
    REQUIRE(sdmd_trajectory_info_get(t, &info) == SDMD_OK);
    CHECK(info.n_snapshots == 3);
    CHECK(info.n_agents == 2);
    CHECK(info.dt == 0.5);
    CHECK(info.start_time == 1.0);

    double time = 0, xs[2], ys[2];
    REQUIRE(sdmd_trajectory_snapshot(t, 1, &time, xs, ys, nullptr) == SDMD_OK);
    CHECK(time == 1.5);
    CHECK(xs[0] == 0.5);
    CHECK(xs[1] == 1.5);
    CHECK(sdmd_trajectory_snapshot(t, 3, &time, xs, ys, nullptr) == SDMD_INVALID_ARGUMENT);

    sdmd_trajectory* fine = nullptr;
    REQUIRE(sdmd_trajectory_interpolate(t, 0.25, &fine) == SDMD_OK);
    REQUIRE(sdmd_trajectory_info_get(fine, &info) == SDMD_OK);
    CHECK(info.n_snapshots == 5);
    CHECK(sdmd_trajectory_interpolate(t, 0.3, &fine) == SDMD_INVALID_ARGUMENT);

    sdmd_trajectory* sub = nullptr;
    REQUIRE(sdmd_trajectory_subsample(t, 1, 7, &sub) == SDMD_OK);
    REQUIRE(sdmd_trajectory_info_get(sub, &info) == SDMD_OK);
    CHECK(info.n_agents == 1);
    CHECK(sdmd_trajectory_subsample(t, 3, 7, &sub) == SDMD_INVALID_ARGUMENT);

    const auto dir = scratch("traj");
    const auto path = (dir / "t.csv").string();
    REQUIRE(sdmd_trajectory_save(t, path.c_str()) == SDMD_OK);
    sdmd_trajectory* loaded = nullptr;
    REQUIRE(sdmd_trajectory_load(path.c_str(), &loaded) == SDMD_OK);
    REQUIRE(sdmd_trajectory_info_get(loaded, &info) == SDMD_OK);
    CHECK(info.n_snapshots == 3);
    CHECK(sdmd_trajectory_load((dir / "missing.csv").string().c_str(), &loaded) == SDMD_IO);

    const double bad[] = {0, NAN, 0, 0, 0, 0};
    sdmd_trajectory* invalid = nullptr;
    CHECK(sdmd_trajectory_create(3, 2, 0.5, 0.0, bad, y, th, &invalid) == SDMD_INVALID_ARGUMENT);
    CHECK(invalid == nullptr);
    CHECK(sdmd_trajectory_create(3, 2, 0.0, 0.0, x, y, th, &invalid) == SDMD_INVALID_ARGUMENT);

    sdmd_trajectory_free(loaded);
    sdmd_trajectory_free(sub);
    sdmd_trajectory_free(fine);
    sdmd_trajectory_free(t);
    fs::remove_all(dir);
}

TEST_CASE("simulate, fit, roll out and score") {
    const auto dir = scratch("pipeline");
    sdmd_config* c = small_config(dir / "out");

    sdmd_trajectory* raw = nullptr;
    REQUIRE(sdmd_simulate(c, &raw) == SDMD_OK);
    sdmd_trajectory_info info{};
    REQUIRE(sdmd_trajectory_info_get(raw, &info) == SDMD_OK);
    CHECK(info.n_snapshots == 31);
    CHECK(info.n_agents == 12);

    sdmd_trajectory* gt = nullptr;
    REQUIRE(sdmd_prepare_ground_truth(c, &gt) == SDMD_OK);

    sdmd_model* m = nullptr;
    REQUIRE(sdmd_fit_window(c, gt, &m) == SDMD_OK);
    sdmd_model_info mi{};
    REQUIRE(sdmd_model_info_get(m, &mi) == SDMD_OK);
    CHECK(mi.n_agents == 12);
    CHECK(mi.n_features == 12 * (2 + 2 + 1 + 12));
    CHECK(mi.rank == 6);
    CHECK(std::string(mi.dynamics) == "standard");
    CHECK(std::string(mi.layout) == "position,velocity,heading,rel_distance");

    std::vector<double> K(24 * mi.n_features);
    CHECK(sdmd_model_matrix(m, K.data(), K.size() - 1) == SDMD_INVALID_ARGUMENT);
    REQUIRE(sdmd_model_matrix(m, K.data(), K.size()) == SDMD_OK);

    const auto model_path = (dir / "model.txt").string();
    REQUIRE(sdmd_model_save(m, model_path.c_str()) == SDMD_OK);
    sdmd_model* m2 = nullptr;
    REQUIRE(sdmd_model_load(model_path.c_str(), &m2) == SDMD_OK);
    std::vector<double> K2(K.size());
    REQUIRE(sdmd_model_matrix(m2, K2.data(), K2.size()) == SDMD_OK);
    CHECK(K2 == K);

    sdmd_trajectory* pred = nullptr;
    double diverged = 0.0;
    REQUIRE(sdmd_rollout(m2, gt, 3.0, &pred, &diverged) == SDMD_OK);
    CHECK(std::isnan(diverged));
    REQUIRE(sdmd_trajectory_info_get(pred, &info) == SDMD_OK);
    CHECK(info.n_snapshots == 31);

    sdmd_summary s{};
    REQUIRE(sdmd_score(gt, pred, 2.0, 0.1, 0, &s) == SDMD_OK);
    CHECK(s.e_x >= 0.0);
    CHECK(s.e_x < 0.1);

    sdmd_summary self{};
    REQUIRE(sdmd_score(gt, gt, 2.0, 0.1, 0, &self) == SDMD_OK);
    CHECK(self.e_x == 0.0);
    CHECK(std::isinf(self.t_x));

    size_t n = 0;
    REQUIRE(sdmd_rollout_reinit_write(m, gt, 0.5, 1.0, (dir / "reinit").string().c_str(), &n) == SDMD_OK);
    CHECK(n == 6);
    CHECK(fs::exists(dir / "reinit" / "rollout_500.csv"));

    sdmd_summary run{};
    REQUIRE(sdmd_run_experiment(c, &run) == SDMD_OK);
    CHECK(run.e_x == doctest::Approx(s.e_x));
    CHECK(fs::exists(dir / "out" / "manifest.ini"));

    sdmd_trajectory_free(pred);
    sdmd_model_free(m2);
    sdmd_model_free(m);
    sdmd_trajectory_free(gt);
    sdmd_trajectory_free(raw);
    sdmd_config_free(c);
    fs::remove_all(dir);
}

TEST_CASE("mismatched inputs map to status codes") {
    const auto dir = scratch("mismatch");
    sdmd_config* c = small_config(dir);
    sdmd_trajectory* gt = nullptr;
    REQUIRE(sdmd_prepare_ground_truth(c, &gt) == SDMD_OK);
    sdmd_model* m = nullptr;
    REQUIRE(sdmd_fit_window(c, gt, &m) == SDMD_OK);

    sdmd_trajectory* fewer = nullptr;
    REQUIRE(sdmd_trajectory_subsample(gt, 5, 1, &fewer) == SDMD_OK);
    sdmd_trajectory* pred = nullptr;
    CHECK(sdmd_rollout(m, fewer, 1.0, &pred, nullptr) == SDMD_INVALID_ARGUMENT);
    CHECK(pred == nullptr);

    const double x[] = {0, 0, 0, 0};
    sdmd_trajectory* still = nullptr;
    REQUIRE(sdmd_trajectory_create(4, 1, 0.1, 0.0, x, x, x, &still) == SDMD_OK);
    sdmd_model* none = nullptr;
    sdmd_config* one = nullptr;
    REQUIRE(sdmd_config_default("standard", &one) == SDMD_OK);
    REQUIRE(sdmd_config_set(one, "experiment", "layout", "position") == SDMD_OK);
    CHECK(sdmd_fit(one, still, &none) == SDMD_NUMERICS);
    CHECK(none == nullptr);

    sdmd_config_free(one);
    sdmd_trajectory_free(still);
    sdmd_trajectory_free(fewer);
    sdmd_model_free(m);
    sdmd_trajectory_free(gt);
    sdmd_config_free(c);
    fs::remove_all(dir);
}

TEST_CASE("suites") {
    const auto dir = scratch("suite");
    std::ofstream(dir / "a.ini") << "[experiment]\nname = a\ntrain_duration = 2\npredict_duration = 1\nrank = "
                                    "6\n[params]\nn_agents = 12\ninteraction_radius = 0.5\n";
    std::ofstream(dir / "b.ini") << "[experiment]\nname = b\ntrajectory = nowhere.csv\n";
    std::ofstream(dir / "s.ini") << "[suite]\nexperiments = a.ini, b.ini\n";

    sdmd_suite* s = nullptr;
    REQUIRE(sdmd_suite_load((dir / "s.ini").string().c_str(), &s) == SDMD_OK);
    size_t n = 0;
    REQUIRE(sdmd_suite_size(s, &n) == SDMD_OK);
    CHECK(n == 2);
    REQUIRE(sdmd_suite_set_output(s, (dir / "tables").string().c_str()) == SDMD_OK);
    size_t failed = 0;
    REQUIRE(sdmd_suite_run(s, &failed) == SDMD_OK);
    CHECK(failed == 1);
    CHECK(fs::exists(dir / "tables" / "summary.csv"));
    CHECK(fs::exists(dir / "tables" / "a" / "manifest.ini"));
    sdmd_suite_free(s);

    std::ofstream(dir / "bad.ini") << "[suite]\nexperiments = missing.ini\n";
    CHECK(sdmd_suite_load((dir / "bad.ini").string().c_str(), &s) == SDMD_IO);
    fs::remove_all(dir);
}
