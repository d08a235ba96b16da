#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string output;
};

fs::path workdir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / "swarmdmd_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result cli(const std::string& args) {
    const auto log = workdir() / "last_output.txt";
    const std::string cmd = std::string("\"") + SWARMDMD_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream is(log);
    std::ostringstream os;
    os << is.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, os.str()};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

fs::path write_config(const std::string& name, const std::string& body) {
    const auto p = workdir() / name;
    std::ofstream(p) << body;
    return p;
}

const char* kSmall = "[experiment]\nname = small\ntrain_duration = 2\npredict_duration = 1\nrank = 6\n"
                     "[params]\nn_agents = 12\ninteraction_radius = 0.5\n";

} // namespace

TEST_CASE("version and usage") {
    const auto v = cli("--version");
    CHECK(v.code == 0);
    CHECK(v.output.find("0.1.0") != std::string::npos);
    CHECK(cli("--help").code == 0);
    CHECK(cli("").code == 1);
    CHECK(cli("fit").code == 1);
    CHECK(cli("teleport").code == 1);
}

TEST_CASE("simulate, fit, rollout, score") {
    const auto dir = workdir();
    const auto cfg = write_config("small.ini", kSmall);

    auto r = cli("simulate -c " + q(cfg) + " -o " + q(dir / "gt.csv"));
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("31 snapshots of 12 agents") != std::string::npos);

    r = cli("simulate --raw --seed 2 -c " + q(cfg) + " -o " + q(dir / "raw.csv"));
    CHECK(r.code == 0);

    r = cli("fit -c " + q(cfg) + " -t " + q(dir / "gt.csv") + " -o " + q(dir / "model.txt"));
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("rank 6") != std::string::npos);

    r = cli("rollout -m " + q(dir / "model.txt") + " -t " + q(dir / "gt.csv") + " -d 3 -o " + q(dir / "pred.csv"));
    REQUIRE_MESSAGE(r.code == 0, r.output);

    r = cli("score --truth " + q(dir / "gt.csv") + " --test " + q(dir / "pred.csv") + " --train-end 2");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("training mean error") != std::string::npos);

    r = cli("score --truth " + q(dir / "gt.csv") + " --test " + q(dir / "gt.csv") + " --train-end 2");
    CHECK(r.output.find("position never") != std::string::npos);
}

TEST_CASE("run writes the experiment directory") {
    const auto dir = workdir();
    const auto cfg = write_config("run.ini", kSmall);
    const auto r = cli("run -c " + q(cfg) + " --seed 5 --out " + q(dir / "run_out"));
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(fs::exists(dir / "run_out" / "manifest.ini"));
    std::ifstream manifest(dir / "run_out" / "manifest.ini");
    std::stringstream text;
    text << manifest.rdbuf();
    CHECK(text.str().find("seed = 5") != std::string::npos);
}

TEST_CASE("exit codes") {
    const auto dir = workdir();
    const auto bad = write_config("bad.ini", "[experiment]\ncolour = blue\n");
    auto r = cli("run -c " + q(bad));
    CHECK(r.code == 1);
    CHECK(r.output.find("colour") != std::string::npos);

    r = cli("run -c " + q(dir / "absent.ini"));
    CHECK(r.code == 2);

    const auto gone = write_config("gone.ini", "[experiment]\nname = gone\ntrajectory = nothing.csv\n");
    r = cli("run -c " + q(gone));
    CHECK(r.code == 2);
    CHECK(r.output.find("preprocess") != std::string::npos);

    write_config("ok.ini", kSmall);
    const auto suite = write_config("partial.ini", "[suite]\nexperiments = ok.ini, gone.ini\n");
    r = cli("suite " + q(suite) + " --out " + q(dir / "tables"));
    CHECK(r.code == 3);
    CHECK(r.output.find("1 of 2 experiments completed") != std::string::npos);
    CHECK(fs::exists(dir / "tables" / "table_errors.txt"));

    const auto good = write_config("good.ini", "[suite]\nexperiments = ok.ini\n");
    r = cli("suite " + q(good) + " --out " + q(dir / "tables_ok"));
    CHECK(r.code == 0);
}
