#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "generators.hpp"
#include "swarmdmd/error.hpp"
#include "swarmdmd/io.hpp"

using namespace swarmdmd;
using swarmdmd::testing::for_all;
using swarmdmd::testing::Gen;

namespace {

SwarmTrajectory parse(const std::string& text) {
    std::istringstream is(text);
    return read_trajectory_csv(is);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const IoError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("trajectory CSV round trip is exact") {
    for_all(20, 61, [](Gen& g) {
        const auto traj = g.trajectory(g.count(2, 6), g.count(1, 7), 0.1);
        std::ostringstream os;
        write_trajectory_csv(os, traj);
        const auto back = parse(os.str());
        CHECK(back == traj);
        std::ostringstream again;
        write_trajectory_csv(again, back);
        CHECK(again.str() == os.str());
    });
}

TEST_CASE("rows may arrive in any order") {
    Gen g(62);
    const auto traj = g.trajectory(4, 3, 0.25);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream in(os.str());
    std::string header, line;
    std::getline(in, header);
    std::vector<std::string> rows;
    while (std::getline(in, line)) rows.push_back(line);
    std::reverse(rows.begin(), rows.end());
    std::swap(rows[1], rows[5]);
    std::string shuffled = header + "\n";
    for (const auto& r : rows) shuffled += r + "\n";
    CHECK(parse(shuffled) == traj);
}

TEST_CASE("single snapshot files have no dt to infer") {
    const auto t = parse("t,agent,x,y,theta\n0,0,1,2,0.5\n0,1,3,4,-0.5\n");
    CHECK(t.size() == 1);
    CHECK(t.agent_count() == 2);
    CHECK(t.snapshots[0].agents[1].position == Eigen::Vector2d(3, 4));
}

TEST_CASE("malformed files name the problem") {
    CHECK(error_of("") == "empty trajectory file");
    CHECK(error_of("t,agent,x,y\n").find("line 1") != std::string::npos);
    CHECK(error_of("t,agent,x,y,theta\n").find("no data rows") != std::string::npos);
    CHECK(error_of("t,agent,x,y,theta\n0,0,1,2,0\n0,1,1,2\n").find("line 3") != std::string::npos);
    CHECK(error_of("t,agent,x,y,theta\n0,0,1,2,0\n0,1,1,abc,0\n").find("line 3: malformed number") !=
          std::string::npos);
    CHECK(error_of("t,agent,x,y,theta\n0,0,nan,2,0\n").find("non-finite") != std::string::npos);
    CHECK(error_of("t,agent,x,y,theta\n0,0,1,2,0\n0,0,1,2,0\n").find("duplicate row for (t=0, agent=0)") !=
          std::string::npos);

    const std::string missing = error_of("t,agent,x,y,theta\n0,0,1,2,0\n0,1,1,2,0\n0.5,0,1,2,0\n");
    CHECK(missing.find("missing row for (t=0.5, agent=1)") != std::string::npos);

    const std::string uneven =
        error_of("t,agent,x,y,theta\n0,0,1,2,0\n0.5,0,1,2,0\n1.5,0,1,2,0\n");
    CHECK(uneven.find("uniformly sampled") != std::string::npos);
}

TEST_CASE("file helpers") {
    Gen g(63);
    const auto traj = g.trajectory(3, 2, 0.1);
    const auto dir = std::filesystem::temp_directory_path() / "swarmdmd_io_test";
    std::filesystem::create_directories(dir);
    save_trajectory(traj, dir / "t.csv");
    CHECK(load_trajectory(dir / "t.csv") == traj);
    CHECK_THROWS_AS(load_trajectory(dir / "absent.csv"), IoError);
    CHECK_THROWS_AS(save_trajectory(traj, dir / "no_such_dir" / "t.csv"), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("format_double keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(-1e-20) == "-9.9999999999999995e-21");
    for_all(100, 64, [](Gen& g) {
        const double v = g.uniform(-1e6, 1e6) * std::pow(10.0, g.uniform(-30, 30));
        CHECK(std::stod(format_double(v)) == v);
    });
}
