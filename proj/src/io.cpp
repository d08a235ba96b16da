#include "swarmdmd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

#include "swarmdmd/error.hpp"

namespace swarmdmd {

namespace {

struct Row {
    double t;
    std::size_t agent;
    double x, y, theta;
};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view field, T& out) {
    field = trim(field);
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace

std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    (void)ec;
    return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& os, const SwarmTrajectory& traj) {
    os << "t,agent,x,y,theta\n";
    for (const auto& snap : traj.snapshots) {
        const std::string t = format_double(snap.time);
        for (std::size_t i = 0; i < snap.agents.size(); ++i) {
            const auto& a = snap.agents[i];
            os << t << ',' << i << ',' << format_double(a.position.x()) << ',' << format_double(a.position.y()) << ','
               << format_double(a.heading) << '\n';
        }
    }
}

void save_trajectory(const SwarmTrajectory& traj, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    write_trajectory_csv(os, traj);
    if (!os) {
        throw IoError("failed writing " + path.string());
    }
}

SwarmTrajectory read_trajectory_csv(std::istream& is) {
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<Row> rows;

    while (std::getline(is, line)) {
        ++line_no;
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (view != "t,agent,x,y,theta") {
                throw IoError("line " + std::to_string(line_no) + ": expected header 't,agent,x,y,theta'");
            }
            continue;
        }
        std::string_view fields[5];
        std::size_t count = 0;
        std::size_t start = 0;
        while (count < 5) {
            const std::size_t comma = view.find(',', start);
            if (comma == std::string_view::npos) {
                fields[count++] = view.substr(start);
                break;
            }
            fields[count++] = view.substr(start, comma - start);
            start = comma + 1;
            if (count == 5) {
                throw IoError("line " + std::to_string(line_no) + ": too many fields");
            }
        }
        if (count != 5) {
            throw IoError("line " + std::to_string(line_no) + ": expected 5 fields, found " + std::to_string(count));
        }
        Row r{};
        if (!parse_number(fields[0], r.t) || !parse_number(fields[1], r.agent) || !parse_number(fields[2], r.x) ||
            !parse_number(fields[3], r.y) || !parse_number(fields[4], r.theta)) {
            throw IoError("line " + std::to_string(line_no) + ": malformed number");
        }
        if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.theta)) {
            throw IoError("line " + std::to_string(line_no) + ": non-finite value");
        }
        rows.push_back(r);
    }
    if (!header_seen) {
        throw IoError("empty trajectory file");
    }
    if (rows.empty()) {
        throw IoError("trajectory file has no data rows");
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.t < b.t || (a.t == b.t && a.agent < b.agent);
    });

    std::size_t n_agents = 0;
    for (const auto& r : rows) n_agents = std::max(n_agents, r.agent + 1);

    SwarmTrajectory traj;
    std::size_t i = 0;
    while (i < rows.size()) {
        SwarmSnapshot snap;
        snap.time = rows[i].t;
        std::size_t expected_agent = 0;
        for (; i < rows.size() && rows[i].t == snap.time; ++i) {
            const auto& r = rows[i];
            if (r.agent < expected_agent) {
                throw IoError("duplicate row for (t=" + format_double(r.t) + ", agent=" + std::to_string(r.agent) + ")");
            }
            if (r.agent > expected_agent) {
                throw IoError("missing row for (t=" + format_double(snap.time) +
                              ", agent=" + std::to_string(expected_agent) + ")");
            }
            snap.agents.push_back({Eigen::Vector2d(r.x, r.y), wrap_angle(r.theta)});
            ++expected_agent;
        }
        if (expected_agent != n_agents) {
            throw IoError("missing row for (t=" + format_double(snap.time) + ", agent=" + std::to_string(expected_agent) +
                          ")");
        }
        traj.snapshots.push_back(std::move(snap));
    }

    traj.dt = 1.0;
    if (traj.size() >= 2) {
        const double estimate =
            (traj.end_time() - traj.start_time()) / static_cast<double>(traj.size() - 1);
        // Snap to the short decimal the writer most likely started from.
        char buf[32];
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), estimate, std::chars_format::general, 12);
        double snapped = estimate;
        std::from_chars(buf, ptr, snapped);
        traj.dt = std::abs(snapped - estimate) <= 1e-12 * std::abs(estimate) ? snapped : estimate;
    }
    if (auto report = validate_trajectory(traj); !report.ok()) {
        throw IoError("trajectory file is not uniformly sampled:\n" + report.to_string());
    }
    return traj;
}

SwarmTrajectory load_trajectory(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return read_trajectory_csv(is);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

} // namespace swarmdmd
