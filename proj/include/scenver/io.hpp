#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenver/distributions.hpp"
#include "scenver/risk.hpp"
#include "scenver/sim_types.hpp"
#include "scenver/verification.hpp"

namespace scenver {

// Decimal form with 17 significant digits: enough to round-trip any double
// bit-exactly, and byte-stable across runs.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvError : std::runtime_error {
    std::size_t line;
    CsvError(std::string message, std::size_t line_)
        : std::runtime_error(std::move(message)), line(line_) {}
};

namespace detail {

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

inline std::vector<std::string> split_csv_row(const std::string& row) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : row) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_csv_double(const std::string& cell, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        throw CsvError("line " + std::to_string(line) + ": not a number: '" + cell + "'", line);
    }
    if (used != cell.size())
        throw CsvError("line " + std::to_string(line) + ": not a number: '" + cell + "'", line);
    return v;
}

}  // namespace detail

inline void to_json(nlohmann::ordered_json& j, const RngSeed& seed) {
    j = {{"master", seed.master}, {"stream", seed.stream}};
}

inline void from_json(const nlohmann::ordered_json& j, RngSeed& seed) {
    seed.master = j.at("master").get<std::uint64_t>();
    seed.stream = j.at("stream").get<std::uint64_t>();
}

// Single-column sample CSV with a `value` header; when the set carries a
// seed, it lands in `<path>.seed.json`.
inline void write_sample_set_csv(const std::string& path, const SampleSet& set) {
    auto out = detail::open_out(path);
    out << "value\n";
    for (double v : set.values()) out << format_double(v) << "\n";
    if (set.seed()) {
        nlohmann::ordered_json j;
        to_json(j, *set.seed());
        auto sidecar = detail::open_out(path + ".seed.json");
        sidecar << j.dump(2) << "\n";
    }
}

// Reads a single-column value CSV. Header optional when the first row is
// numeric. Error messages carry 1-based line numbers.
inline std::vector<double> read_values_csv(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<double> values;
    std::string row;
    std::size_t line = 0;
    while (std::getline(in, row)) {
        ++line;
        const auto cells = detail::split_csv_row(row);
        if (cells.size() != 1)
            throw CsvError("line " + std::to_string(line) + ": expected one column", line);
        const std::string& cell = cells[0];
        if (cell.empty()) {
            if (line == 1 || in.eof()) continue;
            throw CsvError("line " + std::to_string(line) + ": empty cell", line);
        }
        if (line == 1 && cell == "value") continue;
        values.push_back(detail::parse_csv_double(cell, line));
    }
    return values;
}

// Trajectory dump: `t, x1, y1, th1, ..., xN, yN, thN`, one row per step,
// every number at 17 significant digits so a read-back is bit-exact.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto out = detail::open_out(path);
    const std::size_t n = traj.states.empty() ? 0 : traj.states.front().poses.size();
    out << "t";
    for (std::size_t i = 1; i <= n; ++i)
        out << ",x" << i << ",y" << i << ",th" << i;
    out << "\n";
    for (const auto& state : traj.states) {
        out << format_double(state.time);
        for (const auto& pose : state.poses)
            out << "," << format_double(pose.x) << "," << format_double(pose.y) << ","
                << format_double(pose.heading);
        out << "\n";
    }
}

inline std::vector<WorldState> read_trajectory_csv(const std::string& path) {
    auto in = detail::open_in(path);
    std::vector<WorldState> states;
    std::string row;
    std::size_t line = 0;
    std::size_t n_cols = 0;
    while (std::getline(in, row)) {
        ++line;
        if (row.empty()) continue;
        const auto cells = detail::split_csv_row(row);
        if (line == 1) {
            if (cells.empty() || cells[0] != "t" || cells.size() % 3 != 1)
                throw CsvError("line 1: bad trajectory header", 1);
            n_cols = cells.size();
            continue;
        }
        if (cells.size() != n_cols)
            throw CsvError("line " + std::to_string(line) + ": wrong column count", line);
        WorldState state;
        state.time = detail::parse_csv_double(cells[0], line);
        for (std::size_t i = 1; i < cells.size(); i += 3) {
            RobotPose pose;
            pose.x = detail::parse_csv_double(cells[i], line);
            pose.y = detail::parse_csv_double(cells[i + 1], line);
            pose.heading = detail::parse_csv_double(cells[i + 2], line);
            state.poses.push_back(pose);
        }
        states.push_back(std::move(state));
    }
    return states;
}

inline nlohmann::ordered_json sim_config_to_json(const SimConfig& cfg) {
    return {{"robot_count", cfg.robot_count},
            {"dt", cfg.dt},
            {"horizon", cfg.horizon},
            {"v_max", cfg.v_max},
            {"omega_max", cfg.omega_max},
            {"lookahead", cfg.lookahead},
            {"gain", cfg.gain},
            {"safety_radius", cfg.safety_radius},
            {"cbf_gain", cfg.cbf_gain},
            {"qp_tolerance", cfg.qp_tolerance},
            {"qp_max_iterations", cfg.qp_max_iterations},
            {"noise_sigma", cfg.noise_sigma},
            {"workspace",
             {{"x_min", cfg.workspace.x_min},
              {"x_max", cfg.workspace.x_max},
              {"y_min", cfg.workspace.y_min},
              {"y_max", cfg.workspace.y_max}}}};
}

inline nlohmann::ordered_json metric_params_to_json(const MetricParams& params) {
    return {{"collision_radius", params.collision_radius},
            {"goal_radius", params.goal_radius},
            {"horizon", params.horizon},
            {"any_robot_reaches", params.any_robot_reaches},
            {"literal_time_ops", params.literal_time_ops}};
}

// Sidecar for a trajectory dump: everything needed to replay it and check
// the recorded robustness.
inline void write_trajectory_sidecar(const std::string& path, const Trajectory& traj,
                                     const SystemUnderTest& sut, RngSeed seed,
                                     double robustness) {
    nlohmann::ordered_json j;
    j["goals"] = nlohmann::ordered_json::array();
    for (const auto& g : traj.goals) j["goals"].push_back({g.x, g.y});
    j["config"] = sim_config_to_json(sut.sim);
    j["metric"] = metric_params_to_json(sut.metric);
    nlohmann::ordered_json seed_json;
    to_json(seed_json, seed);
    j["seed"] = seed_json;
    j["rho"] = robustness;
    j["qp_fallback_steps"] = traj.qp_fallback_steps;
    j["max_qp_residual"] = traj.max_qp_residual;
    auto out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

inline nlohmann::ordered_json report_to_json(const VerificationReport& report) {
    nlohmann::ordered_json j;
    j["epsilon"] = report.epsilon;
    j["gamma"] = report.gamma;
    j["n_required"] = report.n_required;
    j["n_used"] = report.n_used;
    j["bound"] = report.bound;
    nlohmann::ordered_json seed_json;
    to_json(seed_json, report.seed);
    j["seed"] = seed_json;
    if (report.holdout_size)
        j["holdout_size"] = *report.holdout_size;
    else
        j["holdout_size"] = nullptr;
    if (report.holdout_violation_fraction)
        j["holdout_violation_fraction"] = *report.holdout_violation_fraction;
    else
        j["holdout_violation_fraction"] = nullptr;
    j["bound_nonnegative"] = report.bound_nonnegative;
    j["elapsed"] = report.elapsed;
    return j;
}

inline VerificationReport report_from_json(const nlohmann::ordered_json& j) {
    VerificationReport report;
    report.epsilon = j.at("epsilon").get<double>();
    report.gamma = j.at("gamma").get<double>();
    report.n_required = j.at("n_required").get<std::size_t>();
    report.n_used = j.at("n_used").get<std::size_t>();
    report.bound = j.at("bound").get<double>();
    from_json(j.at("seed"), report.seed);
    if (!j.at("holdout_size").is_null())
        report.holdout_size = j.at("holdout_size").get<std::size_t>();
    if (!j.at("holdout_violation_fraction").is_null())
        report.holdout_violation_fraction = j.at("holdout_violation_fraction").get<double>();
    report.bound_nonnegative = j.at("bound_nonnegative").get<bool>();
    report.elapsed = j.at("elapsed").get<double>();
    return report;
}

inline void write_report_json(const std::string& path, const VerificationReport& report) {
    auto out = detail::open_out(path);
    out << report_to_json(report).dump(2) << "\n";
}

inline VerificationReport read_report_json(const std::string& path) {
    auto in = detail::open_in(path);
    nlohmann::ordered_json j;
    in >> j;
    return report_from_json(j);
}

// Robustness sample dump (`index,r,seed_stream`) plus a `<path>.states.csv`
// sidecar holding the initial poses and goals of every sample for replay.
inline void write_samples_csv(const std::string& path,
                              const std::vector<RobustnessSample>& samples) {
    auto out = detail::open_out(path);
    out << "index,r,seed_stream\n";
    for (std::size_t i = 0; i < samples.size(); ++i)
        out << i << "," << format_double(samples[i].r) << "," << samples[i].seed.stream << "\n";

    const std::size_t n = samples.empty() ? 0 : samples.front().x0.poses.size();
    auto sidecar = detail::open_out(path + ".states.csv");
    sidecar << "index";
    for (std::size_t i = 1; i <= n; ++i)
        sidecar << ",x" << i << ",y" << i << ",th" << i;
    for (std::size_t i = 1; i <= n; ++i) sidecar << ",gx" << i << ",gy" << i;
    sidecar << "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        sidecar << i;
        for (const auto& pose : samples[i].x0.poses)
            sidecar << "," << format_double(pose.x) << "," << format_double(pose.y) << ","
                    << format_double(pose.heading);
        for (const auto& g : samples[i].goals)
            sidecar << "," << format_double(g.x) << "," << format_double(g.y);
        sidecar << "\n";
    }
}

}  // namespace scenver
