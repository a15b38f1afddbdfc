#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scenver/domain.hpp"
#include "scenver/qp.hpp"
#include "scenver/rng.hpp"
#include "scenver/sim_types.hpp"

namespace scenver {

// Raised when integration produces a non-finite state. Carries enough
// context to replay the offending trajectory.
struct SimulatorFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Proportional go-to-goal law on the planar position, saturated at v_max.
// Zero exactly at the goal; otherwise points from the robot toward it.
inline Vec2 lyapunov_controller(const RobotPose& pose, Vec2 goal, const SimConfig& cfg) {
    Vec2 u{cfg.gain * (goal.x - pose.x), cfg.gain * (goal.y - pose.y)};
    const double mag = norm(u);
    if (mag > cfg.v_max) u = (cfg.v_max / mag) * u;
    return u;
}

// Look-ahead-point map from a planar velocity command to unicycle inputs:
// v follows the heading component, omega turns the offset point sideways.
inline ControlInput si_to_unicycle(const RobotPose& pose, Vec2 si, const SimConfig& cfg) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    double v = c * si.x + s * si.y;
    double omega = (-s * si.x + c * si.y) / cfg.lookahead;
    v = std::clamp(v, -cfg.v_max, cfg.v_max);
    omega = std::clamp(omega, -cfg.omega_max, cfg.omega_max);
    return {v, omega};
}

struct FilterResult {
    std::vector<Vec2> velocities;
    bool fallback = false;   // QP infeasible or unconverged; all-stop applied
    double residual = 0.0;   // worst constraint violation at the returned velocities
};

// Joint minimum-deviation safety filter. For every robot pair the barrier
// h = ||p_i - p_j||^2 - safety_radius^2 induces the linear constraint
//   2 (p_i - p_j) . (u_i - u_j) >= -cbf_gain * h
// on the stacked planar velocities. Infeasibility (or an unconverged solve)
// falls back to all-stop, reported through `fallback` for the trajectory
// record.
inline FilterResult cbf_qp_filter(const WorldState& world, std::span<const Vec2> nominal,
                                  const SimConfig& cfg) {
    const std::size_t n = world.poses.size();
    if (nominal.size() != n)
        throw std::invalid_argument("nominal velocity count does not match robot count");
    FilterResult out;
    if (n < 2) {
        out.velocities.assign(nominal.begin(), nominal.end());
        return out;
    }

    std::vector<std::vector<double>> rows;
    std::vector<double> bounds;
    rows.reserve(n * (n - 1) / 2);
    bounds.reserve(rows.capacity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec2 dp = world.poses[i].position() - world.poses[j].position();
            const double h = dot(dp, dp) - cfg.safety_radius * cfg.safety_radius;
            std::vector<double> row(2 * n, 0.0);
            row[2 * i] = 2.0 * dp.x;
            row[2 * i + 1] = 2.0 * dp.y;
            row[2 * j] = -2.0 * dp.x;
            row[2 * j + 1] = -2.0 * dp.y;
            rows.push_back(std::move(row));
            bounds.push_back(-cfg.cbf_gain * h);
        }
    }

    std::vector<double> stacked(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        stacked[2 * i] = nominal[i].x;
        stacked[2 * i + 1] = nominal[i].y;
    }

    std::vector<double> solution;
    try {
        solution = solve_qp(stacked, rows, bounds,
                            QpOptions{cfg.qp_tolerance, cfg.qp_max_iterations});
    } catch (const QpInfeasible&) {
        out.velocities.assign(n, Vec2{});
        out.fallback = true;
        return out;
    }

    out.velocities.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.velocities[i] = {solution[2 * i], solution[2 * i + 1]};
    for (std::size_t k = 0; k < rows.size(); ++k) {
        double lhs = 0.0;
        for (std::size_t c = 0; c < solution.size(); ++c) lhs += rows[k][c] * solution[c];
        out.residual = std::max(out.residual, bounds[k] - lhs);
    }
    return out;
}

struct StepResult {
    WorldState state;
    bool qp_fallback = false;
    double qp_residual = 0.0;
};

// One closed-loop Euler step: nominal go-to-goal velocities, joint safety
// filter, unicycle map, integration with optional additive planar velocity
// noise, heading wrap, workspace clamp.
inline StepResult step(const WorldState& world, std::span<const Vec2> goals,
                       const SimConfig& cfg, std::span<const Vec2> noise = {}) {
    const std::size_t n = world.poses.size();
    if (goals.size() != n) throw std::invalid_argument("goal count does not match robot count");
    if (!noise.empty() && noise.size() != n)
        throw std::invalid_argument("noise count does not match robot count");

    std::vector<Vec2> nominal(n);
    for (std::size_t i = 0; i < n; ++i)
        nominal[i] = lyapunov_controller(world.poses[i], goals[i], cfg);

    FilterResult filtered = cbf_qp_filter(world, nominal, cfg);

    StepResult out;
    out.qp_fallback = filtered.fallback;
    out.qp_residual = filtered.residual;
    out.state.poses.resize(n);
    out.state.time = world.time + cfg.dt;
    for (std::size_t i = 0; i < n; ++i) {
        const RobotPose& p = world.poses[i];
        const ControlInput cmd = si_to_unicycle(p, filtered.velocities[i], cfg);
        RobotPose next;
        next.x = p.x + cmd.v * std::cos(p.heading) * cfg.dt;
        next.y = p.y + cmd.v * std::sin(p.heading) * cfg.dt;
        next.heading = p.heading + cmd.omega * cfg.dt;
        if (!noise.empty()) {
            next.x += noise[i].x * cfg.dt;
            next.y += noise[i].y * cfg.dt;
        }
        next.heading = wrap_angle(next.heading);
        next.x = std::clamp(next.x, cfg.workspace.x_min, cfg.workspace.x_max);
        next.y = std::clamp(next.y, cfg.workspace.y_min, cfg.workspace.y_max);
        if (!std::isfinite(next.x) || !std::isfinite(next.y) || !std::isfinite(next.heading))
            throw SimulatorFault("non-finite state for robot " + std::to_string(i) +
                                 " at t=" + std::to_string(out.state.time));
        out.state.poses[i] = next;
    }
    return out;
}

// Full closed-loop rollout at fixed step. Deterministic given the seed; with
// noise_sigma == 0 the seed is never consulted. Records all-stop fallback
// steps and the worst QP residual seen on regular steps.
inline Trajectory simulate_trajectory(const WorldState& x0, std::span<const Vec2> goals,
                                      const SimConfig& cfg, RngSeed seed) {
    cfg.validate();
    if (x0.poses.size() != goals.size())
        throw std::invalid_argument("goal count does not match robot count");
    const auto n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));

    Trajectory traj;
    traj.dt = cfg.dt;
    traj.horizon = cfg.horizon;
    traj.goals.assign(goals.begin(), goals.end());
    traj.states.reserve(n_steps + 1);

    WorldState state = x0;
    state.time = 0.0;
    traj.states.push_back(state);

    SeededRng noise_rng(seed, RngRole::noise);
    std::vector<Vec2> noise;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        if (cfg.noise_sigma > 0.0) {
            noise.resize(state.poses.size());
            for (auto& xi : noise)
                xi = {noise_rng.gaussian(0.0, cfg.noise_sigma),
                      noise_rng.gaussian(0.0, cfg.noise_sigma)};
        }
        StepResult r = step(state, goals, cfg, noise);
        state = std::move(r.state);
        state.time = static_cast<double>(k) * cfg.dt;
        if (r.qp_fallback)
            traj.qp_fallback_steps.push_back(k);
        else
            traj.max_qp_residual = std::max(traj.max_qp_residual, r.qp_residual);
        traj.states.push_back(state);
    }
    return traj;
}

// Uniform draw of an admissible initial configuration and goal set. Whole
// configurations are resampled until admissible, which preserves uniformity
// on the constrained set. Draw order is frozen: per robot x, y, heading for
// poses, then per robot x, y for goals.
inline std::pair<WorldState, std::vector<Vec2>> sample_initial_conditions(
    const DomainSpec& domain, RngSeed seed) {
    domain.validate();
    SeededRng rng(seed, RngRole::domain);
    const auto& box = domain.workspace;

    WorldState world;
    world.time = 0.0;
    world.poses.resize(domain.robot_count);
    bool ok = false;
    for (std::size_t attempt = 0; attempt < domain.rejection_cap && !ok; ++attempt) {
        for (auto& pose : world.poses) {
            pose.x = rng.uniform(box.x_min, box.x_max);
            pose.y = rng.uniform(box.y_min, box.y_max);
            pose.heading = rng.angle();
        }
        ok = poses_admissible(world.poses, domain);
    }
    if (!ok) throw std::runtime_error("admissible set too thin");

    std::vector<Vec2> goals(domain.robot_count);
    ok = false;
    for (std::size_t attempt = 0; attempt < domain.rejection_cap && !ok; ++attempt) {
        for (auto& g : goals) {
            g.x = rng.uniform(box.x_min, box.x_max);
            g.y = rng.uniform(box.y_min, box.y_max);
        }
        ok = positions_admissible(goals, domain);
    }
    if (!ok) throw std::runtime_error("admissible set too thin");

    return {std::move(world), std::move(goals)};
}

}  // namespace scenver
