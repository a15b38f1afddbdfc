#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include "scenver/sim_types.hpp"

namespace scenver {

// Parameters of the barrier-based robustness measure. The two boolean flags
// select the literal printed form of the measure in place of the default
// reading (safety must hold at every step, every robot must be at its goal
// simultaneously at some step).
struct MetricParams {
    double collision_radius = 0.15;  // m
    double goal_radius = 0.1;        // m
    double horizon = 30.0;           // s, must match the trajectory under evaluation
    bool any_robot_reaches = false;  // aggregate goal margins with max_i instead of min_i
    bool literal_time_ops = false;   // pair min_t with the goal term and max_t with the safety term

    void validate() const {
        if (!(collision_radius > 0.0) || !(goal_radius > 0.0) || !(horizon > 0.0))
            throw std::invalid_argument("metric parameters must be positive");
    }
};

// Inter-robot safety margin: smallest pairwise planar distance minus the
// collision radius. Nonnegative iff every pair is separated.
inline double h_g(const WorldState& world, const MetricParams& params) {
    const auto& poses = world.poses;
    if (poses.size() < 2)
        throw std::domain_error("h_g undefined for fewer than two robots");
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poses.size(); ++i)
        for (std::size_t j = i + 1; j < poses.size(); ++j)
            min_dist = std::min(min_dist, norm(poses[i].position() - poses[j].position()));
    return min_dist - params.collision_radius;
}

// Goal-reaching margin. Default aggregation takes the worst robot, so the
// margin is nonnegative iff all robots are simultaneously within
// goal_radius of their own goals.
inline double h_f(const WorldState& world, std::span<const Vec2> goals,
                  const MetricParams& params) {
    if (goals.size() != world.poses.size())
        throw std::invalid_argument("goal count does not match robot count");
    double agg = params.any_robot_reaches ? -std::numeric_limits<double>::infinity()
                                          : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < goals.size(); ++i) {
        const double margin =
            params.goal_radius - norm(world.poses[i].position() - goals[i]);
        agg = params.any_robot_reaches ? std::max(agg, margin) : std::min(agg, margin);
    }
    return agg;
}

// Trajectory robustness over the recorded step grid.
// Default: min( max_t h_f, min_t h_g ), i.e. nonnegative iff the robots
// stayed separated at every recorded step and all reached their goals at
// some recorded step. literal_time_ops swaps the time quantifiers.
inline double rho(const Trajectory& traj, const MetricParams& params) {
    params.validate();
    if (traj.states.empty()) throw std::invalid_argument("empty trajectory");
    if (params.horizon != traj.horizon)
        throw std::invalid_argument("metric horizon disagrees with trajectory horizon");

    double min_hg = std::numeric_limits<double>::infinity();
    double max_hg = -std::numeric_limits<double>::infinity();
    double min_hf = std::numeric_limits<double>::infinity();
    double max_hf = -std::numeric_limits<double>::infinity();
    for (const auto& state : traj.states) {
        const double hg = h_g(state, params);
        const double hf = h_f(state, traj.goals, params);
        min_hg = std::min(min_hg, hg);
        max_hg = std::max(max_hg, hg);
        min_hf = std::min(min_hf, hf);
        max_hf = std::max(max_hf, hf);
    }
    return params.literal_time_ops ? std::min(min_hf, max_hg) : std::min(max_hf, min_hg);
}

}  // namespace scenver
