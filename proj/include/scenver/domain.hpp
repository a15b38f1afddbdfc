#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

#include "scenver/sim_types.hpp"

namespace scenver {

// Sampling domain for verification: initial poses and goal positions drawn
// uniformly over the workspace box, restricted by rejection to
// configurations whose pairwise safety margin meets min_clearance (so the
// restriction is vacuous with fewer than two robots).
struct DomainSpec {
    std::size_t robot_count = 3;
    double min_clearance = 0.3;      // required h_g of initial poses and of goals-as-positions
    double collision_radius = 0.15;  // radius the clearance margin is measured against
    Workspace workspace{};
    std::size_t rejection_cap = 1'000'000;  // attempts per sample before giving up

    void validate() const {
        if (robot_count < 1) throw std::invalid_argument("robot count must be positive");
        if (!(min_clearance >= 0.0)) throw std::invalid_argument("clearance must be nonnegative");
        if (!(collision_radius > 0.0))
            throw std::invalid_argument("collision radius must be positive");
        if (!(workspace.x_min < workspace.x_max) || !(workspace.y_min < workspace.y_max))
            throw std::invalid_argument("workspace box is empty");
        if (rejection_cap < 1) throw std::invalid_argument("rejection cap must be positive");
    }

    // Parameter dimension: stacked planar goals.
    std::size_t parameter_dimension() const { return 2 * robot_count; }
};

namespace detail {

inline double min_pairwise_distance(std::span<const Vec2> points) {
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            min_dist = std::min(min_dist, norm(points[i] - points[j]));
    return min_dist;
}

inline bool in_box(Vec2 p, const Workspace& box) {
    return p.x >= box.x_min && p.x <= box.x_max && p.y >= box.y_min && p.y <= box.y_max;
}

}  // namespace detail

inline bool positions_admissible(std::span<const Vec2> positions, const DomainSpec& domain) {
    for (Vec2 p : positions)
        if (!detail::in_box(p, domain.workspace)) return false;
    if (positions.size() < 2) return true;
    return detail::min_pairwise_distance(positions) - domain.collision_radius >=
           domain.min_clearance;
}

inline bool poses_admissible(std::span<const RobotPose> poses, const DomainSpec& domain) {
    std::vector<Vec2> positions;
    positions.reserve(poses.size());
    for (const auto& pose : poses) positions.push_back(pose.position());
    return positions_admissible(positions, domain);
}

}  // namespace scenver
