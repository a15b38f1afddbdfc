#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace scenver {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct RobotPose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // radians, wrapped into [0, 2*pi)

    Vec2 position() const { return {x, y}; }
};

struct ControlInput {
    double v = 0.0;      // linear speed, m/s
    double omega = 0.0;  // angular rate, rad/s
};

struct WorldState {
    std::vector<RobotPose> poses;
    double time = 0.0;
};

struct Workspace {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -0.6;
    double y_max = 0.6;
};

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a = 0.0;
    return a;
}

struct SimConfig {
    std::size_t robot_count = 3;
    double dt = 0.05;             // s
    double horizon = 30.0;        // s
    double v_max = 0.2;           // m/s
    double omega_max = 3.6;       // rad/s
    double lookahead = 0.05;      // m, offset point for the unicycle map
    double gain = 1.0;            // proportional go-to-goal gain
    double safety_radius = 0.17;  // m, barrier radius; strictly above the metric's 0.15
    double cbf_gain = 100.0;      // class-K slope on the barrier constraint
    double qp_tolerance = 1e-8;
    int qp_max_iterations = 500;
    double noise_sigma = 0.0;     // m/s, additive planar velocity noise; 0 = deterministic
    Workspace workspace{};

    void validate() const {
        if (robot_count < 1) throw std::invalid_argument("robot count must be positive");
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
        if (!(lookahead > 0.0)) throw std::invalid_argument("lookahead must be positive");
        if (!(safety_radius > 0.15))
            throw std::invalid_argument("safety radius must exceed the 0.15 m collision radius");
        if (!(v_max >= 0.0) || !(omega_max >= 0.0))
            throw std::invalid_argument("actuation limits must be nonnegative");
        if (!(cbf_gain > 0.0)) throw std::invalid_argument("cbf gain must be positive");
        if (!(qp_tolerance > 0.0)) throw std::invalid_argument("qp tolerance must be positive");
        if (qp_max_iterations < 1) throw std::invalid_argument("qp iteration cap must be positive");
        if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be nonnegative");
        if (!(workspace.x_min < workspace.x_max) || !(workspace.y_min < workspace.y_max))
            throw std::invalid_argument("workspace box is empty");
    }
};

struct Trajectory {
    std::vector<WorldState> states;  // states[k].time == k * dt
    std::vector<Vec2> goals;
    double dt = 0.0;
    double horizon = 0.0;
    std::vector<std::size_t> qp_fallback_steps;  // steps where the filter fell back to all-stop
    double max_qp_residual = 0.0;                // worst constraint violation over non-fallback steps
};

}  // namespace scenver
