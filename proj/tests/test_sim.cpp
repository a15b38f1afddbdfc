#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include <scenver/metrics.hpp>
#include <scenver/sim.hpp>

using namespace scenver;

namespace {

bool poses_equal(const WorldState& a, const WorldState& b) {
    if (a.poses.size() != b.poses.size()) return false;
    for (std::size_t i = 0; i < a.poses.size(); ++i)
        if (a.poses[i].x != b.poses[i].x || a.poses[i].y != b.poses[i].y ||
            a.poses[i].heading != b.poses[i].heading)
            return false;
    return true;
}

}  // namespace

TEST_CASE("go-to-goal controller saturates and points at the goal") {
    const SimConfig cfg;
    const RobotPose pose{0.1, -0.2, 1.0};

    CHECK(lyapunov_controller(pose, {0.1, -0.2}, cfg) == Vec2{0.0, 0.0});

    const Vec2 far = lyapunov_controller({0.0, 0.0, 0.0}, {1.0, 0.0}, cfg);
    CHECK(far.x == 0.2);
    CHECK(far.y == 0.0);

    // mirror symmetry: reflecting the goal across the robot flips the sign
    const RobotPose origin{0.0, 0.0, 1.0};
    const Vec2 ahead = lyapunov_controller(origin, {0.3, 0.4}, cfg);
    const Vec2 behind = lyapunov_controller(origin, {-0.3, -0.4}, cfg);
    CHECK(ahead.x == -behind.x);
    CHECK(ahead.y == -behind.y);

    // never faster than v_max, never zero away from the goal
    SeededRng rng({0x90a1, 0});
    for (int i = 0; i < 100; ++i) {
        const RobotPose p{rng.uniform(-1, 1), rng.uniform(-0.6, 0.6), rng.angle()};
        const Vec2 g{rng.uniform(-1, 1), rng.uniform(-0.6, 0.6)};
        const Vec2 u = lyapunov_controller(p, g, cfg);
        REQUIRE(norm(u) <= cfg.v_max + 1e-15);
        if (g.x != p.x || g.y != p.y) {
            REQUIRE(norm(u) > 0.0);
            REQUIRE(dot(u, g - p.position()) > 0.0);  // points toward the goal
        }
    }
}

TEST_CASE("look-ahead map from planar velocity to unicycle inputs") {
    const SimConfig cfg;

    const ControlInput aligned = si_to_unicycle({0, 0, 0.0}, {0.1, 0.0}, cfg);
    CHECK(aligned.v == 0.1);
    CHECK(aligned.omega == 0.0);

    const ControlInput left = si_to_unicycle({0, 0, 0.0}, {0.0, 0.1}, cfg);
    CHECK(left.v == 0.0);
    CHECK(left.omega == 2.0);
    const ControlInput right = si_to_unicycle({0, 0, 0.0}, {0.0, -0.1}, cfg);
    CHECK(right.omega == -2.0);

    const ControlInput idle = si_to_unicycle({0.3, 0.2, 2.0}, {0.0, 0.0}, cfg);
    CHECK(idle.v == 0.0);
    CHECK(idle.omega == 0.0);

    // clamping
    const ControlInput fast = si_to_unicycle({0, 0, 0.0}, {5.0, 5.0}, cfg);
    CHECK(fast.v == cfg.v_max);
    CHECK(fast.omega == cfg.omega_max);
}

TEST_CASE("safety filter leaves distant robots alone") {
    WorldState w;
    w.poses = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    const std::vector<Vec2> nominal{{0.05, 0.01}, {-0.04, 0.02}};
    const SimConfig cfg;
    const FilterResult out = cbf_qp_filter(w, nominal, cfg);
    CHECK_FALSE(out.fallback);
    CHECK(out.velocities == nominal);  // inactive constraints, bit-exact
    CHECK(out.residual <= 1e-6);
}

TEST_CASE("safety filter activates head-on") {
    WorldState w;
    w.poses = {{-0.09, 0.0, 0.0}, {0.09, 0.0, 0.0}};  // separation 0.18
    // closing fast enough to violate the barrier constraint at the nominal
    const std::vector<Vec2> nominal{{0.6, 0.0}, {-0.6, 0.0}};
    const SimConfig cfg;
    const FilterResult out = cbf_qp_filter(w, nominal, cfg);
    REQUIRE_FALSE(out.fallback);

    // the pair constraint must hold within tolerance and be active with
    // equality: 2 dp . (u0 - u1) = -alpha h with h = 0.18^2 - 0.17^2
    const Vec2 dp{-0.18, 0.0};
    const double h = 0.18 * 0.18 - cfg.safety_radius * cfg.safety_radius;
    const double lhs = 2.0 * dot(dp, out.velocities[0] - out.velocities[1]);
    REQUIRE(lhs >= -cfg.cbf_gain * h - cfg.qp_tolerance);
    REQUIRE_THAT(lhs, Catch::Matchers::WithinAbs(-cfg.cbf_gain * h, 1e-6));

    // robots slow their approach rather than pass through
    CHECK(out.velocities[0].x < nominal[0].x);
    CHECK(out.velocities[1].x > nominal[1].x);
}

TEST_CASE("filter leaves any well-separated fleet alone") {
    // with every pair farther than twice the safety radius, no admissible
    // nominal can activate a constraint
    SeededRng rng({0x111, 0});
    const SimConfig cfg;
    int tested = 0;
    while (tested < 50) {
        WorldState w;
        for (int i = 0; i < 3; ++i)
            w.poses.push_back({rng.uniform(-1, 1), rng.uniform(-0.6, 0.6), rng.angle()});
        double min_sep = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                min_sep = std::min(min_sep, norm(w.poses[i].position() - w.poses[j].position()));
        if (min_sep <= 2.0 * cfg.safety_radius) continue;
        ++tested;

        std::vector<Vec2> nominal(3);
        for (auto& u : nominal) u = {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
        const auto out = cbf_qp_filter(w, nominal, cfg);
        REQUIRE_FALSE(out.fallback);
        for (int i = 0; i < 3; ++i) {
            REQUIRE_THAT(out.velocities[i].x, Catch::Matchers::WithinAbs(nominal[i].x, 1e-6));
            REQUIRE_THAT(out.velocities[i].y, Catch::Matchers::WithinAbs(nominal[i].y, 1e-6));
        }
    }
}

TEST_CASE("safety filter respects mirror symmetry") {
    const SimConfig cfg;
    WorldState w;
    w.poses = {{-0.1, 0.05, 0.0}, {0.1, -0.05, 0.0}};
    const std::vector<Vec2> nominal{{0.15, -0.03}, {-0.15, 0.03}};
    const FilterResult out = cbf_qp_filter(w, nominal, cfg);
    REQUIRE_FALSE(out.fallback);
    CHECK_THAT(out.velocities[0].x, Catch::Matchers::WithinAbs(-out.velocities[1].x, 1e-9));
    CHECK_THAT(out.velocities[0].y, Catch::Matchers::WithinAbs(-out.velocities[1].y, 1e-9));
}

TEST_CASE("safety filter falls back to all-stop when infeasible") {
    WorldState w;
    w.poses = {{0.2, 0.1, 0.0}, {0.2, 0.1, 1.0}};  // coincident positions
    const std::vector<Vec2> nominal{{0.1, 0.0}, {-0.1, 0.0}};
    const FilterResult out = cbf_qp_filter(w, nominal, SimConfig{});
    CHECK(out.fallback);
    CHECK(out.velocities == std::vector<Vec2>{{0.0, 0.0}, {0.0, 0.0}});
}

TEST_CASE("step holds a converged fleet and advances time") {
    SimConfig cfg;
    cfg.robot_count = 2;
    WorldState w;
    w.poses = {{-0.3, 0.0, 0.5}, {0.4, 0.2, 2.0}};
    w.time = 1.0;
    const std::vector<Vec2> goals{{-0.3, 0.0}, {0.4, 0.2}};
    const StepResult out = step(w, goals, cfg);
    CHECK(poses_equal(out.state, w));
    CHECK(out.state.time == 1.0 + cfg.dt);
    CHECK_FALSE(out.qp_fallback);
}

TEST_CASE("step advances a lone robot toward its goal") {
    SimConfig cfg;
    cfg.robot_count = 1;
    WorldState w;
    w.poses = {{0.0, 0.0, 0.0}};
    const std::vector<Vec2> goals{{0.5, 0.0}};
    const StepResult out = step(w, goals, cfg);
    // saturated controller aligned with the heading: v_max * dt forward
    CHECK_THAT(out.state.poses[0].x, Catch::Matchers::WithinAbs(cfg.v_max * cfg.dt, 1e-15));
    CHECK(out.state.poses[0].y == 0.0);
    CHECK(out.state.poses[0].heading == 0.0);
}

TEST_CASE("step is deterministic") {
    SimConfig cfg;
    WorldState w;
    w.poses = {{-0.2, 0.1, 0.3}, {0.3, -0.1, 4.0}, {0.0, 0.5, 1.0}};
    const std::vector<Vec2> goals{{0.5, 0.2}, {-0.6, -0.3}, {0.0, -0.5}};
    const StepResult a = step(w, goals, cfg);
    const StepResult b = step(w, goals, cfg);
    CHECK(poses_equal(a.state, b.state));
}

TEST_CASE("step faults loudly on non-finite state") {
    SimConfig cfg;
    WorldState w;
    w.poses = {{std::numeric_limits<double>::infinity(), 0.0, 0.0}};
    const std::vector<Vec2> goals{{0.0, 0.0}};
    CHECK_THROWS_AS(step(w, goals, cfg), SimulatorFault);
}

TEST_CASE("config validation rejects out-of-contract values") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.safety_radius = 0.15;  // must exceed the metric's collision radius
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.lookahead = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("zero-horizon trajectory is just the initial state") {
    SimConfig cfg;
    cfg.robot_count = 1;
    cfg.horizon = 0.0;
    WorldState w;
    w.poses = {{0.1, 0.2, 0.3}};
    const auto traj = simulate_trajectory(w, std::vector<Vec2>{{0.5, 0.5}}, cfg, {0, 0});
    REQUIRE(traj.states.size() == 1);
    CHECK(poses_equal(traj.states[0], w));
    CHECK(traj.states[0].time == 0.0);
}

TEST_CASE("lone robot reaches a nearby goal well inside the horizon") {
    SimConfig cfg;
    cfg.robot_count = 1;
    WorldState w;
    w.poses = {{-0.25, 0.0, 3.0}};  // facing away; must turn first
    const std::vector<Vec2> goals{{0.25, 0.0}};
    const auto traj = simulate_trajectory(w, goals, cfg, {0, 0});
    REQUIRE(traj.states.size() == 601);
    for (std::size_t k = 0; k < traj.states.size(); ++k)
        REQUIRE(traj.states[k].time == static_cast<double>(k) * cfg.dt);
    const auto& last = traj.states.back().poses[0];
    CHECK(norm(last.position() - goals[0]) < 0.1);
}

TEST_CASE("head-on swap stays safe") {
    SimConfig cfg;
    cfg.robot_count = 2;
    WorldState w;
    w.poses = {{-0.5, 0.0, 0.0}, {0.5, 0.0, std::numbers::pi}};
    const std::vector<Vec2> goals{{0.5, 0.0}, {-0.5, 0.0}};
    const auto traj = simulate_trajectory(w, goals, cfg, {0, 0});
    CHECK(traj.qp_fallback_steps.empty());
    double min_sep = std::numeric_limits<double>::infinity();
    for (const auto& s : traj.states)
        min_sep = std::min(min_sep, norm(s.poses[0].position() - s.poses[1].position()));
    CHECK(min_sep >= 0.15);
    CHECK(traj.max_qp_residual <= cfg.qp_tolerance);
}

TEST_CASE("trajectories are pure functions of their seed") {
    SimConfig cfg;
    cfg.robot_count = 2;
    cfg.horizon = 5.0;
    cfg.noise_sigma = 0.05;
    WorldState w;
    w.poses = {{-0.5, 0.2, 0.0}, {0.5, -0.2, 1.5}};
    const std::vector<Vec2> goals{{0.5, 0.2}, {-0.5, -0.2}};
    const auto a = simulate_trajectory(w, goals, cfg, {77, 3});
    const auto b = simulate_trajectory(w, goals, cfg, {77, 3});
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k)
        REQUIRE(poses_equal(a.states[k], b.states[k]));

    const auto c = simulate_trajectory(w, goals, cfg, {77, 4});
    bool same = true;
    for (std::size_t k = 0; k < a.states.size(); ++k)
        same = same && poses_equal(a.states[k], c.states[k]);
    CHECK_FALSE(same);
}

TEST_CASE("filter and step are permutation equivariant") {
    const SimConfig cfg;
    WorldState w;
    w.poses = {{-0.12, 0.0, 0.2}, {0.1, 0.02, 3.0}, {0.0, -0.4, 1.0}};
    const std::vector<Vec2> goals{{0.4, 0.1}, {-0.5, -0.1}, {0.0, 0.5}};
    const std::vector<std::size_t> perm{2, 0, 1};

    WorldState pw;
    std::vector<Vec2> pgoals(3);
    for (std::size_t i = 0; i < 3; ++i) {
        pw.poses.push_back(w.poses[perm[i]]);
        pgoals[i] = goals[perm[i]];
    }

    std::vector<Vec2> nominal(3), pnominal(3);
    for (std::size_t i = 0; i < 3; ++i) {
        nominal[i] = lyapunov_controller(w.poses[i], goals[i], cfg);
        pnominal[i] = lyapunov_controller(pw.poses[i], pgoals[i], cfg);
    }
    const auto base = cbf_qp_filter(w, nominal, cfg);
    const auto permuted = cbf_qp_filter(pw, pnominal, cfg);
    REQUIRE_FALSE(base.fallback);
    REQUIRE_FALSE(permuted.fallback);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE_THAT(permuted.velocities[i].x,
                     Catch::Matchers::WithinAbs(base.velocities[perm[i]].x, 1e-9));
        REQUIRE_THAT(permuted.velocities[i].y,
                     Catch::Matchers::WithinAbs(base.velocities[perm[i]].y, 1e-9));
    }

    const auto s = step(w, goals, cfg);
    const auto ps = step(pw, pgoals, cfg);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE_THAT(ps.state.poses[i].x,
                     Catch::Matchers::WithinAbs(s.state.poses[perm[i]].x, 1e-9));
        REQUIRE_THAT(ps.state.poses[i].y,
                     Catch::Matchers::WithinAbs(s.state.poses[perm[i]].y, 1e-9));
        REQUIRE_THAT(ps.state.poses[i].heading,
                     Catch::Matchers::WithinAbs(s.state.poses[perm[i]].heading, 1e-9));
    }
}

TEST_CASE("trajectories are translation invariant away from the walls") {
    SimConfig cfg;
    cfg.robot_count = 2;
    cfg.horizon = 3.0;
    WorldState w;
    w.poses = {{-0.4, -0.1, 0.0}, {0.0, 0.1, 2.0}};
    const std::vector<Vec2> goals{{0.0, -0.1}, {-0.4, 0.1}};
    const Vec2 offset{0.3, 0.15};

    WorldState shifted = w;
    std::vector<Vec2> shifted_goals = goals;
    for (auto& p : shifted.poses) {
        p.x += offset.x;
        p.y += offset.y;
    }
    for (auto& g : shifted_goals) g = g + offset;

    const auto a = simulate_trajectory(w, goals, cfg, {0, 0});
    const auto b = simulate_trajectory(shifted, shifted_goals, cfg, {0, 0});
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        for (std::size_t i = 0; i < 2; ++i) {
            REQUIRE_THAT(b.states[k].poses[i].x,
                         Catch::Matchers::WithinAbs(a.states[k].poses[i].x + offset.x, 1e-9));
            REQUIRE_THAT(b.states[k].poses[i].y,
                         Catch::Matchers::WithinAbs(a.states[k].poses[i].y + offset.y, 1e-9));
            REQUIRE_THAT(b.states[k].poses[i].heading,
                         Catch::Matchers::WithinAbs(a.states[k].poses[i].heading, 1e-9));
        }
    }
}

TEST_CASE("admissible configuration sampling") {
    for (const std::size_t robots : {std::size_t{3}, std::size_t{6}}) {
        DomainSpec domain;
        domain.robot_count = robots;
        int draws = robots == 3 ? 10000 : 2000;
        for (int i = 0; i < draws; ++i) {
            const auto [w, goals] =
                sample_initial_conditions(domain, {11, static_cast<std::uint64_t>(i)});
            REQUIRE(w.poses.size() == robots);
            REQUIRE(goals.size() == robots);
            REQUIRE(poses_admissible(w.poses, domain));
            REQUIRE(positions_admissible(goals, domain));
            for (const auto& p : w.poses) {
                REQUIRE((p.x >= -1.0 && p.x <= 1.0));
                REQUIRE((p.y >= -0.6 && p.y <= 0.6));
                REQUIRE((p.heading >= 0.0 && p.heading < 2.0 * std::numbers::pi));
            }
            for (const auto& g : goals) {
                REQUIRE((g.x >= -1.0 && g.x <= 1.0));
                REQUIRE((g.y >= -0.6 && g.y <= 0.6));
            }
        }
    }
}

TEST_CASE("configuration sampling is deterministic and clearance-aware") {
    DomainSpec domain;
    const auto [w1, g1] = sample_initial_conditions(domain, {5, 9});
    const auto [w2, g2] = sample_initial_conditions(domain, {5, 9});
    CHECK(poses_equal(w1, w2));
    CHECK(g1 == g2);

    // min pairwise distance must be at least clearance + collision radius
    MetricParams mp;
    WorldState goal_world;
    for (const auto& g : g1) goal_world.poses.push_back({g.x, g.y, 0.0});
    CHECK(h_g(w1, mp) >= domain.min_clearance);
    CHECK(h_g(goal_world, mp) >= domain.min_clearance);

    // an overpacked domain trips the rejection cap
    DomainSpec packed;
    packed.robot_count = 40;
    packed.rejection_cap = 200;
    CHECK_THROWS_WITH(sample_initial_conditions(packed, {0, 0}), "admissible set too thin");
}
