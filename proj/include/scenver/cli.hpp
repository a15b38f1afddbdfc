#pragma once

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scenver/distributions.hpp"
#include "scenver/io.hpp"
#include "scenver/risk.hpp"
#include "scenver/sim.hpp"
#include "scenver/verification.hpp"

namespace scenver::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kPropertyFailure = 1;  // a verification property did not hold
inline constexpr int kUsageError = 2;       // bad flags, bad config, bad input

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    auto out = scenver::detail::open_out(path);
    out << text;
}

}  // namespace detail

// System-under-test knobs shared by the trajectory-driven subcommands.
// Defaults are the reference experiment values.
struct SystemOptions {
    std::size_t robots = 3;
    double horizon = 30.0;
    double dt = 0.05;
    double v_max = 0.2;
    double omega_max = 3.6;
    double lookahead = 0.05;
    double gain = 1.0;
    double safety_radius = 0.17;
    double cbf_gain = 100.0;
    double noise_sigma = 0.0;
    double collision_radius = 0.15;
    double goal_radius = 0.1;
    double clearance = 0.3;
    bool literal_metric = false;
    bool any_robot_goal = false;
};

inline void add_system_flags(CLI::App* cmd, SystemOptions& opt) {
    cmd->add_option("--robots", opt.robots, "Robot count");
    cmd->add_option("--horizon", opt.horizon, "Trajectory horizon, seconds");
    cmd->add_option("--dt", opt.dt, "Integration step, seconds");
    cmd->add_option("--v-max", opt.v_max, "Linear speed limit, m/s");
    cmd->add_option("--omega-max", opt.omega_max, "Angular rate limit, rad/s");
    cmd->add_option("--lookahead", opt.lookahead, "Look-ahead point offset, m");
    cmd->add_option("--gain", opt.gain, "Go-to-goal proportional gain");
    cmd->add_option("--safety-radius", opt.safety_radius, "Barrier radius of the QP filter, m");
    cmd->add_option("--cbf-gain", opt.cbf_gain, "Class-K slope of the barrier constraint");
    cmd->add_option("--noise-sigma", opt.noise_sigma, "Velocity noise sigma, m/s");
    cmd->add_option("--collision-radius", opt.collision_radius,
                    "Separation the robustness measure requires, m");
    cmd->add_option("--goal-radius", opt.goal_radius,
                    "Goal proximity the robustness measure requires, m");
    cmd->add_option("--clearance", opt.clearance,
                    "Safety margin required of sampled configurations");
    cmd->add_flag("--literal-metric,--literal-eq27", opt.literal_metric,
                  "Printed operator arrangement of the robustness measure");
    cmd->add_flag("--any-robot-goal", opt.any_robot_goal,
                  "Goal margin counts the best robot instead of requiring all");
}

inline SystemUnderTest make_system(const SystemOptions& opt) {
    SystemUnderTest sut;
    sut.sim.robot_count = opt.robots;
    sut.sim.horizon = opt.horizon;
    sut.sim.dt = opt.dt;
    sut.sim.v_max = opt.v_max;
    sut.sim.omega_max = opt.omega_max;
    sut.sim.lookahead = opt.lookahead;
    sut.sim.gain = opt.gain;
    sut.sim.safety_radius = opt.safety_radius;
    sut.sim.cbf_gain = opt.cbf_gain;
    sut.sim.noise_sigma = opt.noise_sigma;
    sut.metric.collision_radius = opt.collision_radius;
    sut.metric.goal_radius = opt.goal_radius;
    sut.metric.horizon = opt.horizon;
    sut.metric.literal_time_ops = opt.literal_metric;
    sut.metric.any_robot_reaches = opt.any_robot_goal;
    sut.sim.validate();
    return sut;
}

inline DomainSpec make_domain(const SystemOptions& opt) {
    DomainSpec domain;
    domain.robot_count = opt.robots;
    domain.min_clearance = opt.clearance;
    domain.collision_radius = opt.collision_radius;
    domain.validate();
    return domain;
}

struct PlanOptions {
    double epsilon = 0.0275;
    double gamma = 0.999999;
};

inline int run_plan(const PlanOptions& opt) {
    std::cout << required_samples(opt.epsilon, opt.gamma) << "\n";
    return kOk;
}

struct VarBoundOptions {
    std::string input_csv;
    std::string dist_spec;
    std::size_t n = 5000;
    double epsilon = 0.01;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string out;
};

inline int run_var_bound(const VarBoundOptions& opt) {
    SampleSet set = [&] {
        if (!opt.input_csv.empty() && !opt.dist_spec.empty())
            throw CLI::ValidationError("var-bound", "--input and --dist are mutually exclusive");
        if (!opt.input_csv.empty()) return SampleSet(read_values_csv(opt.input_csv));
        if (!opt.dist_spec.empty())
            return sample(parse_distribution(opt.dist_spec), opt.n, {opt.seed, opt.stream});
        throw CLI::ValidationError("var-bound", "one of --input or --dist is required");
    }();

    const ScenarioBound bound = scenario_var_upper_bound(set, opt.epsilon);
    nlohmann::ordered_json j;
    j["value"] = bound.value;
    j["n"] = bound.n_samples;
    j["epsilon"] = bound.epsilon;
    j["confidence"] = bound.confidence;
    detail::write_text(opt.out, j.dump(2) + "\n");
    return kOk;
}

struct Table1Options {
    std::size_t trials = 30;
    std::size_t n_scenario = 5000;
    std::size_t n_oracle = 50000;
    std::uint64_t seed = 0;
    std::vector<double> epsilons = {0.01, 0.007, 0.003, 0.001};
    std::vector<std::string> distributions = {"uniform:-1|1", "gaussian:0|1", "chisq:2"};
    std::string out;
};

// Minimum scenario-vs-oracle gap per (risk level, distribution) cell, in
// long CSV form: epsilon,distribution,min_gap. Each cell runs on its own
// stream block so cells never share draws.
inline int run_table1(const Table1Options& opt) {
    std::string csv = "epsilon,distribution,min_gap\n";
    std::uint64_t cell = 0;
    for (double eps : opt.epsilons) {
        for (const auto& spec_text : opt.distributions) {
            const DistributionSpec dist = parse_distribution(spec_text);
            const RngSeed cell_seed{opt.seed, cell * (std::uint64_t{1} << 32)};
            const VarGapResult result =
                var_gap_trial(dist, eps, opt.n_scenario, opt.n_oracle, opt.trials, cell_seed);
            csv += format_double(eps) + "," + to_string(dist) + "," +
                   format_double(result.min_gap) + "\n";
            ++cell;
        }
    }
    detail::write_text(opt.out, csv);
    return kOk;
}

struct VerifyOptions {
    SystemOptions system;
    double epsilon = 0.0275;
    double gamma = 0.999999;
    std::size_t samples = 0;  // 0: exactly the planned count
    std::size_t holdout = 2000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    unsigned workers = 1;
    std::string out;
    std::string samples_csv;
};

inline int run_verify(const VerifyOptions& opt) {
    const DomainSpec domain = make_domain(opt.system);
    const SystemUnderTest sut = make_system(opt.system);
    const RiskSpec spec(opt.epsilon, opt.gamma);

    std::vector<RobustnessSample> samples;
    const VerificationReport report =
        verify(domain, sut, spec, opt.holdout, {opt.seed, opt.stream}, opt.samples, opt.workers,
               nullptr, opt.samples_csv.empty() ? nullptr : &samples);

    detail::write_text(opt.out, report_to_json(report).dump(2) + "\n");
    if (!opt.samples_csv.empty()) write_samples_csv(opt.samples_csv, samples);

    if (report.holdout_violation_fraction &&
        *report.holdout_violation_fraction > report.epsilon)
        return kPropertyFailure;
    return kOk;
}

struct SimulateOptions {
    SystemOptions system;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::string out;
};

// One seeded trajectory from a sampled admissible configuration: CSV dump
// plus a `<path>.meta.json` sidecar carrying goals, config, seed and the
// trajectory's robustness.
inline int run_simulate(const SimulateOptions& opt) {
    const DomainSpec domain = make_domain(opt.system);
    const SystemUnderTest sut = make_system(opt.system);

    const RngSeed seed{opt.seed, opt.stream};
    const auto [x0, goals] = sample_initial_conditions(domain, seed);
    const Trajectory traj = simulate_trajectory(x0, goals, sut.sim, seed);
    const double robustness = rho(traj, sut.metric);

    write_trajectory_csv(opt.out, traj);
    write_trajectory_sidecar(opt.out + ".meta.json", traj, sut, seed, robustness);
    return kOk;
}

struct HoldoutOptions {
    SystemOptions system;
    std::string report_path;
    std::size_t m = 2000;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    unsigned workers = 1;
    std::string out;
};

// Re-evaluates the bound stored in an existing report against fresh samples.
inline int run_holdout(const HoldoutOptions& opt) {
    const VerificationReport report = read_report_json(opt.report_path);
    const DomainSpec domain = make_domain(opt.system);
    const SystemUnderTest sut = make_system(opt.system);

    const double fraction = holdout_violation_fraction(domain, sut, report.bound, opt.m,
                                                       {opt.seed, opt.stream}, opt.workers);
    nlohmann::ordered_json j;
    j["bound"] = report.bound;
    j["epsilon"] = report.epsilon;
    j["m"] = opt.m;
    j["violation_fraction"] = fraction;
    j["pass"] = fraction <= report.epsilon;
    detail::write_text(opt.out, j.dump(2) + "\n");
    return fraction <= report.epsilon ? kOk : kPropertyFailure;
}

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Scenario bounds on Value-at-Risk and black-box safety verification"};
    app.set_config("--config", "", "Key-value config file with [subcommand] sections; flags override");
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();

    PlanOptions plan_opt;
    auto* plan = app.add_subcommand("plan", "Smallest sample count meeting a risk/confidence target");
    plan->fallthrough();
    plan->add_option("--epsilon", plan_opt.epsilon, "Risk level in (0,1)")->required();
    plan->add_option("--gamma", plan_opt.gamma, "Required confidence in (0,1)")->required();

    VarBoundOptions vb_opt;
    auto* vb = app.add_subcommand("var-bound", "Scenario upper bound on the Value-at-Risk of samples");
    vb->fallthrough();
    vb->add_option("--input", vb_opt.input_csv, "CSV of samples (single `value` column)");
    vb->add_option("--dist", vb_opt.dist_spec, "Distribution spec, e.g. uniform:-1,1");
    vb->add_option("--n", vb_opt.n, "Sample count when drawing from --dist");
    vb->add_option("--epsilon", vb_opt.epsilon, "Risk level in [0,1]")->required();
    vb->add_option("--seed", vb_opt.seed, "Master seed");
    vb->add_option("--stream", vb_opt.stream, "Stream index");
    vb->add_option("--out", vb_opt.out, "Output JSON path (default stdout)");

    Table1Options t1_opt;
    auto* t1 = app.add_subcommand("table1", "Scenario-vs-oracle minimum gaps per risk level and distribution");
    t1->fallthrough();
    t1->add_option("--trials", t1_opt.trials, "Scenario bound repetitions per cell");
    t1->add_option("--n-scenario", t1_opt.n_scenario, "Samples per scenario bound");
    t1->add_option("--n-oracle", t1_opt.n_oracle, "Samples for the quantile oracle");
    t1->add_option("--seed", t1_opt.seed, "Master seed");
    t1->add_option("--epsilons", t1_opt.epsilons, "Risk levels")->delimiter(',');
    t1->add_option("--distributions", t1_opt.distributions, "Distribution specs")->delimiter(',');
    t1->add_option("--out", t1_opt.out, "Output CSV path (default stdout)");

    VerifyOptions v_opt;
    auto* v = app.add_subcommand("verify", "Full verification pipeline with optional hold-out check");
    v->fallthrough();
    v->add_option("--epsilon", v_opt.epsilon, "Risk level in (0,1)");
    v->add_option("--gamma", v_opt.gamma, "Required confidence in (0,1)");
    v->add_option("--samples", v_opt.samples, "Robustness samples to draw (0 = planned count)");
    v->add_option("--holdout", v_opt.holdout, "Hold-out sample count (0 = skip)");
    v->add_option("--seed", v_opt.seed, "Master seed");
    v->add_option("--stream", v_opt.stream, "Stream index");
    v->add_option("--workers", v_opt.workers, "Parallel sampling workers");
    v->add_option("--out", v_opt.out, "Report JSON path (default stdout)");
    v->add_option("--samples-csv", v_opt.samples_csv, "Dump fitted robustness samples here");
    add_system_flags(v, v_opt.system);

    SimulateOptions s_opt;
    auto* s = app.add_subcommand("simulate", "One seeded trajectory from a sampled configuration");
    s->fallthrough();
    s->add_option("--seed", s_opt.seed, "Master seed");
    s->add_option("--stream", s_opt.stream, "Stream index");
    s->add_option("--out", s_opt.out, "Trajectory CSV path")->required();
    add_system_flags(s, s_opt.system);

    HoldoutOptions h_opt;
    auto* h = app.add_subcommand("holdout", "Re-evaluate an existing report against fresh samples");
    h->fallthrough();
    h->add_option("--report", h_opt.report_path, "Existing report JSON")->required();
    h->add_option("--m", h_opt.m, "Fresh sample count");
    h->add_option("--seed", h_opt.seed, "Master seed");
    h->add_option("--stream", h_opt.stream, "Stream index");
    h->add_option("--workers", h_opt.workers, "Parallel sampling workers");
    h->add_option("--out", h_opt.out, "Output JSON path (default stdout)");
    add_system_flags(h, h_opt.system);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsageError;
    }

    try {
        if (plan->parsed()) return run_plan(plan_opt);
        if (vb->parsed()) return run_var_bound(vb_opt);
        if (t1->parsed()) return run_table1(t1_opt);
        if (v->parsed()) return run_verify(v_opt);
        if (s->parsed()) return run_simulate(s_opt);
        if (h->parsed()) return run_holdout(h_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (...) {
        std::cerr << "error: unknown failure\n";
        return kUsageError;
    }
    return kUsageError;
}

inline int cli_main(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    static const char* kName = "scenver";
    argv.push_back(kName);
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace scenver::cli
