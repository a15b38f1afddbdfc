#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "scenver/domain.hpp"
#include "scenver/metrics.hpp"
#include "scenver/risk.hpp"
#include "scenver/rng.hpp"
#include "scenver/sim.hpp"

namespace scenver {

// The black box under verification: a simulator configuration plus the
// robustness measure evaluated on its trajectories.
struct SystemUnderTest {
    SimConfig sim{};
    MetricParams metric{};
};

// One draw of the randomized robustness variable, replayable from
// (x0, goals, seed) alone.
struct RobustnessSample {
    double r = 0.0;
    WorldState x0;
    std::vector<Vec2> goals;
    RngSeed seed;
};

// Simulation diagnostics aggregated over a batch; reductions are
// order-independent so worker count cannot change them.
struct SimStats {
    std::size_t trajectories = 0;
    std::size_t fallback_trajectories = 0;  // trajectories containing any all-stop step
    double max_qp_residual = 0.0;           // over non-fallback steps of all trajectories

    void merge(const SimStats& other) {
        trajectories += other.trajectories;
        fallback_trajectories += other.fallback_trajectories;
        max_qp_residual = std::max(max_qp_residual, other.max_qp_residual);
    }
};

struct RobustnessBatch {
    std::vector<RobustnessSample> samples;
    SimStats stats;
};

// One sample at a fixed stream index: a pure function of
// (domain, sut, master seed, index), which is what makes batch collection
// embarrassingly parallel and order-independent.
inline RobustnessSample sample_robustness_at(const DomainSpec& domain,
                                             const SystemUnderTest& sut, RngSeed base,
                                             std::uint64_t index, SimStats& stats) {
    const RngSeed sample_seed{base.master, base.stream + index};
    RobustnessSample out;
    out.seed = sample_seed;
    try {
        auto [x0, goals] = sample_initial_conditions(domain, sample_seed);
        const Trajectory traj = simulate_trajectory(x0, goals, sut.sim, sample_seed);
        out.r = rho(traj, sut.metric);
        out.x0 = std::move(x0);
        out.goals = std::move(goals);
        stats.trajectories += 1;
        if (!traj.qp_fallback_steps.empty()) stats.fallback_trajectories += 1;
        stats.max_qp_residual = std::max(stats.max_qp_residual, traj.max_qp_residual);
    } catch (const SimulatorFault& fault) {
        throw SimulatorFault(std::string(fault.what()) + " [replay seed master=" +
                             std::to_string(sample_seed.master) +
                             " stream=" + std::to_string(sample_seed.stream) + "]");
    }
    if (!std::isfinite(out.r))
        throw SimulatorFault("non-finite robustness [replay seed master=" +
                             std::to_string(sample_seed.master) +
                             " stream=" + std::to_string(sample_seed.stream) + "]");
    return out;
}

// n robustness draws on streams base.stream + 0 .. n-1. Any simulator fault
// fails the whole batch; silently dropped samples would bias the bound.
// Results are identical for any worker count.
inline RobustnessBatch sample_robustness(const DomainSpec& domain, const SystemUnderTest& sut,
                                         std::size_t n, RngSeed seed, unsigned workers = 1) {
    if (n == 0) throw std::invalid_argument("sample count must be positive");
    domain.validate();
    if (domain.robot_count != sut.sim.robot_count)
        throw std::invalid_argument("domain and simulator robot counts disagree");

    RobustnessBatch batch;
    batch.samples.resize(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            batch.samples[i] = sample_robustness_at(domain, sut, seed, i, batch.stats);
        return batch;
    }

    const unsigned used = static_cast<unsigned>(
        std::min<std::size_t>(workers, n));
    std::vector<SimStats> stats(used);
    std::vector<std::exception_ptr> errors(used);
    std::vector<std::thread> pool;
    pool.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += used)
                    batch.samples[i] = sample_robustness_at(domain, sut, seed, i, stats[w]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    for (const auto& s : stats) batch.stats.merge(s);
    return batch;
}

// Probabilistic lower bound on robustness: negate the samples, bound the
// Value-at-Risk of the negation, negate back. Equals the sample minimum
// exactly (IEEE negation is lossless).
struct RobustLowerBound {
    double bound;
    double confidence;  // 1 - (1-epsilon)^n
    std::size_t n_samples;
};

inline RobustLowerBound robust_lower_bound(std::span<const double> r_values, double epsilon) {
    std::vector<double> negated;
    negated.reserve(r_values.size());
    for (double r : r_values) negated.push_back(-r);
    const ScenarioBound ub = scenario_var_upper_bound(SampleSet(std::move(negated)), epsilon);
    return {-ub.value, ub.confidence, ub.n_samples};
}

inline RobustLowerBound robust_lower_bound(std::span<const RobustnessSample> samples,
                                           double epsilon) {
    std::vector<double> rs;
    rs.reserve(samples.size());
    for (const auto& s : samples) rs.push_back(s.r);
    return robust_lower_bound(rs, epsilon);
}

// Fraction of m fresh robustness draws strictly below the bound. The fresh
// streams live in a namespace disjoint from any bound-fitting streams.
inline double holdout_violation_fraction(const DomainSpec& domain, const SystemUnderTest& sut,
                                         double bound, std::size_t m, RngSeed seed,
                                         unsigned workers = 1, SimStats* stats = nullptr) {
    if (m == 0) throw std::invalid_argument("hold-out size must be positive");
    const RngSeed holdout_seed{seed.master, seed.stream + kHoldoutStreamBase};
    const RobustnessBatch batch = sample_robustness(domain, sut, m, holdout_seed, workers);
    if (stats) stats->merge(batch.stats);
    std::size_t violations = 0;
    for (const auto& s : batch.samples)
        if (s.r < bound) ++violations;
    return static_cast<double>(violations) / static_cast<double>(m);
}

// Empirical mass strictly below a threshold. For a deterministic system this
// estimates the volume fraction of initial conditions and parameters able to
// produce robustness below the threshold.
struct FailureMassEstimate {
    double threshold;
    double estimate;
    std::size_t n;
};

inline FailureMassEstimate estimate_failure_mass(std::span<const double> r_values,
                                                 double threshold) {
    if (r_values.empty()) throw std::invalid_argument("no samples");
    std::size_t below = 0;
    for (double r : r_values)
        if (r < threshold) ++below;
    return {threshold, static_cast<double>(below) / static_cast<double>(r_values.size()),
            r_values.size()};
}

inline FailureMassEstimate estimate_failure_mass(std::span<const RobustnessSample> samples,
                                                 double threshold) {
    std::vector<double> rs;
    rs.reserve(samples.size());
    for (const auto& s : samples) rs.push_back(s.r);
    return estimate_failure_mass(rs, threshold);
}

// Everything one verification run produced.
struct VerificationReport {
    double epsilon = 0.0;
    double gamma = 0.0;
    std::size_t n_required = 0;
    std::size_t n_used = 0;
    double bound = 0.0;  // the probabilistic lower bound, i.e. min observed robustness
    RngSeed seed;
    std::optional<std::size_t> holdout_size;
    std::optional<double> holdout_violation_fraction;
    bool bound_nonnegative = false;
    double elapsed = 0.0;  // wall-clock seconds
};

// Full pipeline: plan the sample count, collect robustness samples, fit the
// lower bound, optionally validate on fresh hold-out draws. n_samples == 0
// means "exactly the required count"; asking for fewer than required is an
// error. A hold-out fraction above epsilon still yields a report; the caller
// judges it.
inline VerificationReport verify(const DomainSpec& domain, const SystemUnderTest& sut,
                                 const RiskSpec& spec, std::size_t holdout_m, RngSeed seed,
                                 std::size_t n_samples = 0, unsigned workers = 1,
                                 SimStats* stats = nullptr,
                                 std::vector<RobustnessSample>* keep_samples = nullptr) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n_required = required_samples(spec);
    const std::size_t n_used = n_samples == 0 ? n_required : n_samples;
    if (n_used < n_required)
        throw std::invalid_argument("fewer samples than the risk spec requires");

    RobustnessBatch batch = sample_robustness(domain, sut, n_used, seed, workers);
    if (stats) stats->merge(batch.stats);
    const RobustLowerBound lb = robust_lower_bound(batch.samples, spec.epsilon);

    VerificationReport report;
    report.epsilon = spec.epsilon;
    report.gamma = spec.gamma;
    report.n_required = n_required;
    report.n_used = n_used;
    report.bound = lb.bound;
    report.seed = seed;
    report.bound_nonnegative = lb.bound >= 0.0;
    if (holdout_m > 0) {
        report.holdout_size = holdout_m;
        report.holdout_violation_fraction =
            holdout_violation_fraction(domain, sut, lb.bound, holdout_m, seed, workers, stats);
    }
    if (keep_samples) *keep_samples = std::move(batch.samples);
    report.elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace scenver
