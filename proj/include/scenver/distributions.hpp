#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "scenver/risk.hpp"
#include "scenver/rng.hpp"

namespace scenver {

// Parametric descriptions of the sampleable scalar distributions. Parameters
// are validated at construction, never at draw time.

struct Uniform {
    double lo;
    double hi;
    Uniform(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
            throw std::invalid_argument("uniform requires finite lo < hi");
    }
};

struct Gaussian {
    double mean;
    double stddev;
    Gaussian(double mean_, double stddev_) : mean(mean_), stddev(stddev_) {
        if (!std::isfinite(mean) || !std::isfinite(stddev) || !(stddev > 0.0))
            throw std::invalid_argument("gaussian requires stddev > 0");
    }
};

struct ChiSquared {
    int dof;
    explicit ChiSquared(int dof_) : dof(dof_) {
        if (dof < 1) throw std::invalid_argument("chi-squared requires dof >= 1");
    }
};

struct PointMass {
    double value;
    explicit PointMass(double value_) : value(value_) {
        if (!std::isfinite(value)) throw std::invalid_argument("point mass must be finite");
    }
};

struct Mixture;

using DistributionSpec = std::variant<Uniform, Gaussian, ChiSquared, PointMass, Mixture>;

struct Mixture {
    std::vector<double> weights;
    std::vector<DistributionSpec> components;

    Mixture(std::vector<double> weights_, std::vector<DistributionSpec> components_);
};

inline Mixture::Mixture(std::vector<double> weights_,
                        std::vector<DistributionSpec> components_)
    : weights(std::move(weights_)), components(std::move(components_)) {
    if (weights.empty() || weights.size() != components.size())
        throw std::invalid_argument("mixture weights and components disagree");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("mixture weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to 1");
}

namespace detail {

struct DrawVisitor {
    SeededRng& rng;
    double operator()(const Uniform& d) const { return rng.uniform(d.lo, d.hi); }
    double operator()(const Gaussian& d) const { return rng.gaussian(d.mean, d.stddev); }
    double operator()(const ChiSquared& d) const { return rng.chi_squared(d.dof); }
    double operator()(const PointMass& d) const { return d.value; }
    double operator()(const Mixture& d) const {
        const double u = rng.uniform01();
        double acc = 0.0;
        std::size_t pick = d.components.size() - 1;
        for (std::size_t i = 0; i < d.weights.size(); ++i) {
            acc += d.weights[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        return std::visit(*this, d.components[pick]);
    }
};

}  // namespace detail

inline double draw_one(const DistributionSpec& dist, SeededRng& rng) {
    return std::visit(detail::DrawVisitor{rng}, dist);
}

// n independent draws; the seed that produced them travels with the set.
inline SampleSet sample(const DistributionSpec& dist, std::size_t n, RngSeed seed) {
    if (n == 0) throw std::invalid_argument("sample count must be positive");
    SeededRng rng(seed, RngRole::draw);
    std::vector<double> xs;
    xs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(draw_one(dist, rng));
    return SampleSet(std::move(xs), seed);
}

// Empirical quantile oracle: the smallest sample value v such that at least
// a 1-epsilon fraction of the set lies at or below v.
inline double empirical_var(const SampleSet& samples, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon outside [0,1)");
    std::vector<double> sorted(samples.values());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    const double target = (1.0 - epsilon) * static_cast<double>(n);
    auto rank = static_cast<std::size_t>(std::ceil(target));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return sorted[rank - 1];
}

// One oracle-vs-scenario comparison run: `trials` independent scenario
// bounds against a single large-sample quantile estimate.
struct VarGapResult {
    std::vector<double> gaps;  // bound - oracle estimate, one entry per trial
    double min_gap;
    double oracle_var;
};

inline VarGapResult var_gap_trial(const DistributionSpec& dist, double epsilon,
                                  std::size_t n_scenario, std::size_t n_oracle,
                                  std::size_t trials, RngSeed seed) {
    if (n_scenario == 0 || n_oracle == 0 || trials == 0)
        throw std::invalid_argument("counts must be positive");
    const RngSeed oracle_seed{seed.master, seed.stream + kOracleStreamBase};
    const double oracle = empirical_var(sample(dist, n_oracle, oracle_seed), epsilon);

    VarGapResult out;
    out.oracle_var = oracle;
    out.gaps.reserve(trials);
    out.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trials; ++i) {
        const RngSeed trial_seed{seed.master, seed.stream + i};
        const auto bound = scenario_var_upper_bound(sample(dist, n_scenario, trial_seed), epsilon);
        const double gap = bound.value - oracle;
        out.gaps.push_back(gap);
        out.min_gap = std::min(out.min_gap, gap);
    }
    return out;
}

// Compact text form used by the CLI and in report files, e.g.
// "uniform:-1|1", "gaussian:0|1", "chisq:2", "pointmass:0",
// "mixture:0.5@gaussian:-2|0.5+0.5@gaussian:3|1".
std::string to_string(const DistributionSpec& dist);

namespace detail {

struct NameVisitor {
    std::string operator()(const Uniform& d) const {
        return "uniform:" + num(d.lo) + "|" + num(d.hi);
    }
    std::string operator()(const Gaussian& d) const {
        return "gaussian:" + num(d.mean) + "|" + num(d.stddev);
    }
    std::string operator()(const ChiSquared& d) const {
        return "chisq:" + std::to_string(d.dof);
    }
    std::string operator()(const PointMass& d) const { return "pointmass:" + num(d.value); }
    std::string operator()(const Mixture& d) const {
        std::string s = "mixture:";
        for (std::size_t i = 0; i < d.weights.size(); ++i) {
            if (i) s += "+";
            s += num(d.weights[i]) + "@" + to_string(d.components[i]);
        }
        return s;
    }

    static std::string num(double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return buf;
    }
};

}  // namespace detail

inline std::string to_string(const DistributionSpec& dist) {
    return std::visit(detail::NameVisitor{}, dist);
}

namespace detail {

inline double parse_num(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad " + what + " in distribution spec: '" + text + "'");
    }
    if (used != text.size())
        throw std::invalid_argument("bad " + what + " in distribution spec: '" + text + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

}  // namespace detail

// Parses the compact text form accepted on the command line. Accepts "," or
// "|" between numeric parameters; mixture components use "|" internally so
// whole specs stay comma-free for CSV and config embedding.
inline DistributionSpec parse_distribution(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    const char sep = args.find('|') != std::string::npos ? '|' : ',';

    if (kind == "uniform") {
        const auto p = detail::split(args, sep);
        if (p.size() != 2) throw std::invalid_argument("uniform expects lo,hi: '" + text + "'");
        return Uniform(detail::parse_num(p[0], "uniform lo"), detail::parse_num(p[1], "uniform hi"));
    }
    if (kind == "gaussian" || kind == "normal") {
        const auto p = detail::split(args, sep);
        if (p.size() != 2) throw std::invalid_argument("gaussian expects mean,stddev: '" + text + "'");
        return Gaussian(detail::parse_num(p[0], "gaussian mean"),
                        detail::parse_num(p[1], "gaussian stddev"));
    }
    if (kind == "chisq" || kind == "chisquared") {
        const double dof = detail::parse_num(args, "chi-squared dof");
        if (dof != std::floor(dof)) throw std::invalid_argument("chi-squared dof must be integral");
        return ChiSquared(static_cast<int>(dof));
    }
    if (kind == "pointmass" || kind == "point") {
        return PointMass(detail::parse_num(args, "point mass value"));
    }
    if (kind == "mixture" || kind == "mix") {
        // '+' separates components; a '+' directly after e/E belongs to an
        // exponent and stays put
        std::vector<std::string> parts;
        std::string cur;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == '+' && (i == 0 || (args[i - 1] != 'e' && args[i - 1] != 'E'))) {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += args[i];
            }
        }
        parts.push_back(cur);
        std::vector<double> weights;
        std::vector<DistributionSpec> components;
        for (const auto& part : parts) {
            const auto at = part.find('@');
            if (at == std::string::npos)
                throw std::invalid_argument("mixture component expects weight@spec: '" + text + "'");
            weights.push_back(detail::parse_num(part.substr(0, at), "mixture weight"));
            components.push_back(parse_distribution(part.substr(at + 1)));
        }
        return Mixture(std::move(weights), std::move(components));
    }
    throw std::invalid_argument("unknown distribution kind: '" + text + "'");
}

}  // namespace scenver
