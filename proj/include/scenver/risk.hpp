#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scenver/rng.hpp"

namespace scenver {

// Risk level epsilon and required confidence gamma. Both live in [0,1];
// the sample planner additionally needs them strictly inside (0,1).
struct RiskSpec {
    double epsilon;
    double gamma;

    RiskSpec(double epsilon_, double gamma_) : epsilon(epsilon_), gamma(gamma_) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0))
            throw std::invalid_argument("risk spec outside [0,1]");
    }
};

// Ordered, finite collection of scalar observations. Rejects empty sets and
// non-finite entries at construction: a NaN robustness value is a simulator
// fault that must surface, not data to be dropped.
class SampleSet {
  public:
    explicit SampleSet(std::vector<double> values,
                       std::optional<RngSeed> seed = std::nullopt)
        : values_(std::move(values)), seed_(seed) {
        if (values_.empty()) throw std::invalid_argument("no scenarios");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("invalid sample");
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    const std::optional<RngSeed>& seed() const { return seed_; }

  private:
    std::vector<double> values_;
    std::optional<RngSeed> seed_;
};

// P[bound >= VaR_epsilon] >= 1 - (1-epsilon)^n for the n-sample bound.
inline double confidence_bound(std::size_t n, double epsilon) {
    if (n == 0) throw std::invalid_argument("degenerate sample count");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon outside [0,1]");
    return 1.0 - std::pow(1.0 - epsilon, static_cast<double>(n));
}

// High-confidence upper bound on the Value-at-Risk of the sampled variable.
struct ScenarioBound {
    double value;           // the bound itself: max of the sample set
    std::size_t n_samples;
    double epsilon;
    double confidence;      // 1 - (1-epsilon)^n_samples
};

// The scenario program (minimize zeta subject to zeta >= x_i for all i) is a
// one-dimensional LP whose unique solution is the sample maximum, so it is
// solved in closed form.
inline ScenarioBound scenario_var_upper_bound(const SampleSet& samples, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon outside [0,1]");
    const double zeta =
        *std::max_element(samples.values().begin(), samples.values().end());
    return {zeta, samples.size(), epsilon, confidence_bound(samples.size(), epsilon)};
}

// Smallest N with 1 - (1-epsilon)^N >= gamma. The real-valued ceiling is
// re-verified against confidence_bound in both directions so floating-point
// error at the boundary can neither miss the target confidence nor demand a
// sample more than necessary.
inline std::size_t required_samples(const RiskSpec& spec) {
    const double eps = spec.epsilon;
    const double gamma = spec.gamma;
    if (!(eps > 0.0 && eps < 1.0) || !(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("degenerate risk spec");
    const double raw = std::log1p(-gamma) / std::log1p(-eps);
    if (!(raw < 1e18)) throw std::overflow_error("sample requirement overflows");
    auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(raw)));
    while (confidence_bound(n, eps) < gamma) ++n;
    while (n > 1 && confidence_bound(n - 1, eps) >= gamma) --n;
    return n;
}

inline std::size_t required_samples(double epsilon, double gamma) {
    return required_samples(RiskSpec(epsilon, gamma));
}

// Smallest epsilon achieving confidence gamma from n samples:
// 1 - (1-gamma)^(1/n). Nudged by ulps against confidence_bound so the
// round trip required_samples(epsilon_for(n, gamma), gamma) <= n is exact.
inline double epsilon_for(std::size_t n, double gamma) {
    if (n == 0) throw std::invalid_argument("degenerate sample count");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma outside (0,1)");
    double eps = -std::expm1(std::log1p(-gamma) / static_cast<double>(n));
    while (confidence_bound(n, eps) < gamma) eps = std::nextafter(eps, 1.0);
    return eps;
}

}  // namespace scenver
