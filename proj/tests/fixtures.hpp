#pragma once

// Shared test data builders.

#include <cmath>
#include <cstdint>
#include <vector>

#include "qbheat/field.hpp"
#include "qbheat/rng.hpp"

namespace fixture {

inline std::vector<double> random_vector(std::uint64_t seed, std::size_t n, double scale = 1.0) {
    qbheat::SplitMix64 rng(seed);
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

inline qbheat::FieldGenSpec commuting_spec(std::size_t c, double rho, std::uint64_t seed, qbheat::GenerationMode mode) {
    auto pair = qbheat::random_commuting_pair(c, rho, seed);
    qbheat::FieldGenSpec spec;
    spec.a = pair.a;
    spec.b = pair.b;
    spec.z0 = random_vector(seed ^ 0x9e3779b97f4a7c15ULL, c);
    spec.mode = mode;
    return spec;
}

// Refinement studies on a fixed grid shrink the domain with the spacing.
// Anchoring the given state at the grid center instead of the corner keeps
// the domains nested, so only the truncation error changes between levels.
inline qbheat::FieldGenSpec centered(qbheat::FieldGenSpec spec, std::size_t grid, double spacing) {
    const double half = static_cast<double>(grid / 2) * spacing;
    spec.z0 = qbheat::multiply(qbheat::mat_exp(spec.a, -half) * qbheat::mat_exp(spec.b, -half), spec.z0);
    return spec;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace fixture
