#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "susyopt/susyopt.hpp"

namespace testing_support {

using susyopt::complex;

// Normalized Hermite functions h_0..h_3 with unit oscillator length.
inline double hermite_function(int n, double x) {
    const double g = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    switch (n) {
        case 0: return g;
        case 1: return std::sqrt(2.0) * x * g;
        case 2: return (2.0 * x * x - 1.0) / std::sqrt(2.0) * g;
        case 3: return (2.0 * x * x * x - 3.0 * x) / std::sqrt(3.0) * g;
        default: throw std::invalid_argument("hermite_function: n > 3");
    }
}

inline susyopt::WaveFunction hermite(const susyopt::Grid1D& g, int n, double shift = 0.0) {
    return susyopt::sample(g, [&](double x) { return hermite_function(n, x - shift); });
}

inline double max_abs_diff(const susyopt::WaveFunction& a, const susyopt::WaveFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs(const susyopt::WaveFunction& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

// A few seeded band-limited random states.
inline std::vector<susyopt::WaveFunction> random_states(const susyopt::Grid1D& g, std::size_t count,
                                                        std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::vector<susyopt::WaveFunction> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(susyopt::experiments::random_smooth_state(g, rng));
    return out;
}

}  // namespace testing_support
