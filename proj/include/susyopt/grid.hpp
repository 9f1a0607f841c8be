#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "susyopt/detail/fft.hpp"
#include "susyopt/errors.hpp"

namespace susyopt {

using complex = std::complex<double>;

/**
 * Uniform periodic grid x_i = x_min + i*dx, i in [0, n), dx = (x_max - x_min)/n.
 *
 * The momentum grid has spacing dp = 2*pi/(n*dx) and covers [-n/2, n/2)*dp.
 * Momentum samples are stored in FFT-native order: index j < n/2 holds
 * j*dp, index j >= n/2 holds (j - n)*dp. Code that needs a momentum value
 * must go through p(j) or momenta(), never through the raw index.
 */
class Grid1D {
public:
    Grid1D(std::size_t n_points, double x_min, double x_max)
        : n_(n_points), x_min_(x_min), x_max_(x_max) {
        if (n_points < 2) {
            throw ConfigError("grid: n_points must be >= 2, got " + std::to_string(n_points));
        }
        if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
            std::ostringstream os;
            os << "grid: extent must be positive and finite, got [" << x_min << ", " << x_max << "]";
            throw ConfigError(os.str());
        }
    }

    std::size_t size() const { return n_; }
    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double length() const { return x_max_ - x_min_; }
    double dx() const { return length() / static_cast<double>(n_); }
    double dp() const { return 2.0 * std::numbers::pi / length(); }

    double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx(); }

    double p(std::size_t j) const {
        const auto n = static_cast<std::ptrdiff_t>(n_);
        auto k = static_cast<std::ptrdiff_t>(j);
        if (k >= n / 2 + n % 2) k -= n;
        return static_cast<double>(k) * dp();
    }

    /// Index of the Nyquist bin (-n/2 * dp) for even n; size() otherwise.
    std::size_t nyquist_index() const { return n_ % 2 == 0 ? n_ / 2 : n_; }

    std::vector<double> positions() const {
        std::vector<double> xs(n_);
        for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
        return xs;
    }

    std::vector<double> momenta() const {
        std::vector<double> ps(n_);
        for (std::size_t j = 0; j < n_; ++j) ps[j] = p(j);
        return ps;
    }

    /// Index of the grid point mirrored through x = 0 (periodic wrap).
    /// Exact only when the grid is symmetric, x_min = -x_max.
    std::size_t mirror_index(std::size_t i) const { return (n_ - i) % n_; }

    bool symmetric() const { return x_min_ == -x_max_; }

    friend bool operator==(const Grid1D&, const Grid1D&) = default;

private:
    std::size_t n_;
    double x_min_;
    double x_max_;
};

inline Grid1D make_grid(std::size_t n_points, double x_min, double x_max) {
    return Grid1D(n_points, x_min, x_max);
}

enum class Representation { position, momentum };

/// Complex amplitudes on a grid. Not necessarily normalized.
class WaveFunction {
public:
    WaveFunction(Grid1D grid, std::vector<complex> amplitudes,
                 Representation rep = Representation::position)
        : grid_(std::move(grid)), amps_(std::move(amplitudes)), rep_(rep) {
        if (amps_.size() != grid_.size()) {
            throw ContractError("wavefunction: amplitude count " + std::to_string(amps_.size()) +
                                " does not match grid size " + std::to_string(grid_.size()));
        }
    }

    static WaveFunction zeros(const Grid1D& grid, Representation rep = Representation::position) {
        return WaveFunction(grid, std::vector<complex>(grid.size()), rep);
    }

    const Grid1D& grid() const { return grid_; }
    Representation representation() const { return rep_; }
    std::size_t size() const { return amps_.size(); }

    const std::vector<complex>& amplitudes() const { return amps_; }
    std::vector<complex>& amplitudes() { return amps_; }

    complex operator[](std::size_t i) const { return amps_[i]; }
    complex& operator[](std::size_t i) { return amps_[i]; }

    /// Quadrature weight: dx in position space, dp in momentum space.
    double weight() const { return rep_ == Representation::position ? grid_.dx() : grid_.dp(); }

    WaveFunction& operator*=(complex s) {
        for (auto& a : amps_) a *= s;
        return *this;
    }

    WaveFunction& operator+=(const WaveFunction& other) {
        require_compatible(other, "operator+=");
        for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] += other.amps_[i];
        return *this;
    }

    WaveFunction& operator-=(const WaveFunction& other) {
        require_compatible(other, "operator-=");
        for (std::size_t i = 0; i < amps_.size(); ++i) amps_[i] -= other.amps_[i];
        return *this;
    }

    friend WaveFunction operator*(complex s, WaveFunction psi) { return psi *= s; }
    friend WaveFunction operator+(WaveFunction a, const WaveFunction& b) { return a += b; }
    friend WaveFunction operator-(WaveFunction a, const WaveFunction& b) { return a -= b; }

    void require_compatible(const WaveFunction& other, const char* what) const {
        if (!(grid_ == other.grid_)) {
            throw ContractError(std::string(what) + ": wavefunctions live on different grids");
        }
        if (rep_ != other.rep_) {
            throw ContractError(std::string(what) + ": representation mismatch");
        }
    }

    void require_representation(Representation rep, const char* what) const {
        if (rep_ != rep) {
            throw ContractError(std::string(what) + ": expected " +
                                (rep == Representation::position ? "position" : "momentum") +
                                " representation");
        }
    }

private:
    Grid1D grid_;
    std::vector<complex> amps_;
    Representation rep_;
};

/// Samples f at every grid point. f: double -> complex (or real).
template <class F>
WaveFunction sample(const Grid1D& grid, F&& f) {
    std::vector<complex> amps(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double xi = grid.x(i);
        const complex v = f(xi);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            std::ostringstream os;
            os << "sample: non-finite value at x = " << xi << " (index " << i << ")";
            throw SamplingError(os.str());
        }
        amps[i] = v;
    }
    return WaveFunction(grid, std::move(amps));
}

/// Riemann approximation of <a|b>.
inline complex inner(const WaveFunction& a, const WaveFunction& b) {
    a.require_compatible(b, "inner");
    complex sum{0.0, 0.0};
    const auto& x = a.amplitudes();
    const auto& y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::conj(x[i]) * y[i];
    return sum * a.weight();
}

inline double norm_squared(const WaveFunction& psi) {
    double sum = 0.0;
    for (const auto& a : psi.amplitudes()) sum += std::norm(a);
    return sum * psi.weight();
}

inline double norm(const WaveFunction& psi) { return std::sqrt(norm_squared(psi)); }

inline WaveFunction normalized(WaveFunction psi) {
    const double n = norm(psi);
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DegenerateStateError("normalize: state has zero or non-finite norm");
    }
    psi *= complex(1.0 / n, 0.0);
    return psi;
}

inline std::vector<double> density(const WaveFunction& psi) {
    std::vector<double> rho(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) rho[i] = std::norm(psi[i]);
    return rho;
}

enum class FidelityConvention { modulus, modulus_squared };

/// |<a|b>| / (|a| |b|), or its square.
inline double fidelity(const WaveFunction& a, const WaveFunction& b,
                       FidelityConvention convention = FidelityConvention::modulus) {
    a.require_compatible(b, "fidelity");
    // Separate accumulators keep fidelity(a,b) == fidelity(b,a) bit for bit,
    // even when the compiler contracts products into FMAs.
    double aa = 0.0, bb = 0.0, rr = 0.0, ii = 0.0, ri = 0.0, ir = 0.0;
    const auto& x = a.amplitudes();
    const auto& y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) {
        aa += std::norm(x[i]);
        bb += std::norm(y[i]);
        rr += x[i].real() * y[i].real();
        ii += x[i].imag() * y[i].imag();
        ri += x[i].real() * y[i].imag();
        ir += x[i].imag() * y[i].real();
    }
    if (!(aa > 0.0) || !(bb > 0.0)) {
        throw DegenerateStateError("fidelity: zero-norm input");
    }
    const double re = rr + ii;
    const double im = ri - ir;
    double f = std::hypot(re, im) / (std::sqrt(aa) * std::sqrt(bb));
    f = std::min(f, 1.0);
    return convention == FidelityConvention::modulus ? f : f * f;
}

/**
 * Unitary DFT, psi~(p) = (1/sqrt(2 pi)) * integral psi(x) e^{-ipx} dx.
 *
 * Discretized as psi~_j = dx/sqrt(2 pi) * e^{-i p_j x_min} * sum_i psi_i e^{-2 pi i ij/n},
 * so norms computed with weight dp in momentum space equal those with weight dx
 * in position space.
 */
inline WaveFunction to_momentum(WaveFunction psi) {
    psi.require_representation(Representation::position, "to_momentum");
    const Grid1D& g = psi.grid();
    auto& a = psi.amplitudes();
    detail::fft_forward(a);
    const double scale = g.dx() / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] *= std::polar(scale, -g.p(j) * g.x_min());
    }
    return WaveFunction(g, std::move(a), Representation::momentum);
}

inline WaveFunction to_position(WaveFunction psi) {
    psi.require_representation(Representation::momentum, "to_position");
    const Grid1D& g = psi.grid();
    auto& a = psi.amplitudes();
    const double scale = std::sqrt(2.0 * std::numbers::pi) / (g.dx() * static_cast<double>(g.size()));
    for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] *= std::polar(scale, g.p(j) * g.x_min());
    }
    detail::fft_backward(a);
    return WaveFunction(g, std::move(a), Representation::position);
}

/// Multiplies the position-space amplitudes by m(p) applied in momentum space.
/// Internal helper for kinetic steps and spectral derivatives; skips the
/// x_min phase and normalization of to_momentum, which cancel.
template <class Multiplier>
void apply_momentum_multiplier(std::vector<complex>& amps, const Grid1D& grid, Multiplier&& m) {
    detail::fft_forward(amps);
    const double inv_n = 1.0 / static_cast<double>(grid.size());
    for (std::size_t j = 0; j < amps.size(); ++j) amps[j] *= m(j) * inv_n;
    detail::fft_backward(amps);
}

}  // namespace susyopt
