#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "susyopt/detail/linalg.hpp"
#include "susyopt/grid.hpp"
#include "susyopt/susy.hpp"

namespace susyopt {

enum class TrotterOrder { first, second };

/// n_steps repetitions of a step of length dt; total time n_steps * dt.
/// n_steps = 0 is the identity.
struct TrotterPlan {
    double dt = 0.0;
    std::size_t n_steps = 0;
    TrotterOrder order = TrotterOrder::second;

    double total_time() const { return dt * static_cast<double>(n_steps); }
};

inline TrotterPlan make_plan(double dt, std::size_t n_steps,
                             TrotterOrder order = TrotterOrder::second) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        std::ostringstream os;
        os << "trotter plan: dt must be positive, got " << dt;
        throw ConfigError(os.str());
    }
    return TrotterPlan{dt, n_steps, order};
}

/// Plan reaching time t in steps of dt. t must be an integer multiple of dt.
inline TrotterPlan plan_for_duration(double t, double dt, TrotterOrder order = TrotterOrder::second) {
    if (!(t >= 0.0)) throw ConfigError("trotter plan: negative duration");
    const double steps = t / make_plan(dt, 0).dt;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
        std::ostringstream os;
        os << "trotter plan: t = " << t << " is not an integer multiple of dt = " << dt;
        throw ConfigError(os.str());
    }
    return TrotterPlan{dt, static_cast<std::size_t>(rounded), order};
}

struct EvolutionTrace {
    std::vector<double> times;
    std::vector<std::vector<double>> densities;  // |psi|^2 per sample
    WaveFunction final_state;
};

/// exp(-i p^2 tau / 2). Unitary; tau = 0 is the identity.
inline WaveFunction kinetic_step(WaveFunction psi, double tau) {
    if (!(tau >= 0.0)) {
        std::ostringstream os;
        os << "kinetic_step: tau must be >= 0, got " << tau;
        throw ContractError(os.str());
    }
    if (tau == 0.0) return psi;
    const Grid1D g = psi.grid();
    auto phase = [&](std::size_t j) { return std::polar(1.0, -0.5 * g.p(j) * g.p(j) * tau); };
    if (psi.representation() == Representation::momentum) {
        for (std::size_t j = 0; j < psi.size(); ++j) psi[j] *= phase(j);
    } else {
        apply_momentum_multiplier(psi.amplitudes(), g, phase);
    }
    return psi;
}

/// exp(-i V(x) tau): a thin phase plate with phi(x) = V(x) tau.
inline WaveFunction potential_step(WaveFunction psi, const PotentialField& v, double tau) {
    psi.require_representation(Representation::position, "potential_step");
    if (!(psi.grid() == v.grid())) throw ContractError("potential_step: grid mismatch");
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= std::polar(1.0, -v[i] * tau);
    return psi;
}

struct TrotterOptions {
    /// Fuse the trailing half kinetic step of one step with the leading half of
    /// the next. Algebraically identical to the unfused product.
    bool merge_half_steps = true;
    /// Record every stride-th step (the final step is always recorded).
    std::size_t stride = 1;
};

using StepObserver = std::function<void(std::size_t step, double t, const WaveFunction& psi)>;

/**
 * Split-step propagation. Calls `observe` with the state at step 0 and at every
 * stride-th step boundary, and always at the last step. Returns the final state.
 *
 * Second order:  (K(dt/2) P(dt) K(dt/2))^n
 * First order:   (K(dt) P(dt))^n, potential applied first.
 */
inline WaveFunction trotter_propagate(const WaveFunction& psi0, const PotentialField& v,
                                      const TrotterPlan& plan, const TrotterOptions& options = {},
                                      const StepObserver& observe = {}) {
    psi0.require_representation(Representation::position, "trotter_evolve");
    if (!(psi0.grid() == v.grid())) throw ContractError("trotter_evolve: grid mismatch");
    if (!(plan.dt > 0.0)) throw ConfigError("trotter_evolve: dt must be positive");
    const std::size_t stride = std::max<std::size_t>(options.stride, 1);

    const Grid1D g = psi0.grid();
    const std::size_t n = g.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double dt = plan.dt;

    std::vector<complex> half_k(n), full_k(n), pot(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double e = 0.5 * g.p(j) * g.p(j);
        half_k[j] = std::polar(inv_n, -e * 0.5 * dt);
        full_k[j] = std::polar(inv_n, -e * dt);
    }
    for (std::size_t i = 0; i < n; ++i) pot[i] = std::polar(1.0, -v[i] * dt);

    auto wants = [&](std::size_t s) { return observe && (s % stride == 0 || s == plan.n_steps); };
    auto mul = [](std::vector<complex>& a, const std::vector<complex>& m) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] *= m[i];
    };
    auto kinetic = [&](std::vector<complex>& a, const std::vector<complex>& m) {
        detail::fft_forward(a);
        mul(a, m);
        detail::fft_backward(a);
    };

    if (observe) observe(0, 0.0, psi0);
    std::vector<complex> a = psi0.amplitudes();
    if (plan.n_steps == 0) return psi0;

    auto emit = [&](std::size_t s, std::vector<complex> amps) {
        observe(s, dt * static_cast<double>(s), WaveFunction(g, std::move(amps)));
    };

    if (plan.order == TrotterOrder::first) {
        for (std::size_t s = 1; s <= plan.n_steps; ++s) {
            mul(a, pot);
            kinetic(a, full_k);
            if (wants(s)) emit(s, a);
        }
        return WaveFunction(g, std::move(a));
    }

    if (!options.merge_half_steps) {
        for (std::size_t s = 1; s <= plan.n_steps; ++s) {
            kinetic(a, half_k);
            mul(a, pot);
            kinetic(a, half_k);
            if (wants(s)) emit(s, a);
        }
        return WaveFunction(g, std::move(a));
    }

    // Merged: a holds the state half a kinetic step past each boundary.
    kinetic(a, half_k);
    std::vector<complex> obs;
    for (std::size_t s = 1; s <= plan.n_steps; ++s) {
        mul(a, pot);
        detail::fft_forward(a);
        if (s == plan.n_steps) {
            mul(a, half_k);
            detail::fft_backward(a);
            if (wants(s)) emit(s, a);
            break;
        }
        if (wants(s)) {
            obs = a;
            mul(obs, half_k);
            detail::fft_backward(obs);
            emit(s, std::move(obs));
        }
        mul(a, full_k);
        detail::fft_backward(a);
    }
    return WaveFunction(g, std::move(a));
}

/// Split-step evolution with the density recorded at every stride-th step.
inline EvolutionTrace trotter_evolve(const WaveFunction& psi0, const PotentialField& v,
                                     const TrotterPlan& plan, const TrotterOptions& options = {}) {
    EvolutionTrace trace{{}, {}, psi0};
    trace.final_state = trotter_propagate(
        psi0, v, plan, options, [&](std::size_t, double t, const WaveFunction& psi) {
            trace.times.push_back(t);
            trace.densities.push_back(density(psi));
        });
    return trace;
}

/**
 * Reference propagator: full eigendecomposition of the dense spectral
 * Hamiltonian, psi(t) = sum_n e^{-i E_n t} <n|psi> |n>.
 *
 * Construction is O(n^3); evolve() is O(n^2). Accepts negative t.
 */
class ExactPropagator {
public:
    explicit ExactPropagator(const PotentialField& v)
        : grid_(v.grid()), eigen_(detail::symmetric_eigen(spectral_hamiltonian(v), v.grid().size())) {}

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& energies() const { return eigen_.values; }

    WaveFunction evolve(const WaveFunction& psi, double t) const {
        psi.require_representation(Representation::position, "exact_evolve");
        if (!(psi.grid() == grid_)) throw ContractError("exact_evolve: grid mismatch");
        const std::size_t n = grid_.size();
        std::vector<complex> out(n);
        const auto& in = psi.amplitudes();
        for (std::size_t k = 0; k < n; ++k) {
            const double* u = eigen_.vector(k);
            double re = 0.0, im = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                re += u[i] * in[i].real();
                im += u[i] * in[i].imag();
            }
            const complex c = complex(re, im) * std::polar(1.0, -eigen_.values[k] * t);
            for (std::size_t i = 0; i < n; ++i) out[i] += u[i] * c;
        }
        return WaveFunction(grid_, std::move(out));
    }

private:
    Grid1D grid_;
    detail::SymmetricEigenpairs eigen_;
};

inline WaveFunction exact_evolve(const WaveFunction& psi, const PotentialField& v, double t) {
    if (!(t >= 0.0)) throw ContractError("exact_evolve: t must be >= 0");
    return ExactPropagator(v).evolve(psi, t);
}

struct ConvergencePoint {
    std::size_t n_steps;
    double infidelity;  // 1 - fidelity(trotter, exact)
    double l2_error;    // ||trotter - exact|| / ||exact||
};

/// Trotter error against the exact propagator at fixed t for each step count.
inline std::vector<ConvergencePoint> trotter_convergence_scan(
    const WaveFunction& psi, const ExactPropagator& oracle, const PotentialField& v, double t,
    const std::vector<std::size_t>& steps, TrotterOrder order = TrotterOrder::second,
    FidelityConvention convention = FidelityConvention::modulus) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (steps[i] == 0 || (i > 0 && steps[i] <= steps[i - 1])) {
            throw ConfigError("trotter_convergence_scan: step counts must be positive and ascending");
        }
    }
    const WaveFunction exact = oracle.evolve(psi, t);
    const double exact_norm = norm(exact);
    std::vector<ConvergencePoint> out;
    for (std::size_t n : steps) {
        const auto plan = make_plan(t / static_cast<double>(n), n, order);
        const WaveFunction approx = trotter_propagate(psi, v, plan);
        out.push_back({n, 1.0 - fidelity(approx, exact, convention),
                       norm(approx - exact) / exact_norm});
    }
    return out;
}

/// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ContractError("fit_loglog_slope: need at least two matching samples");
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw NumericalError("fit_loglog_slope: non-positive sample");
        }
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace susyopt
