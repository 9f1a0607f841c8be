#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "susyopt/detail/linalg.hpp"
#include "susyopt/grid.hpp"

namespace susyopt {

/// W(x) = sqrt(omega) * (x/x0 + A exp(-x^2 / (4 sigma^2))), x0 = 1/sqrt(omega).
struct BarrierParams {
    double omega = 1.0;
    double amplitude = std::sqrt(26.0);
    double sigma = 0.5;

    double x0() const { return 1.0 / std::sqrt(omega); }
};

/// W and W' sampled on a grid.
struct TabulatedW {
    Grid1D grid;
    std::vector<double> w;
    std::vector<double> w_prime;
};

class Superpotential {
public:
    enum class Kind { paper_form, tabulated };

    static Superpotential paper_form(BarrierParams params) {
        if (!(params.omega > 0.0) || !(params.sigma > 0.0) || !std::isfinite(params.amplitude)) {
            std::ostringstream os;
            os << "superpotential: need omega > 0, sigma > 0 and finite A (omega=" << params.omega
               << ", sigma=" << params.sigma << ", A=" << params.amplitude << ")";
            throw ConfigError(os.str());
        }
        return Superpotential(params);
    }

    /// Tabulated W with its derivative. W' must match centered differences of W
    /// at interior points within `tolerance * max|W'|`.
    static Superpotential tabulated(const Grid1D& grid, std::vector<double> w,
                                    std::vector<double> w_prime, double tolerance = 1e-6) {
        if (w.size() != grid.size() || w_prime.size() != grid.size()) {
            throw ConfigError("superpotential: tabulated sizes do not match the grid");
        }
        double scale = 0.0;
        for (double d : w_prime) scale = std::max(scale, std::abs(d));
        scale = std::max(scale, 1.0);
        const double h = grid.dx();
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double fd = (w[i + 1] - w[i - 1]) / (2.0 * h);
            if (std::abs(fd - w_prime[i]) > tolerance * scale) {
                std::ostringstream os;
                os << "superpotential: W' disagrees with centered difference of W at x = "
                   << grid.x(i) << " (" << w_prime[i] << " vs " << fd << ")";
                throw ConfigError(os.str());
            }
        }
        return Superpotential(TabulatedW{grid, std::move(w), std::move(w_prime)});
    }

    Kind kind() const {
        return std::holds_alternative<BarrierParams>(form_) ? Kind::paper_form : Kind::tabulated;
    }

    /// Parameters of the analytic form; nullopt for tabulated.
    std::optional<BarrierParams> params() const {
        if (const auto* p = std::get_if<BarrierParams>(&form_)) return *p;
        return std::nullopt;
    }

    double W(double x) const {
        if (const auto* p = std::get_if<BarrierParams>(&form_)) {
            const double s2 = p->sigma * p->sigma;
            return std::sqrt(p->omega) * (x / p->x0() + p->amplitude * std::exp(-x * x / (4.0 * s2)));
        }
        return interpolate(std::get<TabulatedW>(form_).w, x);
    }

    double W_prime(double x) const {
        if (const auto* p = std::get_if<BarrierParams>(&form_)) {
            const double s2 = p->sigma * p->sigma;
            return std::sqrt(p->omega) *
                   (1.0 / p->x0() - p->amplitude * x / (2.0 * s2) * std::exp(-x * x / (4.0 * s2)));
        }
        return interpolate(std::get<TabulatedW>(form_).w_prime, x);
    }

    std::vector<double> sample_W(const Grid1D& grid) const {
        if (const auto* t = std::get_if<TabulatedW>(&form_); t && t->grid == grid) return t->w;
        std::vector<double> out(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] = W(grid.x(i));
        return out;
    }

    std::vector<double> sample_W_prime(const Grid1D& grid) const {
        if (const auto* t = std::get_if<TabulatedW>(&form_); t && t->grid == grid) return t->w_prime;
        std::vector<double> out(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] = W_prime(grid.x(i));
        return out;
    }

private:
    explicit Superpotential(std::variant<BarrierParams, TabulatedW> form) : form_(std::move(form)) {}

    double interpolate(const std::vector<double>& values, double x) const {
        const auto& g = std::get<TabulatedW>(form_).grid;
        const double last = g.x(g.size() - 1);
        if (!(x >= g.x_min() && x <= last)) {
            std::ostringstream os;
            os << "superpotential: x = " << x << " outside tabulated domain [" << g.x_min() << ", "
               << last << "]";
            throw ContractError(os.str());
        }
        const double s = (x - g.x_min()) / g.dx();
        const auto i = std::min(static_cast<std::size_t>(s), g.size() - 2);
        const double frac = s - static_cast<double>(i);
        return values[i] * (1.0 - frac) + values[i + 1] * frac;
    }

    std::variant<BarrierParams, TabulatedW> form_;
};

struct PotentialLabel {
    enum class Kind { V1, V2, eta, custom };
    Kind kind = Kind::custom;
    double eta = 0.0;

    std::string str() const {
        switch (kind) {
            case Kind::V1: return "V1";
            case Kind::V2: return "V2";
            case Kind::eta: {
                std::ostringstream os;
                os << "eta(" << eta << ")";
                return os.str();
            }
            case Kind::custom: break;
        }
        return "custom";
    }
};

/// Real potential energy sampled on a grid.
class PotentialField {
public:
    PotentialField(Grid1D grid, std::vector<double> values, PotentialLabel label = {})
        : grid_(std::move(grid)), values_(std::move(values)), label_(label) {
        if (values_.size() != grid_.size()) {
            throw ContractError("potential: value count does not match grid size");
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) {
                std::ostringstream os;
                os << "potential: non-finite value at x = " << grid_.x(i);
                throw SamplingError(os.str());
            }
        }
    }

    template <class F>
    static PotentialField sample(const Grid1D& grid, F&& f, PotentialLabel label = {}) {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.x(i));
        return PotentialField(grid, std::move(v), label);
    }

    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    const PotentialLabel& label() const { return label_; }

private:
    Grid1D grid_;
    std::vector<double> values_;
    PotentialLabel label_;
};

/// V1 = (W^2 + W')/2 (H1 = B B†), V2 = (W^2 - W')/2 (H2 = B† B).
inline PotentialField partner_potential(const Superpotential& w, int which, const Grid1D& grid) {
    if (which != 1 && which != 2) {
        throw ContractError("partner_potential: which must be 1 or 2");
    }
    const auto ws = w.sample_W(grid);
    const auto wp = w.sample_W_prime(grid);
    const double sign = which == 1 ? 1.0 : -1.0;
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (ws[i] * ws[i] + sign * wp[i]);
    return PotentialField(grid, std::move(v),
                          {which == 1 ? PotentialLabel::Kind::V1 : PotentialLabel::Kind::V2, 0.0});
}

/// V_eta = omega^2 x^2/2 + (omega A^2/2) e^{-2x^2/x0^2} + (2 eta omega A x/x0) e^{-x^2/x0^2}.
/// Defined only for sigma = x0/2; eta = 0 and eta = 1 reproduce V1 - omega/2 and V2 + omega/2.
inline PotentialField eta_potential(const BarrierParams& p, double eta, const Grid1D& grid) {
    const double x0 = p.x0();
    if (std::abs(p.sigma - 0.5 * x0) > 1e-12 * x0) {
        std::ostringstream os;
        os << "eta_potential: unsupported parameterization, requires sigma = x0/2 = " << 0.5 * x0
           << " but sigma = " << p.sigma;
        throw ConfigError(os.str());
    }
    const double w = p.omega;
    const double a = p.amplitude;
    return PotentialField::sample(
        grid,
        [&](double x) {
            const double g = std::exp(-x * x / (x0 * x0));
            return 0.5 * w * w * x * x + 0.5 * w * a * a * g * g + 2.0 * eta * w * a * x / x0 * g;
        },
        {PotentialLabel::Kind::eta, eta});
}

/// d/dx via multiplication by ip in momentum space. The Nyquist bin is
/// dropped so the discrete operator stays anti-Hermitian and real-preserving.
inline WaveFunction spectral_derivative(WaveFunction psi) {
    psi.require_representation(Representation::position, "spectral_derivative");
    const Grid1D g = psi.grid();
    const std::size_t nyq = g.nyquist_index();
    apply_momentum_multiplier(psi.amplitudes(), g, [&](std::size_t j) {
        return j == nyq ? complex{0.0, 0.0} : complex{0.0, g.p(j)};
    });
    return psi;
}

namespace detail {

inline WaveFunction ladder(const WaveFunction& psi, const Superpotential& w, double derivative_sign,
                           const char* what) {
    psi.require_representation(Representation::position, what);
    auto d = spectral_derivative(psi);
    const auto ws = w.sample_W(psi.grid());
    const double r = 1.0 / std::numbers::sqrt2;
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = r * (derivative_sign * d[i] + ws[i] * psi[i]);
    }
    return d;
}

}  // namespace detail

/// B† psi = (-psi' + W psi)/sqrt(2). Not normalized.
inline WaveFunction apply_B_dag(const WaveFunction& psi, const Superpotential& w) {
    return detail::ladder(psi, w, -1.0, "apply_B_dag");
}

/// B psi = (psi' + W psi)/sqrt(2). Not normalized.
inline WaveFunction apply_B(const WaveFunction& psi, const Superpotential& w) {
    return detail::ladder(psi, w, +1.0, "apply_B");
}

struct TridiagonalMatrix {
    std::vector<double> diagonal;
    std::vector<double> off_diagonal;  // size n - 1
};

/// Second-order central differences with Dirichlet walls:
/// H_ii = 1/dx^2 + V_i, H_{i,i+1} = -1/(2 dx^2).
inline TridiagonalMatrix hamiltonian_matrix(const PotentialField& v) {
    const double h2 = v.grid().dx() * v.grid().dx();
    TridiagonalMatrix m;
    m.diagonal.resize(v.grid().size());
    for (std::size_t i = 0; i < m.diagonal.size(); ++i) m.diagonal[i] = 1.0 / h2 + v[i];
    m.off_diagonal.assign(v.grid().size() - 1, -0.5 / h2);
    return m;
}

/// First column of the Fourier-spectral kinetic matrix, T_ab = t[(a - b) mod n].
inline std::vector<double> spectral_kinetic_kernel(const Grid1D& grid) {
    std::vector<complex> c(grid.size());
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = 0.5 * grid.p(j) * grid.p(j);
    susyopt::detail::fft_backward(c);
    std::vector<double> t(c.size());
    const double inv_n = 1.0 / static_cast<double>(c.size());
    for (std::size_t m = 0; m < c.size(); ++m) t[m] = c[m].real() * inv_n;
    return t;
}

/// Dense H = T + V with the periodic Fourier-spectral kinetic operator, the
/// matrix whose exponential the FFT kinetic step applies exactly. Column-major.
inline std::vector<double> spectral_hamiltonian(const PotentialField& v) {
    const std::size_t n = v.grid().size();
    const auto t = spectral_kinetic_kernel(v.grid());
    std::vector<double> h(n * n);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t a = 0; a < n; ++a) h[b * n + a] = t[(a + n - b) % n];
        h[b * n + b] += v[b];
    }
    return h;
}

enum class KineticScheme { spectral, finite_difference };

struct SpectrumResult {
    Grid1D grid;
    std::vector<double> eigenvalues;
    std::vector<WaveFunction> eigenstates;  // normalized
    std::vector<double> residuals;          // ||H psi - E psi|| for each pair
    PotentialLabel potential_label;
};

inline constexpr std::size_t max_spectrum_levels = 16;

/// Lowest k bound states. Spectral scheme by default; the FD tridiagonal
/// scheme is second-order accurate only.
inline SpectrumResult bound_spectrum(const PotentialField& v, std::size_t k,
                                     KineticScheme scheme = KineticScheme::spectral,
                                     double residual_tolerance = 1e-8) {
    const Grid1D& g = v.grid();
    const std::size_t n = g.size();
    if (k < 1 || k > max_spectrum_levels || k >= n) {
        throw ConfigError("bound_spectrum: k must be in [1, " + std::to_string(max_spectrum_levels) +
                          "], got " + std::to_string(k));
    }

    detail::SymmetricEigenpairs pairs;
    std::vector<double> dense;
    TridiagonalMatrix tri;
    if (scheme == KineticScheme::spectral) {
        dense = spectral_hamiltonian(v);
        pairs = detail::symmetric_eigen_lowest(dense, n, k);
    } else {
        tri = hamiltonian_matrix(v);
        pairs = detail::tridiagonal_eigen_lowest(tri.diagonal, tri.off_diagonal, k);
    }
    if (pairs.count != k) {
        throw NumericalError("bound_spectrum: eigensolver returned " + std::to_string(pairs.count) +
                             " of " + std::to_string(k) + " requested pairs for " +
                             v.label().str());
    }

    SpectrumResult out{g, pairs.values, {}, {}, v.label()};
    std::vector<double> hv(n);
    for (std::size_t j = 0; j < k; ++j) {
        const double* u = pairs.vector(j);
        if (scheme == KineticScheme::spectral) {
            std::fill(hv.begin(), hv.end(), 0.0);
            for (std::size_t b = 0; b < n; ++b) {
                const double ub = u[b];
                const double* col = dense.data() + b * n;
                for (std::size_t a = 0; a < n; ++a) hv[a] += col[a] * ub;
            }
        } else {
            for (std::size_t a = 0; a < n; ++a) {
                double s = tri.diagonal[a] * u[a];
                if (a > 0) s += tri.off_diagonal[a - 1] * u[a - 1];
                if (a + 1 < n) s += tri.off_diagonal[a] * u[a + 1];
                hv[a] = s;
            }
        }
        double res = 0.0;
        for (std::size_t a = 0; a < n; ++a) res += std::pow(hv[a] - pairs.values[j] * u[a], 2);
        res = std::sqrt(res);
        if (!(res <= residual_tolerance)) {
            std::ostringstream os;
            os << "bound_spectrum: residual " << res << " exceeds " << residual_tolerance
               << " for level " << j << " (E = " << pairs.values[j] << ") of "
               << v.label().str();
            throw NumericalError(os.str());
        }
        if (j > 0 && !(pairs.values[j] > pairs.values[j - 1])) {
            throw NumericalError("bound_spectrum: eigenvalues not strictly ascending at level " +
                                 std::to_string(j));
        }
        out.residuals.push_back(res);

        // Unit Euclidean vector -> unit L2 norm with weight dx; fix the sign
        // so the largest component is positive.
        std::size_t peak = 0;
        for (std::size_t a = 1; a < n; ++a) {
            if (std::abs(u[a]) > std::abs(u[peak])) peak = a;
        }
        const double s = (u[peak] < 0.0 ? -1.0 : 1.0) / std::sqrt(g.dx());
        std::vector<complex> amps(n);
        for (std::size_t a = 0; a < n; ++a) amps[a] = s * u[a];
        out.eigenstates.emplace_back(g, std::move(amps));
    }
    return out;
}

struct LevelPair {
    std::size_t n;
    double e1;  // E_n of H1
    double e2;  // E_{n+1} of H2
    double gap;
};

struct DegeneracyReport {
    std::vector<LevelPair> pairs;
    double unpaired_ground = 0.0;  // E_0 of H2
    double max_gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Pairs E_n(H1) with E_{n+1}(H2); passes iff every gap is within tol.
inline DegeneracyReport check_degeneracy(const SpectrumResult& s1, const SpectrumResult& s2,
                                         double tol) {
    if (!(s1.grid == s2.grid)) {
        throw ContractError("check_degeneracy: spectra computed on different grids");
    }
    if (s2.eigenvalues.empty()) {
        throw ContractError("check_degeneracy: second spectrum is empty");
    }
    DegeneracyReport r;
    r.tolerance = tol;
    r.unpaired_ground = s2.eigenvalues.front();
    const std::size_t count = std::min(s1.eigenvalues.size(), s2.eigenvalues.size() - 1);
    for (std::size_t n = 0; n < count; ++n) {
        const double gap = std::abs(s1.eigenvalues[n] - s2.eigenvalues[n + 1]);
        r.pairs.push_back({n, s1.eigenvalues[n], s2.eigenvalues[n + 1], gap});
        r.max_gap = std::max(r.max_gap, gap);
    }
    r.pass = std::all_of(r.pairs.begin(), r.pairs.end(),
                         [&](const LevelPair& p) { return p.gap <= tol; });
    return r;
}

}  // namespace susyopt
