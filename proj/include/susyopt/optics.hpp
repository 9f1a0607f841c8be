#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "susyopt/evolution.hpp"
#include "susyopt/grid.hpp"
#include "susyopt/susy.hpp"

namespace susyopt::optics {

/**
 * Link between the dimensionless simulation and the bench.
 *
 * Simulation lengths are in units where hbar = m = 1 and the oscillator length
 * is x0 = 1/sqrt(omega), so one simulation length unit is
 * meters_per_unit() = x0_m * sqrt(omega) meters. Free propagation over z
 * meters is the free-particle evolution for tau = z / (k * meters_per_unit()^2).
 */
struct PhysicalUnits {
    double wavelength_m = 532e-9;
    double x0_m = 1e-3;
    double omega = 1.0;

    double k() const { return 2.0 * std::numbers::pi / wavelength_m; }
    double meters_per_unit() const { return x0_m * std::sqrt(omega); }

    void validate() const {
        if (!(wavelength_m > 0.0) || !(x0_m > 0.0) || !(omega > 0.0)) {
            std::ostringstream os;
            os << "physical units: wavelength, x0 and omega must be positive (wavelength_m="
               << wavelength_m << ", x0_m=" << x0_m << ", omega=" << omega << ")";
            throw ConfigError(os.str());
        }
    }
};

/// Collected non-fatal diagnostics (paraxial validity and similar).
struct Warnings {
    std::vector<std::string> messages;
    void add(std::string m) { messages.push_back(std::move(m)); }
    bool empty() const { return messages.empty(); }
};

/// Samples needed for a lens at focal length f to map the full window onto
/// itself without aliasing: N = L^2 / (lambda f), L the window width in meters.
inline double fourier_sampling_points(const Grid1D& grid, const PhysicalUnits& units, double focal_m) {
    const double width = grid.length() * units.meters_per_unit();
    return width * width / (units.wavelength_m * focal_m);
}

/// z = tau * k * l^2 with l the bench length of one simulation unit.
inline double map_time_to_distance(double tau, const PhysicalUnits& units) {
    if (!(tau >= 0.0)) throw ContractError("map_time_to_distance: negative duration");
    const double l = units.meters_per_unit();
    return tau * units.k() * l * l;
}

inline double map_distance_to_time(double z_m, const PhysicalUnits& units) {
    if (!(z_m >= 0.0)) throw ContractError("map_distance_to_time: negative distance");
    const double l = units.meters_per_unit();
    return z_m / (units.k() * l * l);
}

/// Full width (2 * rms) of |psi|^2 in meters.
inline double spot_size_m(const WaveFunction& field, const PhysicalUnits& units) {
    const Grid1D& g = field.grid();
    double w = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double r = std::norm(field[i]);
        const double x = g.x(i);
        w += r;
        m1 += r * x;
        m2 += r * x * x;
    }
    if (!(w > 0.0)) return 0.0;
    m1 /= w;
    const double var = std::max(m2 / w - m1 * m1, 0.0);
    return 2.0 * std::sqrt(var) * units.meters_per_unit();
}

inline constexpr double paraxial_warning_threshold = 1e-2;

/**
 * Fresnel diffraction over z meters: the free-particle step for tau = z/(k l^2)
 * times the carrier phase e^{ikz}. Warns when (spot/z)^2 exceeds 1e-2.
 */
inline WaveFunction propagate_fresnel(WaveFunction field, double z_m, const PhysicalUnits& units,
                                      Warnings* warnings = nullptr) {
    if (!(z_m >= 0.0)) {
        std::ostringstream os;
        os << "propagate_fresnel: z must be >= 0, got " << z_m;
        throw ContractError(os.str());
    }
    if (z_m == 0.0) return field;
    if (warnings) {
        const double rho = spot_size_m(field, units);
        const double ratio = rho * rho / (z_m * z_m);
        if (ratio > paraxial_warning_threshold) {
            std::ostringstream os;
            os << "paraxial approximation questionable: rho^2/z^2 = " << ratio << " (rho = " << rho
               << " m, z = " << z_m << " m)";
            warnings->add(os.str());
        }
    }
    field = kinetic_step(std::move(field), map_distance_to_time(z_m, units));
    field *= std::polar(1.0, std::fmod(units.k() * z_m, 2.0 * std::numbers::pi));
    return field;
}

/// Thin lens exp(-i k x^2 / 2f) inside |x| <= aperture, opaque outside.
inline WaveFunction apply_lens(WaveFunction field, double focal_m, double aperture_m,
                               const PhysicalUnits& units) {
    field.require_representation(Representation::position, "apply_lens");
    if (!(focal_m > 0.0)) throw ContractError("apply_lens: focal length must be positive");
    const Grid1D& g = field.grid();
    const double l = units.meters_per_unit();
    const double k = units.k();
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double x = g.x(i) * l;
        field[i] = std::abs(x) <= aperture_m
                       ? field[i] * std::polar(1.0, -k * x * x / (2.0 * focal_m))
                       : complex{0.0, 0.0};
    }
    return field;
}

inline WaveFunction apply_parity(WaveFunction field) {
    field.require_representation(Representation::position, "parity");
    const Grid1D& g = field.grid();
    if (!g.symmetric()) throw ContractError("parity: grid must be symmetric about x = 0");
    std::vector<complex> out(field.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = field[g.mirror_index(i)];
    return WaveFunction(g, std::move(out));
}

struct FreeSpace {
    double z_m;
};

struct ThinLens {
    double focal_m;
    double aperture_m = std::numeric_limits<double>::infinity();  // half-width
};

/// Multiplies by exp(-i phi(x)).
struct PhasePlate {
    std::vector<double> phase_rad;
};

/// Passive amplitude mask |a(x)| <= 1; negative target values are realized as
/// |a| plus a pi phase on that pixel.
struct AmplitudeModulator {
    std::vector<double> magnitude;
    std::vector<bool> pi_phase;

    static AmplitudeModulator from_profile(const std::vector<double>& a) {
        AmplitudeModulator m;
        m.magnitude.resize(a.size());
        m.pi_phase.resize(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!(std::abs(a[i]) <= 1.0)) {
                std::ostringstream os;
                os << "amplitude modulator: |a| = " << std::abs(a[i]) << " > 1 at pixel " << i
                   << " (a passive modulator cannot amplify)";
                throw ConfigError(os.str());
            }
            m.magnitude[i] = std::abs(a[i]);
            m.pi_phase[i] = a[i] < 0.0;
        }
        return m;
    }

    double signed_value(std::size_t i) const { return pi_phase[i] ? -magnitude[i] : magnitude[i]; }
};

/// Ideal x -> -x inversion (an imaging lens pair without diffraction).
struct ParityFlip {};

using OpticalElement = std::variant<FreeSpace, ThinLens, PhasePlate, AmplitudeModulator, ParityFlip>;

inline void validate_element(const OpticalElement& e, std::size_t n) {
    std::visit(
        [n](const auto& el) {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, FreeSpace>) {
                if (!(el.z_m >= 0.0)) throw ConfigError("free space: z must be >= 0");
            } else if constexpr (std::is_same_v<T, ThinLens>) {
                if (!(el.focal_m > 0.0)) throw ConfigError("thin lens: focal length must be > 0");
                if (!(el.aperture_m > 0.0)) throw ConfigError("thin lens: aperture must be > 0");
            } else if constexpr (std::is_same_v<T, PhasePlate>) {
                if (el.phase_rad.size() != n) throw ConfigError("phase plate: profile size mismatch");
            } else if constexpr (std::is_same_v<T, AmplitudeModulator>) {
                if (el.magnitude.size() != n || el.pi_phase.size() != n) {
                    throw ConfigError("amplitude modulator: profile size mismatch");
                }
                for (double m : el.magnitude) {
                    if (!(m >= 0.0 && m <= 1.0)) {
                        throw ConfigError("amplitude modulator: magnitude outside [0, 1]");
                    }
                }
            }
        },
        e);
}

inline WaveFunction apply_element(WaveFunction field, const OpticalElement& element,
                                  const PhysicalUnits& units, Warnings* warnings = nullptr) {
    return std::visit(
        [&](const auto& el) -> WaveFunction {
            using T = std::decay_t<decltype(el)>;
            if constexpr (std::is_same_v<T, FreeSpace>) {
                return propagate_fresnel(std::move(field), el.z_m, units, warnings);
            } else if constexpr (std::is_same_v<T, ThinLens>) {
                return apply_lens(std::move(field), el.focal_m, el.aperture_m, units);
            } else if constexpr (std::is_same_v<T, PhasePlate>) {
                field.require_representation(Representation::position, "phase plate");
                for (std::size_t i = 0; i < field.size(); ++i) {
                    field[i] *= std::polar(1.0, -el.phase_rad[i]);
                }
                return field;
            } else if constexpr (std::is_same_v<T, AmplitudeModulator>) {
                field.require_representation(Representation::position, "amplitude modulator");
                for (std::size_t i = 0; i < field.size(); ++i) field[i] *= el.signed_value(i);
                return field;
            } else {
                return apply_parity(std::move(field));
            }
        },
        element);
}

inline const char* element_name(const OpticalElement& e) {
    constexpr const char* names[] = {"free_space", "thin_lens", "phase_plate",
                                     "amplitude_modulator", "parity_flip"};
    return names[e.index()];
}

/// Elements in beam order. Lenses, plates and modulators are thin.
struct OpticalTrain {
    std::vector<OpticalElement> elements;
    PhysicalUnits units;

    double total_length_m() const {
        double z = 0.0;
        for (const auto& e : elements) {
            if (const auto* f = std::get_if<FreeSpace>(&e)) z += f->z_m;
        }
        return z;
    }

    WaveFunction simulate(WaveFunction field, Warnings* warnings = nullptr) const {
        for (const auto& e : elements) field = apply_element(std::move(field), e, units, warnings);
        return field;
    }
};

/**
 * Optical realization of a second-order split-step plan: gaps of z(dt/2),
 * z(dt), ..., z(dt), z(dt/2) around n phase plates phi = V dt.
 */
inline OpticalTrain compile_trotter_train(const TrotterPlan& plan, const PotentialField& v,
                                          const PhysicalUnits& units) {
    if (plan.order != TrotterOrder::second) {
        throw ConfigError("compile_trotter_train: only second-order plans have an optical layout");
    }
    units.validate();
    OpticalTrain train{{}, units};
    if (plan.n_steps == 0) return train;

    std::vector<double> phase(v.values().size());
    for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = v[i] * plan.dt;
    const double half = map_time_to_distance(0.5 * plan.dt, units);
    const double full = map_time_to_distance(plan.dt, units);

    train.elements.reserve(2 * plan.n_steps + 1);
    train.elements.emplace_back(FreeSpace{half});
    for (std::size_t s = 0; s < plan.n_steps; ++s) {
        train.elements.emplace_back(PhasePlate{phase});
        train.elements.emplace_back(FreeSpace{s + 1 == plan.n_steps ? half : full});
    }
    return train;
}

/**
 * Bench sheet for a train: one JSON record per element with its parameters in
 * SI units and the cumulative position of its entrance plane. Phase plate and
 * modulator profiles are stored once in a deduplicated table and referenced by id.
 */
inline nlohmann::json layout_json(const OpticalTrain& train, const Grid1D& grid) {
    using nlohmann::json;
    const double l = train.units.meters_per_unit();
    json out;
    out["wavelength_m"] = train.units.wavelength_m;
    out["x0_m"] = train.units.x0_m;
    out["total_length_m"] = train.total_length_m();
    out["pixels"] = {{"count", grid.size()}, {"x_first_m", grid.x_min() * l}, {"pitch_m", grid.dx() * l}};

    std::map<std::vector<double>, std::size_t> profile_ids;
    json profiles = json::array();
    auto profile_id = [&](const std::vector<double>& p) {
        auto [it, inserted] = profile_ids.emplace(p, profiles.size());
        if (inserted) profiles.push_back(p);
        return it->second;
    };

    json elements = json::array();
    double z = 0.0;
    for (std::size_t i = 0; i < train.elements.size(); ++i) {
        const auto& e = train.elements[i];
        json rec = {{"index", i}, {"type", element_name(e)}, {"position_m", z}};
        std::visit(
            [&](const auto& el) {
                using T = std::decay_t<decltype(el)>;
                if constexpr (std::is_same_v<T, FreeSpace>) {
                    rec["length_m"] = el.z_m;
                    z += el.z_m;
                } else if constexpr (std::is_same_v<T, ThinLens>) {
                    rec["focal_length_m"] = el.focal_m;
                    if (std::isfinite(el.aperture_m)) rec["aperture_half_width_m"] = el.aperture_m;
                } else if constexpr (std::is_same_v<T, PhasePlate>) {
                    rec["phase_profile_id"] = profile_id(el.phase_rad);
                } else if constexpr (std::is_same_v<T, AmplitudeModulator>) {
                    std::vector<double> signed_profile(el.magnitude.size());
                    for (std::size_t j = 0; j < signed_profile.size(); ++j) {
                        signed_profile[j] = el.signed_value(j);
                    }
                    rec["amplitude_profile_id"] = profile_id(signed_profile);
                }
            },
            e);
        elements.push_back(std::move(rec));
    }
    out["elements"] = std::move(elements);
    out["profiles"] = std::move(profiles);
    return out;
}

inline void write_layout(std::ostream& os, const OpticalTrain& train, const Grid1D& grid) {
    os << layout_json(train, grid).dump(1) << '\n';
}

enum class ParityModel {
    ideal_flip,  // ParityFlip element, no diffraction
    relay_4f,    // f, lens, 2f, lens, f with real Fresnel propagation
};

/**
 * Mach-Zehnder realization of B†. Lower arm: 4f system with the derivative
 * modulator alpha*k*x/f in the Fourier plane, then a parity stage. Upper arm:
 * parity, modulator alpha*W(-x), parity. The two outputs are combined with a
 * relative phase fixed by calibration and rescaled by 1/(sqrt(2) alpha).
 */
struct InterferometerSpec {
    double focal_m = 0.8;
    double aperture_m = 10e-3;    // half-width of every clear aperture
    double alpha = 0.0;           // simulation units (dimensionless); bench alpha' = alpha * x0_m
    double calibration_phase = 0.0;
    double output_phase = 0.0;
    Superpotential w = Superpotential::paper_form({});
    ParityModel upper_arm = ParityModel::ideal_flip;
    ParityModel parity_stage = ParityModel::ideal_flip;

    double alpha_m(const PhysicalUnits& units) const { return alpha * units.meters_per_unit(); }

    /// Paraxial figure of merit f^2 / rho^2 with rho the aperture half-width.
    double paraxial_figure() const { return focal_m * focal_m / (aperture_m * aperture_m); }
};

namespace detail {

inline double max_abs_w_in_aperture(const InterferometerSpec& spec, const Grid1D& grid,
                                    const PhysicalUnits& units) {
    const double l = units.meters_per_unit();
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid.x(i) * l) <= spec.aperture_m) m = std::max(m, std::abs(spec.w.W(grid.x(i))));
    }
    return m;
}

inline void append_relay(std::vector<OpticalElement>& els, const InterferometerSpec& spec) {
    els.emplace_back(FreeSpace{spec.focal_m});
    els.emplace_back(ThinLens{spec.focal_m, spec.aperture_m});
    els.emplace_back(FreeSpace{2.0 * spec.focal_m});
    els.emplace_back(ThinLens{spec.focal_m, spec.aperture_m});
    els.emplace_back(FreeSpace{spec.focal_m});
}

inline void append_parity(std::vector<OpticalElement>& els, const InterferometerSpec& spec,
                          ParityModel model) {
    if (model == ParityModel::ideal_flip) {
        els.emplace_back(ParityFlip{});
    } else {
        append_relay(els, spec);
    }
}

}  // namespace detail

/// Largest alpha allowed by both modulators' passivity bounds.
inline double max_passive_alpha(const InterferometerSpec& spec, const Grid1D& grid,
                                const PhysicalUnits& units) {
    const double derivative_bound =
        spec.focal_m / (units.k() * units.meters_per_unit() * spec.aperture_m);
    const double wmax = detail::max_abs_w_in_aperture(spec, grid, units);
    return wmax > 0.0 ? std::min(derivative_bound, 1.0 / wmax) : derivative_bound;
}

inline void check_passivity(const InterferometerSpec& spec, const Grid1D& grid,
                            const PhysicalUnits& units) {
    if (!(spec.focal_m > 0.0) || !(spec.aperture_m > 0.0)) {
        throw ConfigError("interferometer: focal length and aperture must be positive");
    }
    if (!(spec.alpha > 0.0)) throw ConfigError("interferometer: alpha must be positive");
    const double bound = max_passive_alpha(spec, grid, units);
    if (spec.alpha > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "interferometer: alpha = " << spec.alpha << " (alpha' = " << spec.alpha_m(units)
           << " m) violates modulator passivity; reduce alpha by a factor of at least "
           << spec.alpha / bound << " to <= " << bound << " (alpha' <= "
           << bound * units.meters_per_unit() << " m)";
        throw ConfigError(os.str());
    }
}

/// Lower arm: f, lens, f, derivative modulator, f, lens, f, then the parity stage.
inline OpticalTrain lower_arm(const InterferometerSpec& spec, const Grid1D& grid,
                              const PhysicalUnits& units) {
    const double l = units.meters_per_unit();
    std::vector<double> a(grid.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = grid.x(i) * l;
        a[i] = std::abs(x) <= spec.aperture_m ? spec.alpha * units.k() * x * l / spec.focal_m : 0.0;
    }
    OpticalTrain t{{}, units};
    t.elements.emplace_back(FreeSpace{spec.focal_m});
    t.elements.emplace_back(ThinLens{spec.focal_m, spec.aperture_m});
    t.elements.emplace_back(FreeSpace{spec.focal_m});
    t.elements.emplace_back(AmplitudeModulator::from_profile(a));
    t.elements.emplace_back(FreeSpace{spec.focal_m});
    t.elements.emplace_back(ThinLens{spec.focal_m, spec.aperture_m});
    t.elements.emplace_back(FreeSpace{spec.focal_m});
    detail::append_parity(t.elements, spec, spec.parity_stage);
    return t;
}

/// Upper arm: parity, modulator alpha*W(-x), parity.
inline OpticalTrain upper_arm(const InterferometerSpec& spec, const Grid1D& grid,
                              const PhysicalUnits& units) {
    const double l = units.meters_per_unit();
    std::vector<double> a(grid.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = grid.x(i);
        a[i] = std::abs(x * l) <= spec.aperture_m ? spec.alpha * spec.w.W(-x) : 0.0;
    }
    OpticalTrain t{{}, units};
    detail::append_parity(t.elements, spec, spec.upper_arm);
    t.elements.emplace_back(AmplitudeModulator::from_profile(a));
    detail::append_parity(t.elements, spec, spec.upper_arm);
    return t;
}

struct ArmOutputs {
    WaveFunction upper;
    WaveFunction lower;
};

inline ArmOutputs simulate_arms(const WaveFunction& psi, const InterferometerSpec& spec,
                                const PhysicalUnits& units, Warnings* warnings = nullptr) {
    psi.require_representation(Representation::position, "interferometric_B_dag");
    check_passivity(spec, psi.grid(), units);
    return {upper_arm(spec, psi.grid(), units).simulate(psi, warnings),
            lower_arm(spec, psi.grid(), units).simulate(psi, warnings)};
}

/// Interferometer output, rescaled to approximate apply_B_dag(psi, spec.w).
inline WaveFunction interferometric_B_dag(const WaveFunction& psi, const InterferometerSpec& spec,
                                          const PhysicalUnits& units, Warnings* warnings = nullptr) {
    auto arms = simulate_arms(psi, spec, units, warnings);
    arms.lower *= std::polar(1.0, spec.calibration_phase);
    arms.upper += arms.lower;
    arms.upper *= std::polar(1.0 / (std::numbers::sqrt2 * spec.alpha), spec.output_phase);
    return std::move(arms.upper);
}

/**
 * Fixes the relative arm phase and the output phase by maximizing the overlap
 * with apply_B_dag on a centred Gaussian of width x0. For targets T, arm
 * outputs U and L, |<T, U + e^{i theta} L>| peaks at theta = arg<T,U> - arg<T,L>.
 */
inline void calibrate(InterferometerSpec& spec, const Grid1D& grid, const PhysicalUnits& units) {
    const double x0 = 1.0 / std::sqrt(units.omega);
    const auto ref = sample(grid, [&](double x) { return std::exp(-0.5 * x * x / (x0 * x0)); });
    const auto target = apply_B_dag(ref, spec.w);
    const auto arms = simulate_arms(ref, spec, units);
    const complex tu = inner(target, arms.upper);
    const complex tl = inner(target, arms.lower);
    spec.calibration_phase = std::arg(tu) - std::arg(tl);
    spec.output_phase = -std::arg(tu + std::polar(1.0, spec.calibration_phase) * tl);
}

/// Spec with alpha = headroom * max_passive_alpha, calibrated on `grid`.
inline InterferometerSpec make_interferometer(const Superpotential& w, const Grid1D& grid,
                                              const PhysicalUnits& units, double focal_m,
                                              double aperture_m, double headroom = 0.9,
                                              ParityModel upper = ParityModel::ideal_flip,
                                              ParityModel parity_stage = ParityModel::ideal_flip) {
    units.validate();
    if (!(headroom > 0.0 && headroom <= 1.0)) {
        throw ConfigError("interferometer: modulator headroom must lie in (0, 1]");
    }
    InterferometerSpec spec;
    spec.focal_m = focal_m;
    spec.aperture_m = aperture_m;
    spec.w = w;
    spec.upper_arm = upper;
    spec.parity_stage = parity_stage;
    if (!(focal_m > 0.0) || !(aperture_m > 0.0)) {
        throw ConfigError("interferometer: focal length and aperture must be positive");
    }
    spec.alpha = headroom * max_passive_alpha(spec, grid, units);
    calibrate(spec, grid, units);
    return spec;
}

}  // namespace susyopt::optics
