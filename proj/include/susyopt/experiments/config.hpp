#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "susyopt/errors.hpp"
#include "susyopt/grid.hpp"
#include "susyopt/optics.hpp"
#include "susyopt/susy.hpp"

namespace susyopt::experiments {

inline constexpr const char* tool_version = "0.1.0";

/// Which acceptance gates apply to a run.
enum class Scenario {
    paper,     // barrier superpotential with the published parameters
    harmonic,  // A = 0 analytic regression
    custom,    // anything else; invariant-based gates only
};

enum class EigenScheme { spectral, finite_difference };

/**
 * Declarative description of every experiment. Lengths are in units of the
 * oscillator length x0 and times in units of the trap period T = 2 pi/omega
 * unless the key name says otherwise. Defaults reproduce the published scenario.
 */
struct ExperimentConfig {
    Scenario scenario = Scenario::paper;

    // superpotential
    double omega = 1.0;
    double barrier_amplitude = std::sqrt(26.0);
    double sigma_over_x0 = 0.5;

    // grid
    std::size_t grid_points = 2048;
    double domain_min_x0 = -15.0;
    double domain_max_x0 = 15.0;

    // initial state (pi w^2)^(-1/4) exp(-(x - xc)^2 / (2 w^2))
    double initial_center_x0 = -5.0;
    double initial_width_x0 = 1.0;

    // Trotter plan
    std::size_t steps_per_period = 60;
    double evolution_periods = 3.0;
    std::size_t trace_stride = 1;
    std::size_t density_x_stride = 1;

    // spectra
    std::size_t spectrum_levels = 9;
    EigenScheme eigen_scheme = EigenScheme::spectral;

    // convergence scan
    double convergence_time_periods = 0.5;
    std::vector<std::size_t> convergence_steps{15, 30, 60, 120, 240};

    // optics
    double wavelength_nm = 532.0;
    double x0_mm = 1.0;
    double focal_length_m = 0.8;
    double reduced_focal_length_m = 0.5;
    double aperture_half_width_x0 = 10.0;
    double modulator_headroom = 0.9;
    optics::ParityModel upper_arm = optics::ParityModel::ideal_flip;
    optics::ParityModel parity_stage = optics::ParityModel::ideal_flip;

    // eta sweep
    double eta_min = -2.0;
    double eta_max = 2.0;
    std::size_t eta_points = 81;

    // random-state battery
    std::size_t random_states = 6;
    std::uint64_t random_seed = 20190417;

    FidelityConvention fidelity = FidelityConvention::modulus;
    std::string output_dir = "results";
    std::size_t threads = 0;  // 0: hardware concurrency

    // Keys that were not present in the parsed source.
    std::vector<std::string> defaulted_keys;

    // Derived quantities.
    double x0() const { return 1.0 / std::sqrt(omega); }
    double period() const { return 2.0 * std::numbers::pi / omega; }
    double dt() const { return period() / static_cast<double>(steps_per_period); }

    Grid1D grid() const { return make_grid(grid_points, domain_min_x0 * x0(), domain_max_x0 * x0()); }

    BarrierParams barrier() const { return {omega, barrier_amplitude, sigma_over_x0 * x0()}; }
    Superpotential superpotential() const { return Superpotential::paper_form(barrier()); }

    optics::PhysicalUnits units() const { return {wavelength_nm * 1e-9, x0_mm * 1e-3, omega}; }
    double aperture_m() const { return aperture_half_width_x0 * x0_mm * 1e-3; }

    WaveFunction initial_state(const Grid1D& g) const {
        const double w = initial_width_x0 * x0();
        const double xc = initial_center_x0 * x0();
        const double c = std::pow(std::numbers::pi * w * w, -0.25);
        return sample(g, [&](double x) { return c * std::exp(-(x - xc) * (x - xc) / (2.0 * w * w)); });
    }
};

namespace detail {

inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), end);
}

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ParseFailure {
    std::string message;
};

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseFailure{"expected a finite number, got '" + std::string(s) + "'"};
    }
    return v;
}

template <class Int>
Int parse_integer(std::string_view s) {
    Int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ParseFailure{"expected a non-negative integer, got '" + std::string(s) + "'"};
    }
    return v;
}

template <class E>
E parse_enum(std::string_view s, const std::vector<std::pair<const char*, E>>& options) {
    std::string allowed;
    for (const auto& [name, value] : options) {
        if (s == name) return value;
        allowed += (allowed.empty() ? "" : "|") + std::string(name);
    }
    throw ParseFailure{"expected one of " + allowed + ", got '" + std::string(s) + "'"};
}

template <class E>
std::string enum_name(E v, const std::vector<std::pair<const char*, E>>& options) {
    for (const auto& [name, value] : options) {
        if (v == value) return name;
    }
    return "?";
}

inline const std::vector<std::pair<const char*, Scenario>> scenario_names{
    {"paper", Scenario::paper}, {"harmonic", Scenario::harmonic}, {"custom", Scenario::custom}};
inline const std::vector<std::pair<const char*, EigenScheme>> scheme_names{
    {"spectral", EigenScheme::spectral}, {"finite_difference", EigenScheme::finite_difference}};
inline const std::vector<std::pair<const char*, optics::ParityModel>> parity_names{
    {"ideal_flip", optics::ParityModel::ideal_flip}, {"relay_4f", optics::ParityModel::relay_4f}};
inline const std::vector<std::pair<const char*, FidelityConvention>> fidelity_names{
    {"modulus", FidelityConvention::modulus},
    {"modulus_squared", FidelityConvention::modulus_squared}};

struct Field {
    const char* key;
    std::function<void(ExperimentConfig&, std::string_view)> parse;
    std::function<std::string(const ExperimentConfig&)> format;
};

template <class T>
Field real_field(const char* key, T ExperimentConfig::*member) {
    return {key, [member](ExperimentConfig& c, std::string_view v) { c.*member = parse_double(v); },
            [member](const ExperimentConfig& c) { return format_double(c.*member); }};
}

template <class T>
Field integer_field(const char* key, T ExperimentConfig::*member) {
    return {key,
            [member](ExperimentConfig& c, std::string_view v) { c.*member = parse_integer<T>(v); },
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); }};
}

template <class E>
Field enum_field(const char* key, E ExperimentConfig::*member,
                 const std::vector<std::pair<const char*, E>>& names) {
    return {key,
            [member, &names](ExperimentConfig& c, std::string_view v) {
                c.*member = parse_enum(v, names);
            },
            [member, &names](const ExperimentConfig& c) { return enum_name(c.*member, names); }};
}

inline const std::vector<Field>& fields() {
    using C = ExperimentConfig;
    static const std::vector<Field> all = {
        enum_field("scenario", &C::scenario, scenario_names),
        real_field("omega", &C::omega),
        real_field("barrier_amplitude", &C::barrier_amplitude),
        real_field("sigma_over_x0", &C::sigma_over_x0),
        integer_field("grid_points", &C::grid_points),
        real_field("domain_min_x0", &C::domain_min_x0),
        real_field("domain_max_x0", &C::domain_max_x0),
        real_field("initial_center_x0", &C::initial_center_x0),
        real_field("initial_width_x0", &C::initial_width_x0),
        integer_field("steps_per_period", &C::steps_per_period),
        real_field("evolution_periods", &C::evolution_periods),
        integer_field("trace_stride", &C::trace_stride),
        integer_field("density_x_stride", &C::density_x_stride),
        integer_field("spectrum_levels", &C::spectrum_levels),
        enum_field("eigen_scheme", &C::eigen_scheme, scheme_names),
        real_field("convergence_time_periods", &C::convergence_time_periods),
        {"convergence_steps",
         [](C& c, std::string_view v) {
             c.convergence_steps.clear();
             std::size_t start = 0;
             while (start <= v.size()) {
                 const auto comma = v.find(',', start);
                 const auto item = trim(v.substr(start, comma == std::string_view::npos
                                                            ? std::string_view::npos
                                                            : comma - start));
                 c.convergence_steps.push_back(parse_integer<std::size_t>(item));
                 if (comma == std::string_view::npos) break;
                 start = comma + 1;
             }
         },
         [](const C& c) {
             std::string s;
             for (std::size_t i = 0; i < c.convergence_steps.size(); ++i) {
                 s += (i ? ", " : "") + std::to_string(c.convergence_steps[i]);
             }
             return s;
         }},
        real_field("wavelength_nm", &C::wavelength_nm),
        real_field("x0_mm", &C::x0_mm),
        real_field("focal_length_m", &C::focal_length_m),
        real_field("reduced_focal_length_m", &C::reduced_focal_length_m),
        real_field("aperture_half_width_x0", &C::aperture_half_width_x0),
        real_field("modulator_headroom", &C::modulator_headroom),
        enum_field("upper_arm", &C::upper_arm, parity_names),
        enum_field("parity_stage", &C::parity_stage, parity_names),
        real_field("eta_min", &C::eta_min),
        real_field("eta_max", &C::eta_max),
        integer_field("eta_points", &C::eta_points),
        integer_field("random_states", &C::random_states),
        integer_field("random_seed", &C::random_seed),
        enum_field("fidelity", &C::fidelity, fidelity_names),
        {"output_dir", [](C& c, std::string_view v) { c.output_dir = std::string(v); },
         [](const C& c) { return c.output_dir; }},
        integer_field("threads", &C::threads),
    };
    return all;
}

}  // namespace detail

/// Every violated invariant, one message per line.
inline std::vector<std::string> validate(const ExperimentConfig& c) {
    std::vector<std::string> errs;
    auto need = [&](bool ok, const std::string& msg) {
        if (!ok) errs.push_back(msg);
    };
    need(c.omega > 0.0, "omega must be > 0");
    need(c.sigma_over_x0 > 0.0, "sigma_over_x0 must be > 0");
    need(c.grid_points >= 2, "grid_points must be >= 2");
    need(c.domain_max_x0 > c.domain_min_x0, "domain_max_x0 must exceed domain_min_x0");
    need(c.domain_min_x0 == -c.domain_max_x0,
         "domain must be symmetric (domain_min_x0 = -domain_max_x0) for parity optics");
    need(c.initial_width_x0 > 0.0, "initial_width_x0 must be > 0");
    need(c.steps_per_period >= 1, "steps_per_period must be >= 1");
    need(c.evolution_periods >= 0.0, "evolution_periods must be >= 0");
    {
        const double steps = c.evolution_periods * static_cast<double>(c.steps_per_period);
        need(std::abs(steps - std::round(steps)) <= 1e-9 * std::max(1.0, steps),
             "evolution_periods * steps_per_period must be an integer (times are multiples of dt)");
        const double conv = c.convergence_time_periods * static_cast<double>(c.steps_per_period);
        need(c.convergence_time_periods > 0.0 &&
                 std::abs(conv - std::round(conv)) <= 1e-9 * std::max(1.0, conv),
             "convergence_time_periods * steps_per_period must be a positive integer");
    }
    need(c.trace_stride >= 1, "trace_stride must be >= 1");
    need(c.density_x_stride >= 1, "density_x_stride must be >= 1");
    need(c.spectrum_levels >= 1 && c.spectrum_levels <= max_spectrum_levels,
         "spectrum_levels must be in [1, 16]");
    need(!c.convergence_steps.empty(), "convergence_steps must not be empty");
    for (std::size_t i = 0; i < c.convergence_steps.size(); ++i) {
        if (c.convergence_steps[i] == 0 ||
            (i > 0 && c.convergence_steps[i] <= c.convergence_steps[i - 1])) {
            errs.push_back("convergence_steps must be positive and strictly ascending");
            break;
        }
    }
    need(c.wavelength_nm > 0.0, "wavelength_nm must be > 0");
    need(c.x0_mm > 0.0, "x0_mm must be > 0");
    need(c.focal_length_m > 0.0, "focal_length_m must be > 0");
    need(c.reduced_focal_length_m > 0.0, "reduced_focal_length_m must be > 0");
    need(c.aperture_half_width_x0 > 0.0, "aperture_half_width_x0 must be > 0");
    need(c.modulator_headroom > 0.0 && c.modulator_headroom <= 1.0,
         "modulator_headroom must lie in (0, 1]");
    need(c.eta_max > c.eta_min, "eta_max must exceed eta_min");
    need(c.eta_points >= 2, "eta_points must be >= 2");
    need(c.random_states >= 1, "random_states must be >= 1");
    need(!c.output_dir.empty(), "output_dir must not be empty");
    if (c.scenario == Scenario::harmonic) {
        need(c.barrier_amplitude == 0.0, "scenario = harmonic requires barrier_amplitude = 0");
    }
    return errs;
}

inline void require_valid(const ExperimentConfig& c) {
    const auto errs = validate(c);
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ConfigError(msg);
    }
}

/**
 * Parses `key = value` lines; '#' starts a comment. Unknown or repeated keys
 * and malformed values are errors reported with their line number; every
 * problem is collected before throwing. Missing keys keep their defaults and
 * are listed in defaulted_keys.
 */
inline ExperimentConfig parse_config_text(std::string_view text, const std::string& source = "<config>") {
    ExperimentConfig cfg;
    std::vector<std::string> errs;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errs.push_back(where + "expected 'key = value'");
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const auto value = detail::trim(line.substr(eq + 1));
        const auto& fs = detail::fields();
        const auto it = std::find_if(fs.begin(), fs.end(), [&](const auto& f) { return key == f.key; });
        if (it == fs.end()) {
            errs.push_back(where + "unknown key '" + key + "'");
            continue;
        }
        if (!seen.insert(key).second) {
            errs.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        try {
            it->parse(cfg, value);
        } catch (const detail::ParseFailure& f) {
            errs.push_back(where + "key '" + key + "': " + f.message);
        }
    }
    for (const auto& f : detail::fields()) {
        if (!seen.contains(f.key)) cfg.defaulted_keys.emplace_back(f.key);
    }
    if (errs.empty()) {
        for (const auto& e : validate(cfg)) errs.push_back(source + ": " + e);
    }
    if (!errs.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

/// Canonical text form: every key, fixed order, shortest round-trip numbers.
inline std::string serialize_config(const ExperimentConfig& c) {
    std::string out;
    for (const auto& f : detail::fields()) out += std::string(f.key) + " = " + f.format(c) + "\n";
    return out;
}

/// FNV-1a over the canonical serialization, leaving out the keys that cannot
/// change results (output_dir, threads).
inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : detail::fields()) {
        if (std::string_view(f.key) == "output_dir" || std::string_view(f.key) == "threads") continue;
        for (unsigned char ch : std::string(f.key) + " = " + f.format(c) + "\n") {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace susyopt::experiments
