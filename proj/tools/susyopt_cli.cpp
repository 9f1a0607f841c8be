// Command-line front end for the scenario runners.
//
// Exit status: 0 all gates pass, 1 a gate failed (or a warning under --strict),
// 2 configuration error, 3 numerical failure.

#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "susyopt/susyopt.hpp"

namespace ex = susyopt::experiments;

namespace {

enum Exit { ok = 0, gate_failed = 1, config_error = 2, numerical_failure = 3 };

using Runner = std::function<ex::ScenarioResult(const ex::ExperimentConfig&)>;

struct Command {
    const char* name;
    const char* help;
    std::vector<Runner> runners;
};

std::string range_text(const ex::Range& r) {
    if (r.informational()) return "report";
    return "[" + ex::detail::csv_number(r.lower) + ", " + ex::detail::csv_number(r.upper) + "]";
}

void print_result(const ex::ScenarioResult& r) {
    std::printf("== %s (config %s, v%s)\n", r.scenario.c_str(), r.provenance.config_hash.c_str(),
                r.provenance.tool_version.c_str());
    for (const auto& m : r.metrics) {
        std::printf("  %-6s %-44s %-14.8g %s\n", m.pass ? "PASS" : "FAIL", m.name.c_str(), m.value,
                    range_text(m.gate).c_str());
    }
    for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Supersymmetric quantum dynamics and its optical realization: experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::size_t grid_points = 0;
    bool strict = false;

    const std::vector<Command> commands = {
        {"spectrum", "partner potentials and their paired spectra", {ex::run_spectrum}},
        {"susy-check", "both interferometer paths over the evolution window", {ex::run_susy_check}},
        {"eta-sweep", "fidelity over the eta family of potentials", {ex::run_eta_sweep}},
        {"bdag-check", "interferometric B† against the algebraic operator", {ex::run_bdag_validation}},
        {"trotter-convergence", "split-step error against the exact propagator",
         {ex::run_trotter_convergence}},
        {"all", "every scenario in turn",
         {ex::run_spectrum, ex::run_susy_check, ex::run_eta_sweep, ex::run_bdag_validation,
          ex::run_trotter_convergence}},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "key-value config file (defaults reproduce the barrier scenario)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--grid-points", grid_points, "grid size (overrides grid_points)");
        sub->add_flag("--strict", strict, "treat warnings as gate failures");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Exit::ok : Exit::config_error;
    }

    std::size_t chosen = 0;
    while (!subs[chosen]->parsed()) ++chosen;

    try {
        ex::ExperimentConfig cfg = config_path.empty() ? ex::parse_config_text("", "<defaults>")
                                                       : ex::parse_config(config_path);
        auto override_key = [&](const char* key) {
            std::erase(cfg.defaulted_keys, std::string(key));
        };
        if (grid_points != 0) {
            cfg.grid_points = grid_points;
            override_key("grid_points");
        }
        if (!out_dir.empty()) {
            cfg.output_dir = out_dir;
            override_key("output_dir");
        }
        ex::require_valid(cfg);

        bool pass = true;
        for (const auto& run : commands[chosen].runners) {
            const auto result = run(cfg);
            print_result(result);
            for (const auto& path : ex::emit_csv(result, cfg.output_dir)) {
                std::printf("  wrote %s\n", path.string().c_str());
            }
            pass = pass && result.gates_pass() && !(strict && !result.warnings.empty());
        }
        std::printf("%s\n", pass ? "all gates pass" : "gate failure");
        return pass ? Exit::ok : Exit::gate_failed;
    } catch (const susyopt::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return Exit::config_error;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return Exit::numerical_failure;
    }
}
