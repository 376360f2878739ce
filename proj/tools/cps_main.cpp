// cps_main.cpp — batch CLI: run experiment configs, validate them, list the
// scenario registry, and emit plot-ready data from finished runs.
//
// Exit codes: 0 pass, 1 acceptance-check failure, 2 config error, 3 internal
// abort.

#include "cps/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int load_config(const std::string& path, cps::ValidationResult& result) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open config file " << path << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    result = cps::validate_config_text(buf.str());
    if (!result.ok()) {
        std::cerr << "config validation failed (" << result.errors.size() << " error"
                  << (result.errors.size() == 1 ? "" : "s") << "):\n";
        for (const auto& e : result.errors) std::cerr << "  - " << e << "\n";
        return 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cps — coherent-product state propagation for lattice-phonon systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_root = ".";
    auto* run_cmd = app.add_subcommand("run", "run an experiment config and write reports");
    run_cmd->add_option("config", config_path, "JSON experiment config")->required();
    run_cmd->add_option("-o,--output-root", output_root,
                        "output root directory (CPS_OUTPUT_ROOT overrides)");

    std::string validate_path;
    auto* val_cmd = app.add_subcommand("validate", "validate a config without running it");
    val_cmd->add_option("config", validate_path, "JSON experiment config")->required();

    auto* list_cmd = app.add_subcommand("list-scenarios", "list the scenario registry");

    std::string run_dir;
    auto* plot_cmd = app.add_subcommand("plot-data", "emit tidy plot data for a finished run");
    plot_cmd->add_option("run_dir", run_dir, "run directory with CSV outputs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            cps::ValidationResult vr;
            if (int rc = load_config(config_path, vr); rc != 0) return rc;
            const cps::RunReport rep = cps::run_experiment(*vr.config, output_root);
            for (const auto& c : rep.checks) {
                std::cout << (c.pass ? "PASS" : "FAIL") << " " << c.name << " (value "
                          << c.value << ", tolerance " << c.tolerance << ")\n";
            }
            if (rep.abort) {
                std::cerr << "aborted: " << rep.abort->message << "\n";
                return 3;
            }
            std::cout << (rep.pass ? "PASS" : "FAIL") << " scenario " << rep.scenario << " ("
                      << rep.wall_ms << " ms)\n";
            return rep.pass ? 0 : 1;
        }
        if (*val_cmd) {
            cps::ValidationResult vr;
            if (int rc = load_config(validate_path, vr); rc != 0) return rc;
            std::cout << "config is valid (scenario " << vr.config->scenario << ")\n";
            return 0;
        }
        if (*list_cmd) {
            for (const auto& s : cps::list_scenarios()) {
                std::cout << s.name << "  —  " << s.description << "\n";
            }
            return 0;
        }
        if (*plot_cmd) {
            const auto path = cps::write_plot_data(run_dir);
            std::cout << path.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
