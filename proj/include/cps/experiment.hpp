// experiment.hpp — batch front door: experiment configs, the scenario
// registry, and deterministic CSV/JSON reporting.

#pragma once

#include "cps/dimer.hpp"
#include "cps/models.hpp"
#include "cps/propagator.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cps {

using Json = nlohmann::json;

// --------------------------- Config ------------------------------------------

struct RunParams {
    double dt = 1e-3;
    double t_final = 1.0;
    int sample_stride = 1;
    double tolerance = 1e-8; // scenario pass/fail tolerance where applicable
};

struct LatticeConfig {
    std::string sector = "single-excitation";
    Index n_sites = 2;
    std::vector<double> epsilon;
    double hopping_ring_j = 0.0;
    std::optional<Matrix> hopping; // overrides the ring scalar when present
    bool include_vacuum = false;
    Index site_levels = 2;

    LatticeSpec to_spec() const;
};

struct CouplingConfig {
    std::string family; // number | frohlich | hopping-coupled | dimer | pumped
    std::vector<Complex> chi;
    Matrix chi_table; // frohlich: n_modes x n_sites
    std::vector<Complex> chi1, chi2;
    std::vector<Complex> lambda;
    double eps = 0.0; // dimer
    double j = 0.0;   // dimer
    struct BilinearEntry {
        std::size_t q = 0, qp = 0;
        Matrix op;
    };
    std::vector<BilinearEntry> u_ops;
};

struct PumpConfig {
    Complex zeta_plus{0.0, 0.0};
    Complex zeta_minus{0.0, 0.0};
    std::size_t q_index = 1;
    double eps = 0.0;
    double j = 0.0;
};

struct InitialConfig {
    std::optional<Vector> lattice_state;
    bool stationary_bath = false;
    Complex phi1{1.0 / std::numbers::sqrt2, 0.0};
    Complex phi2{1.0 / std::numbers::sqrt2, 0.0};
    Complex overlap_phi{1.0, 0.0};
};

struct ExperimentConfig {
    std::string scenario;
    unsigned seed = 0;
    std::string output_dir; // resolved against the output root
    RunParams run;
    BathSpec bath; // constructed after validation
    std::vector<Mode> bath_modes;
    double temperature = 0.0;
    LatticeConfig lattice;
    CouplingConfig coupling;
    PumpConfig pump;
    InitialConfig initial;
    Json raw; // config echo for the report
};

// Parse and validate; every violation is reported, not just the first.
struct ValidationResult {
    std::vector<std::string> errors;
    std::optional<ExperimentConfig> config;
    bool ok() const { return errors.empty(); }
};

ValidationResult validate_config(const Json& raw);
ValidationResult validate_config_text(const std::string& text);

// --------------------------- Report ------------------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
};

struct RunReport {
    std::string scenario;
    bool pass = false;
    std::vector<CheckResult> checks;
    std::vector<std::string> outputs; // file names inside the run directory
    double wall_ms = 0.0;
    std::optional<AbortDiagnostic> abort;
    Json conservation;
    Json config_echo;

    Json to_json() const;
};

// --------------------------- Registry ----------------------------------------

struct ScenarioInfo {
    std::string name;
    std::string description;
};

std::vector<ScenarioInfo> list_scenarios();

// Run one validated config; writes CSV outputs plus report.json into the run
// directory (created if missing). A report is written even when a scenario
// aborts. The output root is taken from the CPS_OUTPUT_ROOT environment
// variable when set, else the given fallback root.
RunReport run_experiment(const ExperimentConfig& config,
                         const std::filesystem::path& output_root = ".");

// Tidies every time-series CSV of a finished run directory into one
// long-format file plotdata.csv (source, series, time, value).
std::filesystem::path write_plot_data(const std::filesystem::path& run_dir);

// TrajectoryRecord as JSON: a source tag ("ansatz" or "oracle"), the time
// grid, per-branch displacement/shift/phase series and named observables.
Json trajectory_json(const TrajectoryRecord& record, std::size_t n_modes,
                     const std::string& source);

// --------------------------- CSV helpers -------------------------------------

// 17 significant digits, bit-stable formatting.
std::string format_double(double x);

struct CsvWriter {
    explicit CsvWriter(std::vector<std::string> columns);
    void add_row(const std::vector<double>& row);
    void write(const std::filesystem::path& path) const;

    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

} // namespace cps
