// test_experiment.cpp — config validation, scenario plumbing, deterministic
// outputs

#include "cps/experiment.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <random>
#include <sstream>

using namespace cps;
namespace fs = std::filesystem;

namespace {

Json minimal_dfs_config() {
    return Json::parse(R"({
      "scenario": "dfs-scan",
      "run": { "dt": 1e-3, "t_final": 1.0, "sample_stride": 1, "tolerance": 1e-10 },
      "expect": { "dfs_count": 3 },
      "model": {
        "bath": { "temperature": 0.0, "modes": [ { "omega": 1.0, "n_cut": 2 } ] },
        "lattice": { "sector": "single-excitation", "n_sites": 3,
                     "epsilon": [0.1, 0.5, 0.9], "hopping_ring_j": 0.0 },
        "coupling": { "family": "frohlich",
                      "chi_table": [[[0.3, 0.0], [0.1, 0.2], [-0.2, 0.1]]] }
      }
    })");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cps-test-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("config validation accepts the minimal scan config") {
    auto vr = validate_config(minimal_dfs_config());
    CHECK(vr.ok());
    REQUIRE(vr.config.has_value());
    CHECK(vr.config->scenario == "dfs-scan");
    CHECK(vr.config->bath.n_modes() == 1);
}

TEST_CASE("config validation aggregates every violation") {
    Json bad = minimal_dfs_config();
    bad["model"]["bath"]["temperature"] = -1.0;
    bad["model"]["bath"]["modes"][0]["omega"] = 0.0;
    bad["run"]["dt"] = -2.0;
    auto vr = validate_config(bad);
    CHECK_FALSE(vr.ok());
    CHECK(vr.errors.size() >= 3);
    bool has_omega = false, has_temp = false, has_dt = false;
    for (const auto& e : vr.errors) {
        has_omega = has_omega || e.find("frequency must be positive") != std::string::npos;
        has_temp = has_temp || e.find("temperature") != std::string::npos;
        has_dt = has_dt || e.find("dt") != std::string::npos;
    }
    CHECK(has_omega);
    CHECK(has_temp);
    CHECK(has_dt);
}

TEST_CASE("bilinear couplings are rejected at finite temperature") {
    Json cfg = minimal_dfs_config();
    cfg["model"]["bath"]["temperature"] = 0.5;
    cfg["model"]["bath"]["modes"][0]["n_cut"] = 40;
    cfg["model"]["coupling"]["u_ops"] =
        Json::array({Json{{"q", 0}, {"qp", 0}, {"matrix", Json::parse("[[[1,0],[0,0]],[[0,0],[1,0]]]")}}});
    auto vr = validate_config(cfg);
    CHECK_FALSE(vr.ok());
    bool mentions_linearity = false;
    for (const auto& e : vr.errors) {
        mentions_linearity =
            mentions_linearity || e.find("zero temperature") != std::string::npos;
    }
    CHECK(mentions_linearity);
}

TEST_CASE("unknown scenario and malformed JSON are reported") {
    Json cfg = minimal_dfs_config();
    cfg["scenario"] = "does-not-exist";
    CHECK_FALSE(validate_config(cfg).ok());
    CHECK_FALSE(validate_config_text("{ not json").ok());
}

TEST_CASE("dfs-scan run writes reports and passes its expectation") {
    TempDir tmp;
    auto vr = validate_config(minimal_dfs_config());
    REQUIRE(vr.ok());
    RunReport rep = run_experiment(*vr.config, tmp.path);
    CHECK(rep.pass);
    CHECK_FALSE(rep.abort.has_value());
    const fs::path dir = tmp.path / "dfs-scan-run";
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "subspaces.csv"));
    CHECK(fs::exists(dir / "dfs_report.json"));

    const Json report = Json::parse(slurp(dir / "report.json"));
    CHECK(report["pass"].get<bool>());
    CHECK(report["scenario"] == "dfs-scan");

    const Json dfs = Json::parse(slurp(dir / "dfs_report.json"));
    CHECK(dfs["dfs_count"].get<int>() == 3);
}

TEST_CASE("scenario outputs are deterministic") {
    auto vr = validate_config(minimal_dfs_config());
    REQUIRE(vr.ok());
    TempDir a, b;
    run_experiment(*vr.config, a.path);
    run_experiment(*vr.config, b.path);
    CHECK(slurp(a.path / "dfs-scan-run" / "subspaces.csv") ==
          slurp(b.path / "dfs-scan-run" / "subspaces.csv"));
}

TEST_CASE("aborted runs still write a report") {
    Json cfg = minimal_dfs_config();
    // d2-vs-oracle with an initial state outside the coupling eigenspaces
    cfg["scenario"] = "d2-vs-oracle";
    cfg["output_dir"] = "abort-run";
    cfg["run"]["t_final"] = 0.05;
    cfg["model"]["bath"]["modes"][0]["n_cut"] = 8;
    cfg["model"]["coupling"] = Json::parse(R"({"family": "frohlich",
        "chi_table": [[[0.3, 0.0], [0.1, 0.2], [-0.2, 0.1]]]})");
    cfg["model"]["initial"] =
        Json::parse(R"({"lattice_state": [[1, 0], [1, 0], [1, 0]]})");
    auto vr = validate_config(cfg);
    REQUIRE(vr.ok());
    TempDir tmp;
    RunReport rep = run_experiment(*vr.config, tmp.path);
    CHECK_FALSE(rep.pass);
    REQUIRE(rep.abort.has_value());
    CHECK(fs::exists(tmp.path / "abort-run" / "report.json"));
    const Json report = Json::parse(slurp(tmp.path / "abort-run" / "report.json"));
    CHECK_FALSE(report["abort"].is_null());
}

TEST_CASE("plot data tidies time-series CSVs") {
    TempDir tmp;
    const fs::path dir = tmp.path / "run";
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "series.csv");
        f << "time,alpha,beta\n0,1.5,2.5\n0.5,3.5,4.5\n";
    }
    const fs::path out = write_plot_data(dir);
    const std::string text = slurp(out);
    CHECK(text.find("source,series,time,value") == 0);
    CHECK(text.find("series.csv,alpha,0,1.5") != std::string::npos);
    CHECK(text.find("series.csv,beta,0.5,4.5") != std::string::npos);
}

TEST_CASE("float formatting round trips at 17 significant digits") {
    for (double x : {1.0 / 3.0, 2.718281828459045e-7, -123456.789012345678, 0.0}) {
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("scenario registry lists the five scenarios") {
    const auto scenarios = list_scenarios();
    REQUIRE(scenarios.size() == 5);
    std::vector<std::string> names;
    for (const auto& s : scenarios) names.push_back(s.name);
    for (const std::string expected :
         {"dfs-scan", "d2-vs-oracle", "dimer-dephasing", "stationary-bath", "pumped-frohlich"}) {
        CHECK(std::find(names.begin(), names.end(), expected) != names.end());
    }
}

TEST_CASE("reports echo the input config verbatim") {
    const Json cfg = minimal_dfs_config();
    auto vr = validate_config(cfg);
    REQUIRE(vr.ok());
    TempDir tmp;
    RunReport rep = run_experiment(*vr.config, tmp.path);
    CHECK(rep.config_echo == cfg);
    const Json report = Json::parse(slurp(tmp.path / "dfs-scan-run" / "report.json"));
    CHECK(report["config"] == cfg);
}

TEST_CASE("dimer scenario with lambda = 0 reports a vanishing decay exponent") {
    Json cfg = Json::parse(R"({
      "scenario": "dimer-dephasing",
      "output_dir": "lambda-zero",
      "run": { "dt": 1e-3, "t_final": 0.5, "sample_stride": 50, "tolerance": 1e-6 },
      "model": {
        "bath": { "temperature": 0.0, "modes": [ { "omega": 1.0, "n_cut": 8 } ] },
        "coupling": { "family": "dimer", "eps": 1.0, "j": 0.3,
                      "chi": [[0.1, 0.0]], "lambda": [[0.0, 0.0]] }
      }
    })");
    auto vr = validate_config(cfg);
    REQUIRE(vr.ok());
    TempDir tmp;
    RunReport rep = run_experiment(*vr.config, tmp.path);
    CHECK(rep.pass);

    // gamma_closed column is identically zero
    std::ifstream in(tmp.path / "lambda-zero" / "gamma.csv");
    std::string header, line;
    std::getline(in, header);
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ','); // time
        std::getline(ls, cell, ','); // gamma_closed
        CHECK(std::stod(cell) == 0.0);
    }
}

TEST_CASE("trajectory JSON carries the source tag and branch series") {
    Json cfg = Json::parse(R"({
      "scenario": "d2-vs-oracle",
      "output_dir": "traj-json",
      "run": { "dt": 1e-3, "t_final": 0.2, "sample_stride": 20, "tolerance": 1e-8 },
      "model": {
        "bath": { "temperature": 0.0, "modes": [ { "omega": 1.0, "n_cut": 10 } ] },
        "lattice": { "sector": "single-excitation", "n_sites": 2,
                     "epsilon": [0.5, 0.5], "hopping_ring_j": 0.25 },
        "coupling": { "family": "number", "chi": [[0.3, 0.0]] }
      }
    })");
    auto vr = validate_config(cfg);
    REQUIRE(vr.ok());
    TempDir tmp;
    RunReport rep = run_experiment(*vr.config, tmp.path);
    CHECK(rep.pass);

    const Json ansatz = Json::parse(slurp(tmp.path / "traj-json" / "trajectory.json"));
    CHECK(ansatz["source"] == "ansatz");
    REQUIRE(ansatz["branches"].size() == 1);
    CHECK(ansatz["branches"][0]["beta0_re"].size() == ansatz["times"].size());

    const Json oracle = Json::parse(slurp(tmp.path / "traj-json" / "oracle_trajectory.json"));
    CHECK(oracle["source"] == "oracle");
    CHECK(oracle["observables"].contains("pop_0"));
}
