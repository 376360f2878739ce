// module.cpp — python bindings for the coherent-product propagation engine

#include "cps/dfs.hpp"
#include "cps/dimer.hpp"
#include "cps/experiment.hpp"
#include "cps/models.hpp"
#include "cps/oracle.hpp"
#include "cps/propagator.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace cps;

PYBIND11_MODULE(_cps, m) {
    m.doc() = "Self-consistent coherent-product state propagation for "
              "lattice-phonon systems, with an exact truncated-Fock oracle.";

    // ------------------------- operator core -------------------------------
    py::class_<ProductSpace>(m, "ProductSpace")
        .def(py::init([](const std::vector<std::pair<std::string, Index>>& factors) {
            std::vector<ProductSpace::Factor> f;
            for (const auto& [label, dim] : factors) f.push_back({label, dim});
            return ProductSpace(std::move(f));
        }))
        .def_property_readonly("total_dim", &ProductSpace::total_dim)
        .def("dim", &ProductSpace::dim);

    m.def("kron", py::overload_cast<const Matrix&, const Matrix&>(&kron));
    m.def("embed", &embed);
    m.def("commutator", &commutator);
    m.def("matrix_exponential", &matrix_exponential);
    m.def("hermitian_propagator", &hermitian_propagator);
    m.def("partial_trace", &partial_trace);
    m.def("trace_distance", &trace_distance);
    m.def("boson_ladder", [](Index n_cut) { return boson_ladder(n_cut); });

    // ------------------------- bath ----------------------------------------
    py::class_<Mode>(m, "Mode")
        .def(py::init<double, Index>(), py::arg("omega"), py::arg("n_cut"))
        .def_readwrite("omega", &Mode::omega)
        .def_readwrite("n_cut", &Mode::n_cut);

    py::class_<BathSpec>(m, "BathSpec")
        .def(py::init<std::vector<Mode>, double>(), py::arg("modes"), py::arg("temperature"))
        .def_property_readonly("n_modes", &BathSpec::n_modes)
        .def_readonly("temperature", &BathSpec::temperature)
        .def("theta", &BathSpec::theta)
        .def("coth_half", &BathSpec::coth_half)
        .def("mean_occupation", &BathSpec::mean_occupation)
        .def("thermal_tail", &BathSpec::thermal_tail);

    py::class_<Displacement>(m, "Displacement")
        .def(py::init<std::vector<Complex>>())
        .def_static("zero", &Displacement::zero)
        .def_readwrite("beta", &Displacement::beta)
        .def("__len__", &Displacement::size)
        .def("__getitem__", [](const Displacement& d, std::size_t q) { return d[q]; });

    m.def("coherent_state", &coherent_state);
    m.def("displacement_operator", &displacement_operator);
    m.def("thermal_density", &thermal_density);
    m.def("thermal_gamma", &thermal_gamma);
    m.def("displaced_thermal_gamma", &displaced_thermal_gamma);
    m.def("gaussian_overlap", &gaussian_overlap);
    m.def("gaussian_overlap_exponent", &gaussian_overlap_exponent);
    m.def("coherent_tail_mass", &coherent_tail_mass);

    // ------------------------- models --------------------------------------
    py::class_<LatticeSpec>(m, "LatticeSpec")
        .def_static("single_excitation", &LatticeSpec::single_excitation, py::arg("n_sites"),
                    py::arg("epsilon"), py::arg("hopping"), py::arg("include_vacuum") = false)
        .def_static("bosonic", &LatticeSpec::bosonic)
        .def_property_readonly("dim", &LatticeSpec::dim)
        .def("number_op", &LatticeSpec::number_op)
        .def("transfer_op", &LatticeSpec::transfer_op)
        .def("lower_op", &LatticeSpec::lower_op)
        .def("total_number", &LatticeSpec::total_number)
        .def("h_lat", &LatticeSpec::h_lat);

    py::class_<CouplingSet>(m, "CouplingSet")
        .def(py::init<>())
        .def_readwrite("w", &CouplingSet::w)
        .def_readwrite("u", &CouplingSet::u)
        .def("w_at", &CouplingSet::w_at)
        .def_property_readonly("n_modes", &CouplingSet::n_modes);

    py::class_<PumpSpec>(m, "PumpSpec")
        .def(py::init<>())
        .def_readwrite("zeta0", &PumpSpec::zeta0)
        .def_readwrite("eps", &PumpSpec::eps)
        .def_readwrite("J", &PumpSpec::J);

    py::class_<Model>(m, "Model")
        .def_readonly("h_lat", &Model::h_lat)
        .def_readonly("bath", &Model::bath)
        .def_readonly("couplings", &Model::couplings)
        .def("space", &Model::space)
        .def("full_hamiltonian", &Model::full_hamiltonian, py::arg("t") = 0.0);

    m.def("make_model", &make_model);
    m.def("build_frohlich", &build_frohlich);
    m.def("build_hopping_coupled", &build_hopping_coupled);
    m.def("build_pumped_frohlich", &build_pumped_frohlich);
    m.def("pump_lattice_displacements", &pump_lattice_displacements);
    m.def("pump_phonon_drive", &pump_phonon_drive);
    m.def("pumped_drive_at", &pumped_drive_at);

    py::class_<DimerModel>(m, "DimerModel")
        .def_readonly("site_form", &DimerModel::site_form)
        .def_readonly("normal_form", &DimerModel::normal_form)
        .def_readonly("lattice_rotation", &DimerModel::lattice_rotation)
        .def("eps_normal", &DimerModel::eps_normal)
        .def("chi_normal", &DimerModel::chi_normal);
    m.def("build_dimer", &build_dimer);

    // ------------------------- dfs -----------------------------------------
    py::class_<EigenspaceReport>(m, "EigenspaceReport")
        .def_readonly("basis", &EigenspaceReport::basis)
        .def_readonly("mu", &EigenspaceReport::mu)
        .def_readonly("residual_w", &EigenspaceReport::residual_w)
        .def_readonly("residual_w_dag", &EigenspaceReport::residual_w_dag)
        .def_readonly("is_dfs", &EigenspaceReport::is_dfs)
        .def_property_readonly("rank", &EigenspaceReport::rank);

    py::class_<DfsTolerances>(m, "DfsTolerances").def(py::init<>());

    m.def("dfs_scan", &dfs_scan, py::arg("h_lat"), py::arg("couplings"),
          py::arg("tol") = DfsTolerances{});
    m.def(
        "common_eigenspaces",
        [](const CouplingSet& cs) { return common_eigenspaces(cs).subspaces; },
        "maximal simultaneous eigenspaces of the coupling family");
    m.def("check_dfs_time_dependent", &check_dfs_time_dependent);
    m.def("lambda_constraint_residual", &lambda_constraint_residual, py::arg("state0"),
          py::arg("model"), py::arg("horizon"), py::arg("n_samples") = 64,
          py::arg("pure_zero_temperature") = false);

    // ------------------------- propagator ----------------------------------
    py::class_<Branch>(m, "Branch")
        .def_static("pure_state", &Branch::pure_state)
        .def_static("density_state", &Branch::density_state)
        .def_readwrite("beta", &Branch::beta)
        .def_readwrite("mu", &Branch::mu)
        .def_readonly("theta", &Branch::theta)
        .def_readonly("lattice_vector", &Branch::lattice_vector)
        .def_readonly("lattice_op", &Branch::lattice_op)
        .def_property_readonly("weight", &Branch::weight);

    py::class_<CoherentProductState>(m, "CoherentProductState")
        .def(py::init([](std::vector<Branch> branches, BathSpec bath) {
            CoherentProductState st;
            st.branches = std::move(branches);
            st.bath = std::move(bath);
            return st;
        }))
        .def_readwrite("branches", &CoherentProductState::branches)
        .def_property_readonly("total_weight", &CoherentProductState::total_weight);

    py::class_<AbortDiagnostic>(m, "AbortDiagnostic")
        .def_readonly("aborted", &AbortDiagnostic::aborted)
        .def_readonly("step", &AbortDiagnostic::step)
        .def_readonly("message", &AbortDiagnostic::message);

    py::class_<BranchTrajectory>(m, "BranchTrajectory")
        .def_readonly("beta", &BranchTrajectory::beta)
        .def_readonly("theta", &BranchTrajectory::theta)
        .def_readonly("omega_shift", &BranchTrajectory::omega_shift)
        .def_readonly("residual_w", &BranchTrajectory::residual_w);

    py::class_<TrajectoryRecord>(m, "TrajectoryRecord")
        .def_readonly("times", &TrajectoryRecord::times)
        .def_readonly("branches", &TrajectoryRecord::branches)
        .def_readonly("reduced_lattice", &TrajectoryRecord::reduced_lattice)
        .def_readonly("reduced_phonon", &TrajectoryRecord::reduced_phonon)
        .def_readonly("observables", &TrajectoryRecord::observables)
        .def_readonly("abort", &TrajectoryRecord::abort)
        .def_property_readonly("aborted", &TrajectoryRecord::aborted);

    py::class_<PropagateOptions>(m, "PropagateOptions")
        .def(py::init<>())
        .def_readwrite("sample_stride", &PropagateOptions::sample_stride)
        .def_readwrite("force_uncertified", &PropagateOptions::force_uncertified)
        .def_readwrite("abort_tol", &PropagateOptions::abort_tol);

    m.def("displacement_closed_form", &displacement_closed_form);
    m.def("integrate_displacement_rk4", &integrate_displacement_rk4);
    m.def("energy_shift", &energy_shift);
    m.def("self_consistency_residual", &self_consistency_residual, py::arg("branch"),
          py::arg("model"), py::arg("mu_candidate"), py::arg("t") = 0.0);
    m.def("propagate_branch", &propagate_branch, py::arg("branch"), py::arg("model"),
          py::arg("dt"), py::arg("n_steps"), py::arg("options") = PropagateOptions{});
    m.def("propagate_state", &propagate_state, py::arg("state"), py::arg("model"),
          py::arg("dt"), py::arg("n_steps"), py::arg("options") = PropagateOptions{});
    m.def("state_at_sample", &state_at_sample);

    py::class_<AssembledDensity>(m, "AssembledDensity")
        .def_readonly("full", &AssembledDensity::full)
        .def_readonly("reduced_lattice", &AssembledDensity::reduced_lattice)
        .def_readonly("reduced_phonon", &AssembledDensity::reduced_phonon);
    m.def("assemble_density", &assemble_density);

    // ------------------------- oracle --------------------------------------
    py::enum_<OracleIntegrator>(m, "OracleIntegrator")
        .value("ExponentialStep", OracleIntegrator::ExponentialStep)
        .value("Midpoint", OracleIntegrator::Midpoint)
        .value("RK4", OracleIntegrator::RK4);

    py::class_<OracleConfig>(m, "OracleConfig")
        .def(py::init<>())
        .def_readwrite("dt", &OracleConfig::dt)
        .def_readwrite("sample_stride", &OracleConfig::sample_stride)
        .def_readwrite("integrator", &OracleConfig::integrator);

    py::class_<PureTrajectory>(m, "PureTrajectory")
        .def_readonly("times", &PureTrajectory::times)
        .def_readonly("states", &PureTrajectory::states);
    py::class_<DensityTrajectory>(m, "DensityTrajectory")
        .def_readonly("times", &DensityTrajectory::times)
        .def_readonly("rhos", &DensityTrajectory::rhos);

    m.def("exact_propagate_pure", &exact_propagate_pure);
    m.def("exact_propagate_density", &exact_propagate_density);
    m.def("compare_reduced", &compare_reduced);

    // ------------------------- dimer analytics ------------------------------
    py::class_<DimerState>(m, "DimerState")
        .def(py::init<>())
        .def_readwrite("phi1", &DimerState::phi1)
        .def_readwrite("phi2", &DimerState::phi2)
        .def_readwrite("overlap_phi", &DimerState::overlap_phi)
        .def_readwrite("beta1", &DimerState::beta1)
        .def_readwrite("beta2", &DimerState::beta2);

    m.def("gamma_relaxation", &gamma_relaxation);
    m.def("dimer_coherence", &dimer_coherence);
    m.def("dimer_state_at", &dimer_state_at);
    m.def("delta_omega", &delta_omega);
    m.def("site_basis_density", &site_basis_density);

    // ------------------------- experiments ---------------------------------
    m.def("list_scenarios", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& s : list_scenarios()) out.emplace_back(s.name, s.description);
        return out;
    });
    m.def(
        "validate_config",
        [](const std::string& text) {
            auto vr = validate_config_text(text);
            return std::make_pair(vr.ok(), vr.errors);
        },
        "validate a JSON config string; returns (ok, errors)");
    m.def(
        "run_experiment",
        [](const std::string& text, const std::string& output_root) {
            auto vr = validate_config_text(text);
            if (!vr.ok()) {
                std::string msg = "config invalid:";
                for (const auto& e : vr.errors) msg += "\n  " + e;
                throw std::invalid_argument(msg);
            }
            const RunReport rep = run_experiment(*vr.config, output_root);
            return rep.to_json().dump();
        },
        py::arg("config_text"), py::arg("output_root") = std::string("."),
        "run a JSON config string; returns the report as a JSON string");
}
