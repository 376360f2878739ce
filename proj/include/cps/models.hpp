// models.hpp — concrete lattice-phonon Hamiltonian families: local-mode
// (number-coupled) and hopping-coupled ring models, the externally pumped
// ring, and the solvable two-site dimer. Lattice constant a = 1, ring
// (periodic) geometry for all translation-invariant models.

#pragma once

#include "cps/bath.hpp"
#include "cps/operators.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace cps {

// --------------------------- Lattice ----------------------------------------

enum class LatticeSector {
    SingleExcitation, // one quantum shared by the sites (optionally + vacuum)
    Bosonic           // independent truncated bosonic site modes
};

struct LatticeSpec {
    Index n_sites = 1;
    Eigen::VectorXd epsilon;      // per-site energies
    Matrix hopping;               // Hermitian J_mn, added as sum_mn J_mn c_m† c_n
    LatticeSector sector = LatticeSector::SingleExcitation;
    bool include_vacuum = false;  // single-excitation sector only
    Index site_levels = 2;        // bosonic sector: Fock levels per site

    static LatticeSpec single_excitation(Index n_sites, const Eigen::VectorXd& eps,
                                         const Matrix& hopping, bool include_vacuum = false);
    static LatticeSpec bosonic(Index n_sites, const Eigen::VectorXd& eps,
                               const Matrix& hopping, Index site_levels);

    Index dim() const;
    void validate() const;

    // Site operators on the sector space. Basis layout for single-excitation:
    // index n = site n occupied, vacuum (if any) last.
    Matrix number_op(Index n) const;          // c_n† c_n
    Matrix transfer_op(Index m, Index n) const; // c_m† c_n
    Matrix lower_op(Index n) const;           // c_n (needs vacuum or bosonic sector)
    Matrix total_number() const;

    Matrix h_lat() const;
};

// --------------------------- Couplings --------------------------------------

// Per-mode lattice operators w_q (optionally time dependent) and the optional
// zero-temperature bilinear family u_{qq'} with u_{q'q}† = u_{qq'}.
struct CouplingSet {
    std::vector<Matrix> w;
    std::vector<std::function<Matrix(double)>> w_t; // same length as w when used
    std::vector<std::vector<Matrix>> u;             // empty, or n_modes x n_modes

    std::size_t n_modes() const { return w.size(); }
    bool time_dependent() const { return !w_t.empty(); }
    bool has_bilinear() const;

    Matrix w_at(std::size_t q, double t) const;
    Matrix w_static(std::size_t q) const;

    // Checks dimensions, the u pairing, and the finite-temperature linearity
    // restriction (u must be empty when T > 0).
    void validate(Index lattice_dim, double temperature) const;
};

// --------------------------- Pump -------------------------------------------

// External pump data for the ring model: initial lattice normal-mode
// amplitudes zeta_q(0) on the grid q_k = 2 pi k / N, with dispersion
// Omega_q = eps - 2 J cos(q).
struct PumpSpec {
    std::vector<Complex> zeta0; // per lattice normal mode, size N
    double eps = 0.0;
    double J = 0.0;

    std::size_t n_sites() const { return zeta0.size(); }
    double lattice_freq(std::size_t k) const;
};

// zeta_n(t) = sum_q zeta_q(0) e^{i q n} e^{-i Omega_q t}.
std::vector<Complex> pump_lattice_displacements(const PumpSpec& pump, double eps, double J,
                                                double t);

// Per-mode drive chi_q sum_n e^{-i q n} |zeta_n|^2 on the ring grid
// (mode k <-> q = 2 pi k / N; chi and zeta must have equal length N).
std::vector<Complex> pump_phonon_drive(const std::vector<Complex>& chi,
                                       const std::vector<Complex>& zeta);

// --------------------------- Assembled model --------------------------------

struct Model {
    Matrix h_lat;
    BathSpec bath;
    CouplingSet couplings;
    std::optional<PumpSpec> pump; // set for the pumped ring model
    std::vector<Complex> pump_chi; // chi_q table of the pumped model

    ProductSpace space() const; // lattice factor first, then modes ascending
    Index lattice_dim() const { return h_lat.rows(); }

    // Hermitian Hamiltonian on the full product space; the time argument is
    // honored for time-dependent couplings.
    Matrix full_hamiltonian(double t = 0.0) const;
};

Model make_model(Matrix h_lat, BathSpec bath, CouplingSet couplings);

// w_q = omega_q sum_n chi(q, n) c_n† c_n on top of the given lattice
// (chi is n_modes x n_sites).
Model build_frohlich(const LatticeSpec& lattice, const BathSpec& bath, const Matrix& chi);

// Ring with hopping-modulated couplings,
//   w_q = omega_q sum_n [chi1_q n_n + chi2_q (c_{n+1}† c_n + c_n† c_{n+1})] e^{i q n},
// mode k on the grid q = 2 pi k / N.
Model build_hopping_coupled(const LatticeSpec& lattice, const BathSpec& bath,
                            const std::vector<Complex>& chi1, const std::vector<Complex>& chi2);

// Commutator [w_q, w_q†] of the hopping-coupled family in closed form
// (used as an independent cross-check of the assembled operators).
Matrix hopping_coupled_commutator(const LatticeSpec& lattice, double omega, Complex chi1,
                                  Complex chi2, double q);

// --------------------------- Dimer ------------------------------------------

// Symmetric two-site dimer with site-independent number coupling chi_q and
// phonon-assisted hopping lambda_q. Site form
//   H = (n_1 + n_2)[eps + sum_q (chi_q b_q† + h.c.)]
//     - (c_1† c_2 + c_2† c_1)[J + sum_q (lambda_q b_q† + h.c.)] + sum_q omega_q b_q† b_q
// and its normal-mode form with
//   eps_1 = eps - J, eps_2 = eps + J, chi_{q,1} = chi_q - lambda_q,
//   chi_{q,2} = chi_q + lambda_q.
struct DimerModel {
    double eps = 0.0;
    double J = 0.0;
    std::vector<Complex> chi;
    std::vector<Complex> lambda;

    Model site_form;
    Model normal_form;
    Matrix lattice_rotation; // V with H_normal = V† H_site V on the lattice factor

    double eps_normal(int j) const { return j == 1 ? eps - J : eps + J; }
    Complex chi_normal(int j, std::size_t q) const {
        return j == 1 ? chi[q] - lambda[q] : chi[q] + lambda[q];
    }
};

DimerModel build_dimer(double eps, double J, const std::vector<Complex>& chi,
                       const std::vector<Complex>& lambda, const BathSpec& bath);

// Pumped ring model: local-mode couplings in the acoustic convention
// chi(q, n) = chi_q e^{-i q n} plus the pump-dressed time dependence
//   w_q(t) = omega_q sum_n chi_{qn} [n_n + zeta_n(t) c_n† + zeta_n*(t) c_n].
// The bath must carry one mode per ring wavevector (omega_q = omega_{-q}).
Model build_pumped_frohlich(const LatticeSpec& lattice, const BathSpec& bath,
                            const std::vector<Complex>& chi, const PumpSpec& pump);

// Per-mode drive of the pumped model at time t (chi_q sum_n e^{-iqn}|zeta_n|^2).
std::vector<Complex> pumped_drive_at(const Model& model, double t);

} // namespace cps
