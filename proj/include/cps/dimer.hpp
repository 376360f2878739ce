// dimer.hpp — closed-form evaluation of the solvable two-site dimer:
// dephasing exponent, bath overlap phase, reduced density matrix in the
// normal and localized bases, and the coherent-rotation frequency.

#pragma once

#include "cps/bath.hpp"
#include "cps/models.hpp"
#include "cps/propagator.hpp"

#include <vector>

namespace cps {

// Branch amplitudes and displacements of the dimer superposition at one
// instant, plus the fixed lattice co-state overlap <phi_1|phi_2>.
struct DimerState {
    Complex phi1{1.0 / std::numbers::sqrt2, 0.0};
    Complex phi2{1.0 / std::numbers::sqrt2, 0.0};
    Complex overlap_phi{1.0, 0.0};
    Displacement beta1;
    Displacement beta2;
};

// Equilibrium-start relaxation exponent (beta(0) = 0):
//   Gamma0(t) = 4 sum_q |lambda_q|^2 coth(omega_q / 2T) (1 - cos omega_q t) / omega_q^2.
double gamma_relaxation(double t, const std::vector<Complex>& lambda, const BathSpec& bath);

// Normal-basis coherence (rho_dimer)_{12} at time t, evolved analytically
// from the given initial state: phi_1(t) phi_2*(t) <phi_1|phi_2> (g_2|g_1).
Complex dimer_coherence(double t, const DimerState& initial, const DimerModel& model,
                        const BathSpec& bath);

// Dimer state evolved to time t (amplitudes and displacements).
DimerState dimer_state_at(double t, const DimerState& initial, const DimerModel& model,
                          const BathSpec& bath);

// Energy-shift splitting at the stationary displacements beta_j = -chi_j/omega:
//   DeltaOmega = Omega_2 - Omega_1 = 2 sum_q (chi_q lambda_q* + chi_q* lambda_q) / omega_q.
double delta_omega(const std::vector<Complex>& chi, const std::vector<Complex>& lambda,
                   const std::vector<double>& omega);

// Transform the normal-basis 2x2 reduced matrix to the localized site basis.
Matrix site_basis_density(const Matrix& rho_normal, const DimerState& state);

} // namespace cps
