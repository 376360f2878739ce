// bath.hpp — coherent states, thermal Gaussian state operators and the
// finite-temperature Gaussian overlap / dephasing factors for a discrete set
// of phonon modes. Units: hbar = k_B = 1 throughout.

#pragma once

#include "cps/operators.hpp"

#include <functional>
#include <vector>

namespace cps {

// --------------------------- Mode set ----------------------------------------

struct Mode {
    double omega = 1.0; // mode frequency, > 0
    Index n_cut = 2;    // Fock levels kept per mode
};

// Discrete phonon bath: mode list plus a common temperature. The thermal angle
// theta_q obeys tanh(theta_q) = exp(-omega_q / 2T), with theta_q = 0 at T = 0.
struct BathSpec {
    std::vector<Mode> modes;
    double temperature = 0.0;

    BathSpec() = default;
    BathSpec(std::vector<Mode> m, double T);

    std::size_t n_modes() const { return modes.size(); }
    double theta(std::size_t q) const;

    // coth(omega_q / 2T); exactly 1 at T = 0 (no overflow path).
    double coth_half(std::size_t q) const;

    // Bose occupation of mode q after truncation-free geometric sum.
    double mean_occupation(std::size_t q) const;

    // Thermal population above the last kept level, x^{n_cut} with
    // x = exp(-omega/T); zero at T = 0.
    double thermal_tail(std::size_t q) const;

    ProductSpace space(const std::string& prefix = "mode") const;
};

// Per-mode coherent displacement amplitudes.
struct Displacement {
    std::vector<Complex> beta;

    Displacement() = default;
    explicit Displacement(std::vector<Complex> b) : beta(std::move(b)) {}
    Displacement(std::initializer_list<Complex> b) : beta(b) {}
    static Displacement zero(std::size_t n_modes) {
        return Displacement(std::vector<Complex>(n_modes, Complex{0.0, 0.0}));
    }
    std::size_t size() const { return beta.size(); }
    Complex operator[](std::size_t q) const { return beta[q]; }
};

// --------------------------- Truncation policy -------------------------------

// Tail mass above the soft bound emits a warning through the registered sink;
// above the hard bound the operation throws.
inline constexpr double kTailWarn = 1e-10;
inline constexpr double kTailError = 1e-6;

using WarningSink = std::function<void(const std::string&)>;

// Replaces the process-wide warning sink (default writes to stderr); returns
// the previous sink.
WarningSink set_warning_sink(WarningSink sink);
void emit_warning(const std::string& message);

// Coherent-state population left above n_cut - 1 quanta for amplitude beta.
double coherent_tail_mass(Complex beta, Index n_cut);

// Warn/throw per the truncation policy.
void enforce_tail_policy(double tail_mass, const std::string& context);

// --------------------------- State constructors ------------------------------

// Normalized truncated coherent state, amplitudes e^{-|b|^2/2} b^n / sqrt(n!).
Vector coherent_state(Complex beta, const Mode& mode);

// D(beta) = exp(beta b† - beta* b) on the truncated mode space (exactly
// unitary: anti-Hermitian generator).
Matrix displacement_operator(Complex beta, Index n_cut);

// Thermal density matrix of one mode: diag Boltzmann weights, renormalized to
// unit trace after truncation. T = 0 gives the vacuum projector.
Matrix thermal_density(const BathSpec& bath, std::size_t mode_index);

// Square root of the thermal density (diagonal, positive).
Matrix thermal_gamma(const BathSpec& bath, std::size_t mode_index);

// Displaced thermal state operator over all modes,
//   gamma = ⊗_q D(beta_q) gamma_{q,T},
// so that gamma gamma† is the displaced thermal density matrix.
Matrix displaced_thermal_gamma(const Displacement& beta, const BathSpec& bath);

// Hilbert-Schmidt overlap (gamma_2 | gamma_1) = Tr[gamma(beta2)† gamma(beta1)]
// in closed form:
//   exp[ i sum_q Im(beta_q1 beta_q2*) ] * exp(-Gamma),
//   Gamma = (1/2) sum_q |beta_q1 - beta_q2|^2 coth(omega_q / 2T).
Complex gaussian_overlap(const Displacement& beta1, const Displacement& beta2,
                         const BathSpec& bath);

// The decay exponent Gamma alone.
double gaussian_overlap_exponent(const Displacement& beta1, const Displacement& beta2,
                                 const BathSpec& bath);

} // namespace cps
