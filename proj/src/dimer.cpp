// dimer.cpp — dimer dephasing closed forms

#include "cps/dimer.hpp"

#include <cmath>
#include <stdexcept>

namespace cps {

double gamma_relaxation(double t, const std::vector<Complex>& lambda, const BathSpec& bath) {
    if (lambda.size() != bath.n_modes()) {
        throw std::invalid_argument("gamma_relaxation: lambda must cover every mode");
    }
    double gamma = 0.0;
    for (std::size_t q = 0; q < lambda.size(); ++q) {
        const double omega = bath.modes[q].omega;
        gamma += 4.0 * std::norm(lambda[q]) * bath.coth_half(q) *
                 (1.0 - std::cos(omega * t)) / (omega * omega);
    }
    return gamma;
}

DimerState dimer_state_at(double t, const DimerState& initial, const DimerModel& model,
                          const BathSpec& bath) {
    const std::size_t m = bath.n_modes();
    if (initial.beta1.size() != m || initial.beta2.size() != m) {
        throw std::invalid_argument("dimer_state_at: displacement size mismatch");
    }
    DimerState out = initial;

    // Branch phases: phi_j(t) = phi_j(0) exp[-i (eps_j t - ∫ Omega_j dt)],
    // with Omega_j(t) = -sum_q Re(chi_{q,j}* beta_{q,j}(t)) and the closed-form
    // displacement trajectory.
    for (int j = 1; j <= 2; ++j) {
        const Displacement& beta0 = (j == 1) ? initial.beta1 : initial.beta2;
        Displacement& beta_t = (j == 1) ? out.beta1 : out.beta2;
        double theta = 0.0; // ∫ Omega_j dt
        for (std::size_t q = 0; q < m; ++q) {
            const double omega = bath.modes[q].omega;
            const Complex mu = model.chi_normal(j, q);
            beta_t.beta[q] = displacement_closed_form(beta0[q], omega, mu, t);
            // ∫_0^t -Re[mu* beta(s)] ds with beta(s) = c e^{-i omega s} - mu/omega.
            const Complex c = beta0[q] + mu / omega;
            const Complex window = (1.0 - std::exp(-iunit * omega * t)) / (iunit * omega);
            theta += -std::real(std::conj(mu) * c * window) + std::norm(mu) / omega * t;
        }
        const Complex amp = std::exp(-iunit * (model.eps_normal(j) * t - theta));
        if (j == 1) {
            out.phi1 = initial.phi1 * amp;
        } else {
            out.phi2 = initial.phi2 * amp;
        }
    }
    return out;
}

Complex dimer_coherence(double t, const DimerState& initial, const DimerModel& model,
                        const BathSpec& bath) {
    const DimerState st = dimer_state_at(t, initial, model, bath);
    if (st.overlap_phi == Complex{0.0, 0.0}) return {0.0, 0.0};
    return st.phi1 * std::conj(st.phi2) * st.overlap_phi *
           gaussian_overlap(st.beta1, st.beta2, bath);
}

double delta_omega(const std::vector<Complex>& chi, const std::vector<Complex>& lambda,
                   const std::vector<double>& omega) {
    if (chi.size() != lambda.size() || chi.size() != omega.size()) {
        throw std::invalid_argument("delta_omega: per-mode inputs must align");
    }
    // Omega_j = |chi_{q,j}|^2 / omega_q at the stationary displacements, with
    // chi_{q,1/2} = chi_q -/+ lambda_q.
    double sum = 0.0;
    for (std::size_t q = 0; q < chi.size(); ++q) {
        if (omega[q] <= 0.0) throw std::invalid_argument("delta_omega: omega must be positive");
        sum += (std::norm(chi[q] + lambda[q]) - std::norm(chi[q] - lambda[q])) / omega[q];
    }
    return sum;
}

Matrix site_basis_density(const Matrix& rho_normal, const DimerState& state) {
    if (rho_normal.rows() != 2 || rho_normal.cols() != 2) {
        throw std::invalid_argument("site_basis_density: expected a 2x2 matrix");
    }
    (void)state;
    // |1> = (|1n> + |2n>)/sqrt2, |2> = (|1n> - |2n>)/sqrt2: conjugate by the
    // self-inverse rotation.
    Matrix v(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    v << s, s, s, -s;
    return v.adjoint() * rho_normal * v;
}

} // namespace cps
