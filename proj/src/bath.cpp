// bath.cpp — thermal Gaussian machinery on truncated Fock spaces

#include "cps/bath.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace cps {

// --------------------------- BathSpec ----------------------------------------

BathSpec::BathSpec(std::vector<Mode> m, double T) : modes(std::move(m)), temperature(T) {
    if (T < 0.0) throw std::invalid_argument("BathSpec: temperature must be nonnegative");
    for (std::size_t q = 0; q < modes.size(); ++q) {
        if (modes[q].omega <= 0.0) {
            throw std::invalid_argument("BathSpec: mode frequency must be positive");
        }
        if (modes[q].n_cut < 2) {
            throw std::invalid_argument("BathSpec: n_cut must be at least 2");
        }
        const double tail = thermal_tail(q);
        std::ostringstream ctx;
        ctx << "thermal state of mode " << q;
        enforce_tail_policy(tail, ctx.str());
    }
}

double BathSpec::theta(std::size_t q) const {
    if (temperature == 0.0) return 0.0;
    return std::atanh(std::exp(-modes.at(q).omega / (2.0 * temperature)));
}

double BathSpec::coth_half(std::size_t q) const {
    if (temperature == 0.0) return 1.0;
    return 1.0 / std::tanh(modes.at(q).omega / (2.0 * temperature));
}

double BathSpec::mean_occupation(std::size_t q) const {
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(modes.at(q).omega / temperature);
}

double BathSpec::thermal_tail(std::size_t q) const {
    if (temperature == 0.0) return 0.0;
    const auto& m = modes.at(q);
    // Untruncated geometric weights: P(n >= n_cut) = x^{n_cut}.
    return std::exp(-m.omega / temperature * static_cast<double>(m.n_cut));
}

ProductSpace BathSpec::space(const std::string& prefix) const {
    std::vector<ProductSpace::Factor> f;
    f.reserve(modes.size());
    for (std::size_t q = 0; q < modes.size(); ++q) {
        f.push_back({prefix + std::to_string(q), modes[q].n_cut});
    }
    return ProductSpace(std::move(f));
}

// --------------------------- Warnings ----------------------------------------

namespace {
std::mutex g_sink_mutex;
WarningSink g_sink = [](const std::string& msg) { std::cerr << "[cps] warning: " << msg << "\n"; };
} // namespace

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard<std::mutex> lock(g_sink_mutex);
    WarningSink old = g_sink;
    g_sink = std::move(sink);
    return old;
}

void emit_warning(const std::string& message) {
    WarningSink sink;
    {
        std::lock_guard<std::mutex> lock(g_sink_mutex);
        sink = g_sink;
    }
    if (sink) sink(message);
}

double coherent_tail_mass(Complex beta, Index n_cut) {
    const double nbar = std::norm(beta);
    double term = std::exp(-nbar); // Poisson weight at n = 0
    double cum = term;
    for (Index n = 1; n < n_cut; ++n) {
        term *= nbar / static_cast<double>(n);
        cum += term;
    }
    return std::max(0.0, 1.0 - cum);
}

void enforce_tail_policy(double tail_mass, const std::string& context) {
    if (tail_mass > kTailError) {
        std::ostringstream msg;
        msg << context << ": truncation tail mass " << tail_mass << " exceeds hard bound "
            << kTailError;
        throw std::runtime_error(msg.str());
    }
    if (tail_mass > kTailWarn) {
        std::ostringstream msg;
        msg << context << ": truncation tail mass " << tail_mass << " exceeds " << kTailWarn;
        emit_warning(msg.str());
    }
}

// --------------------------- Constructors ------------------------------------

Vector coherent_state(Complex beta, const Mode& mode) {
    enforce_tail_policy(coherent_tail_mass(beta, mode.n_cut), "coherent state");
    Vector v(mode.n_cut);
    Complex amp = std::exp(-0.5 * std::norm(beta));
    v(0) = amp;
    for (Index n = 1; n < mode.n_cut; ++n) {
        amp *= beta / std::sqrt(static_cast<double>(n));
        v(n) = amp;
    }
    return v;
}

Matrix displacement_operator(Complex beta, Index n_cut) {
    auto [b, bdag] = boson_ladder(n_cut);
    return matrix_exponential(beta * bdag - std::conj(beta) * b);
}

Matrix thermal_density(const BathSpec& bath, std::size_t mode_index) {
    const Mode& m = bath.modes.at(mode_index);
    Matrix rho = Matrix::Zero(m.n_cut, m.n_cut);
    if (bath.temperature == 0.0) {
        rho(0, 0) = 1.0;
        return rho;
    }
    const double x = std::exp(-m.omega / bath.temperature);
    double w = 1.0, z = 0.0;
    for (Index n = 0; n < m.n_cut; ++n, w *= x) {
        rho(n, n) = w;
        z += w;
    }
    rho /= z;
    return rho;
}

Matrix thermal_gamma(const BathSpec& bath, std::size_t mode_index) {
    Matrix rho = thermal_density(bath, mode_index);
    Matrix g = Matrix::Zero(rho.rows(), rho.cols());
    for (Index n = 0; n < rho.rows(); ++n) g(n, n) = std::sqrt(rho(n, n).real());
    return g;
}

Matrix displaced_thermal_gamma(const Displacement& beta, const BathSpec& bath) {
    if (beta.size() != bath.n_modes()) {
        throw std::invalid_argument("displaced_thermal_gamma: displacement size mismatch");
    }
    Matrix gamma;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        std::ostringstream ctx;
        ctx << "displaced thermal state of mode " << q;
        enforce_tail_policy(coherent_tail_mass(beta[q], bath.modes[q].n_cut), ctx.str());
        Matrix gq = displacement_operator(beta[q], bath.modes[q].n_cut) * thermal_gamma(bath, q);
        gamma = (q == 0) ? gq : kron(gamma, gq);
    }
    return gamma;
}

Complex gaussian_overlap(const Displacement& beta1, const Displacement& beta2,
                         const BathSpec& bath) {
    if (beta1.size() != bath.n_modes() || beta2.size() != bath.n_modes()) {
        throw std::invalid_argument("gaussian_overlap: displacement size mismatch");
    }
    double phase = 0.0;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        phase += std::imag(beta1[q] * std::conj(beta2[q]));
    }
    return std::exp(Complex{-gaussian_overlap_exponent(beta1, beta2, bath), phase});
}

double gaussian_overlap_exponent(const Displacement& beta1, const Displacement& beta2,
                                 const BathSpec& bath) {
    if (beta1.size() != bath.n_modes() || beta2.size() != bath.n_modes()) {
        throw std::invalid_argument("gaussian_overlap_exponent: displacement size mismatch");
    }
    double gamma = 0.0;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        gamma += 0.5 * std::norm(beta1[q] - beta2[q]) * bath.coth_half(q);
    }
    return gamma;
}

} // namespace cps
