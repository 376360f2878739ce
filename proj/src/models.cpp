// models.cpp — Hamiltonian family construction

#include "cps/models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cps {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ProductSpace bosonic_site_space(Index n_sites, Index site_levels) {
    std::vector<ProductSpace::Factor> f;
    for (Index n = 0; n < n_sites; ++n) {
        f.push_back({"site" + std::to_string(n), site_levels});
    }
    return ProductSpace(std::move(f));
}

} // namespace

// --------------------------- LatticeSpec -------------------------------------

LatticeSpec LatticeSpec::single_excitation(Index n_sites, const Eigen::VectorXd& eps,
                                           const Matrix& hopping, bool include_vacuum) {
    LatticeSpec s;
    s.n_sites = n_sites;
    s.epsilon = eps;
    s.hopping = hopping;
    s.sector = LatticeSector::SingleExcitation;
    s.include_vacuum = include_vacuum;
    s.validate();
    return s;
}

LatticeSpec LatticeSpec::bosonic(Index n_sites, const Eigen::VectorXd& eps,
                                 const Matrix& hopping, Index site_levels) {
    LatticeSpec s;
    s.n_sites = n_sites;
    s.epsilon = eps;
    s.hopping = hopping;
    s.sector = LatticeSector::Bosonic;
    s.site_levels = site_levels;
    s.validate();
    return s;
}

void LatticeSpec::validate() const {
    if (n_sites < 1) throw std::invalid_argument("LatticeSpec: need at least one site");
    if (epsilon.size() != n_sites) {
        throw std::invalid_argument("LatticeSpec: epsilon size must equal n_sites");
    }
    if (hopping.rows() != n_sites || hopping.cols() != n_sites) {
        throw std::invalid_argument("LatticeSpec: hopping must be n_sites x n_sites");
    }
    if (max_abs(hopping - hopping.adjoint()) > 1e-12 * std::max(1.0, max_abs(hopping))) {
        throw std::invalid_argument("LatticeSpec: hopping matrix must be Hermitian");
    }
    if (sector == LatticeSector::Bosonic && site_levels < 2) {
        throw std::invalid_argument("LatticeSpec: bosonic sector needs site_levels >= 2");
    }
}

Index LatticeSpec::dim() const {
    if (sector == LatticeSector::SingleExcitation) {
        return n_sites + (include_vacuum ? 1 : 0);
    }
    Index d = 1;
    for (Index n = 0; n < n_sites; ++n) d *= site_levels;
    return d;
}

Matrix LatticeSpec::number_op(Index n) const {
    if (n < 0 || n >= n_sites) throw std::out_of_range("LatticeSpec::number_op: bad site");
    if (sector == LatticeSector::SingleExcitation) {
        Matrix m = Matrix::Zero(dim(), dim());
        m(n, n) = 1.0;
        return m;
    }
    auto [b, bdag] = boson_ladder(site_levels);
    return embed(bdag * b, static_cast<std::size_t>(n), bosonic_site_space(n_sites, site_levels));
}

Matrix LatticeSpec::transfer_op(Index m, Index n) const {
    if (m < 0 || m >= n_sites || n < 0 || n >= n_sites) {
        throw std::out_of_range("LatticeSpec::transfer_op: bad site");
    }
    if (sector == LatticeSector::SingleExcitation) {
        Matrix t = Matrix::Zero(dim(), dim());
        t(m, n) = 1.0;
        return t;
    }
    return lower_op(m).adjoint() * lower_op(n);
}

Matrix LatticeSpec::lower_op(Index n) const {
    if (n < 0 || n >= n_sites) throw std::out_of_range("LatticeSpec::lower_op: bad site");
    if (sector == LatticeSector::SingleExcitation) {
        if (!include_vacuum) {
            throw std::logic_error("LatticeSpec::lower_op: single-excitation sector without vacuum "
                                   "cannot represent c_n; enable include_vacuum");
        }
        Matrix c = Matrix::Zero(dim(), dim());
        c(n_sites, n) = 1.0; // |vac><n|
        return c;
    }
    auto [b, bdag] = boson_ladder(site_levels);
    return embed(b, static_cast<std::size_t>(n), bosonic_site_space(n_sites, site_levels));
}

Matrix LatticeSpec::total_number() const {
    Matrix total = Matrix::Zero(dim(), dim());
    for (Index n = 0; n < n_sites; ++n) total += number_op(n);
    return total;
}

Matrix LatticeSpec::h_lat() const {
    Matrix h = Matrix::Zero(dim(), dim());
    for (Index n = 0; n < n_sites; ++n) h += epsilon(n) * number_op(n);
    for (Index m = 0; m < n_sites; ++m) {
        for (Index n = 0; n < n_sites; ++n) {
            if (hopping(m, n) != Complex{0.0, 0.0}) {
                h += hopping(m, n) * transfer_op(m, n);
            }
        }
    }
    return h;
}

// --------------------------- CouplingSet -------------------------------------

bool CouplingSet::has_bilinear() const {
    for (const auto& row : u) {
        for (const auto& m : row) {
            if (m.size() != 0 && max_abs(m) > 0.0) return true;
        }
    }
    return false;
}

Matrix CouplingSet::w_at(std::size_t q, double t) const {
    if (q >= w.size()) throw std::out_of_range("CouplingSet::w_at: bad mode index");
    if (time_dependent()) return w_t.at(q)(t);
    return w[q];
}

Matrix CouplingSet::w_static(std::size_t q) const {
    if (q >= w.size()) throw std::out_of_range("CouplingSet::w_static: bad mode index");
    return w[q];
}

void CouplingSet::validate(Index lattice_dim, double temperature) const {
    for (std::size_t q = 0; q < w.size(); ++q) {
        if (w[q].rows() != lattice_dim || w[q].cols() != lattice_dim) {
            throw std::invalid_argument("CouplingSet: w_q dimension mismatch with lattice");
        }
    }
    if (time_dependent() && w_t.size() != w.size()) {
        throw std::invalid_argument("CouplingSet: w_t must cover every mode");
    }
    if (!u.empty()) {
        if (temperature > 0.0 && has_bilinear()) {
            throw std::invalid_argument(
                "CouplingSet: bilinear u_{qq'} couplings are admissible only at zero temperature");
        }
        if (u.size() != w.size()) {
            throw std::invalid_argument("CouplingSet: u table must be n_modes x n_modes");
        }
        for (std::size_t q = 0; q < u.size(); ++q) {
            if (u[q].size() != w.size()) {
                throw std::invalid_argument("CouplingSet: u table must be n_modes x n_modes");
            }
            for (std::size_t p = 0; p < u[q].size(); ++p) {
                if (u[q][p].rows() != lattice_dim || u[q][p].cols() != lattice_dim) {
                    throw std::invalid_argument("CouplingSet: u_{qq'} dimension mismatch");
                }
                if (max_abs(u[p][q].adjoint() - u[q][p]) > 1e-12 * std::max(1.0, max_abs(u[q][p]))) {
                    throw std::invalid_argument(
                        "CouplingSet: hermiticity pairing u_{q'q}† = u_{qq'} violated");
                }
            }
        }
    }
}

// --------------------------- Pump --------------------------------------------

double PumpSpec::lattice_freq(std::size_t k) const {
    const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n_sites());
    return eps - 2.0 * J * std::cos(q);
}

std::vector<Complex> pump_lattice_displacements(const PumpSpec& pump, double eps, double J,
                                                double t) {
    const std::size_t n = pump.n_sites();
    std::vector<Complex> zeta(n, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        if (pump.zeta0[k] == Complex{0.0, 0.0}) continue;
        const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        const double freq = eps - 2.0 * J * std::cos(q);
        const Complex amp = pump.zeta0[k] * std::exp(-iunit * freq * t);
        for (std::size_t site = 0; site < n; ++site) {
            zeta[site] += amp * std::exp(iunit * q * static_cast<double>(site));
        }
    }
    return zeta;
}

std::vector<Complex> pump_phonon_drive(const std::vector<Complex>& chi,
                                       const std::vector<Complex>& zeta) {
    if (chi.size() != zeta.size()) {
        throw std::invalid_argument("pump_phonon_drive: chi and zeta must share the ring grid");
    }
    const std::size_t n = zeta.size();
    std::vector<Complex> drive(n, Complex{0.0, 0.0});
    for (std::size_t k = 0; k < n; ++k) {
        const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        Complex sum = 0.0;
        for (std::size_t site = 0; site < n; ++site) {
            sum += std::exp(-iunit * q * static_cast<double>(site)) * std::norm(zeta[site]);
        }
        drive[k] = chi[k] * sum;
    }
    return drive;
}

// --------------------------- Model -------------------------------------------

ProductSpace Model::space() const {
    std::vector<ProductSpace::Factor> f;
    f.push_back({"lattice", lattice_dim()});
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        f.push_back({"mode" + std::to_string(q), bath.modes[q].n_cut});
    }
    return ProductSpace(std::move(f));
}

Matrix Model::full_hamiltonian(double t) const {
    const ProductSpace sp = space();
    Matrix h = embed(h_lat, 0, sp);

    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        auto [b, bdag] = boson_ladder(bath.modes[q].n_cut);
        const Matrix bq = embed(b, q + 1, sp);
        const Matrix bdq = embed(bdag, q + 1, sp);
        h += bath.modes[q].omega * (bdq * bq);

        const Matrix wq = embed(couplings.w_at(q, t), 0, sp);
        h += bdq * wq + bq * wq.adjoint();

        if (!couplings.u.empty()) {
            for (std::size_t p = 0; p < bath.n_modes(); ++p) {
                const Matrix& uqp = couplings.u[q][p];
                if (uqp.size() == 0 || max_abs(uqp) == 0.0) continue;
                auto [bp, bpdag] = boson_ladder(bath.modes[p].n_cut);
                h += bdq * embed(bp, p + 1, sp) * embed(uqp, 0, sp);
            }
        }
    }
    return h;
}

Model make_model(Matrix h_lat, BathSpec bath, CouplingSet couplings) {
    if (h_lat.rows() != h_lat.cols()) {
        throw std::invalid_argument("make_model: lattice Hamiltonian must be square");
    }
    if (max_abs(h_lat - h_lat.adjoint()) > 1e-12 * std::max(1.0, max_abs(h_lat))) {
        throw std::invalid_argument("make_model: lattice Hamiltonian must be Hermitian");
    }
    if (couplings.n_modes() != bath.n_modes()) {
        throw std::invalid_argument("make_model: one coupling operator per bath mode required");
    }
    couplings.validate(h_lat.rows(), bath.temperature);
    Model m;
    m.h_lat = std::move(h_lat);
    m.bath = std::move(bath);
    m.couplings = std::move(couplings);
    return m;
}

// --------------------------- Builders ----------------------------------------

Model build_frohlich(const LatticeSpec& lattice, const BathSpec& bath, const Matrix& chi) {
    lattice.validate();
    if (chi.rows() != static_cast<Index>(bath.n_modes()) || chi.cols() != lattice.n_sites) {
        throw std::invalid_argument("build_frohlich: chi table must be n_modes x n_sites");
    }
    CouplingSet cs;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        Matrix wq = Matrix::Zero(lattice.dim(), lattice.dim());
        for (Index n = 0; n < lattice.n_sites; ++n) {
            wq += bath.modes[q].omega * chi(static_cast<Index>(q), n) * lattice.number_op(n);
        }
        cs.w.push_back(std::move(wq));
    }
    return make_model(lattice.h_lat(), bath, std::move(cs));
}

Model build_hopping_coupled(const LatticeSpec& lattice, const BathSpec& bath,
                            const std::vector<Complex>& chi1, const std::vector<Complex>& chi2) {
    lattice.validate();
    if (chi1.size() != bath.n_modes() || chi2.size() != bath.n_modes()) {
        throw std::invalid_argument("build_hopping_coupled: chi tables must cover every mode");
    }
    const Index n = lattice.n_sites;
    CouplingSet cs;
    for (std::size_t k = 0; k < bath.n_modes(); ++k) {
        const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        Matrix wq = Matrix::Zero(lattice.dim(), lattice.dim());
        for (Index s = 0; s < n; ++s) {
            const Complex phase = std::exp(iunit * q * static_cast<double>(s));
            const Index next = (s + 1) % n;
            wq += bath.modes[k].omega * phase *
                  (chi1[k] * lattice.number_op(s) +
                   chi2[k] * (lattice.transfer_op(next, s) + lattice.transfer_op(s, next)));
        }
        cs.w.push_back(std::move(wq));
    }
    return make_model(lattice.h_lat(), bath, std::move(cs));
}

Matrix hopping_coupled_commutator(const LatticeSpec& lattice, double omega, Complex chi1,
                                  Complex chi2, double q) {
    const Index n = lattice.n_sites;
    const double kappa1 =
        2.0 * std::imag(chi1 * std::conj(chi2) * (1.0 - std::exp(iunit * q)));
    const double kappa2 = -2.0 * std::norm(chi2) * std::sin(q);
    Matrix c = Matrix::Zero(lattice.dim(), lattice.dim());
    for (Index s = 0; s < n; ++s) {
        const Index next = (s + 1) % n;
        const Index prev = (s - 1 + n) % n;
        c += iunit * kappa1 * (lattice.transfer_op(s, next) - lattice.transfer_op(next, s));
        c += iunit * kappa2 * (lattice.transfer_op(prev, next) - lattice.transfer_op(next, prev));
    }
    return omega * omega * c;
}

DimerModel build_dimer(double eps, double J, const std::vector<Complex>& chi,
                       const std::vector<Complex>& lambda, const BathSpec& bath) {
    if (chi.size() != bath.n_modes() || lambda.size() != bath.n_modes()) {
        throw std::invalid_argument("build_dimer: chi and lambda must cover every mode");
    }
    DimerModel dm;
    dm.eps = eps;
    dm.J = J;
    dm.chi = chi;
    dm.lambda = lambda;

    Eigen::VectorXd eps_sites(2);
    eps_sites << eps, eps;
    Matrix jmat = Matrix::Zero(2, 2);
    jmat(0, 1) = -J;
    jmat(1, 0) = -J;
    LatticeSpec site_lattice = LatticeSpec::single_excitation(2, eps_sites, jmat);

    // Site form: w_q = chi_q (n_1 + n_2) - lambda_q (c_1† c_2 + c_2† c_1).
    CouplingSet cs_site;
    const Matrix ntot = site_lattice.total_number();
    const Matrix hop = site_lattice.transfer_op(0, 1) + site_lattice.transfer_op(1, 0);
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        cs_site.w.push_back(chi[q] * ntot - lambda[q] * hop);
    }
    dm.site_form = make_model(site_lattice.h_lat(), bath, std::move(cs_site));

    // Normal-mode form: diagonal lattice with renormalized energies/couplings.
    Matrix h_normal = Matrix::Zero(2, 2);
    h_normal(0, 0) = eps - J;
    h_normal(1, 1) = eps + J;
    CouplingSet cs_normal;
    for (std::size_t q = 0; q < bath.n_modes(); ++q) {
        Matrix wq = Matrix::Zero(2, 2);
        wq(0, 0) = chi[q] - lambda[q];
        wq(1, 1) = chi[q] + lambda[q];
        cs_normal.w.push_back(std::move(wq));
    }
    dm.normal_form = make_model(std::move(h_normal), bath, std::move(cs_normal));

    dm.lattice_rotation = Matrix::Zero(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    dm.lattice_rotation << s, s, s, -s; // columns: normal states in site coordinates
    return dm;
}

Model build_pumped_frohlich(const LatticeSpec& lattice, const BathSpec& bath,
                            const std::vector<Complex>& chi, const PumpSpec& pump) {
    lattice.validate();
    const Index n = lattice.n_sites;
    if (chi.size() != bath.n_modes() || static_cast<Index>(pump.n_sites()) != n ||
        static_cast<Index>(bath.n_modes()) != n) {
        throw std::invalid_argument(
            "build_pumped_frohlich: ring model needs one bath mode and one pump amplitude per site");
    }
    for (std::size_t k = 0; k < bath.n_modes(); ++k) {
        const std::size_t conj_k = (bath.n_modes() - k) % bath.n_modes();
        if (std::abs(bath.modes[k].omega - bath.modes[conj_k].omega) > 1e-12) {
            throw std::invalid_argument("build_pumped_frohlich: acoustic symmetry needs "
                                        "omega_q = omega_{-q}");
        }
    }
    // The lattice must realize the ring dispersion the pump solves,
    // i zeta_n' = eps zeta_n - J (zeta_{n-1} + zeta_{n+1}); at N = 2 both
    // neighbors are the same site, so the single bond carries -2J.
    {
        Matrix ring = Matrix::Zero(n, n);
        for (Index s = 0; s < n; ++s) {
            ring(s, (s + 1) % n) += -pump.J;
            ring((s + 1) % n, s) += -pump.J;
        }
        if (max_abs(lattice.hopping - ring) > 1e-12 ||
            (lattice.epsilon.array() - pump.eps).abs().maxCoeff() > 1e-12) {
            throw std::invalid_argument(
                "build_pumped_frohlich: lattice epsilon/hopping must match the pump's ring "
                "dispersion (eps, J)");
        }
    }

    CouplingSet cs;
    const double eps = pump.eps;
    const double J = pump.J;
    for (std::size_t k = 0; k < bath.n_modes(); ++k) {
        const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        const double omega = bath.modes[k].omega;

        Matrix w_static = Matrix::Zero(lattice.dim(), lattice.dim());
        for (Index s = 0; s < n; ++s) {
            const Complex chi_qn = chi[k] * std::exp(-iunit * q * static_cast<double>(s));
            w_static += omega * chi_qn * lattice.number_op(s);
        }
        cs.w.push_back(w_static);
    }
    for (std::size_t k = 0; k < bath.n_modes(); ++k) {
        const double q = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        const double omega = bath.modes[k].omega;
        const Complex chi_k = chi[k];
        LatticeSpec lat = lattice;
        PumpSpec pmp = pump;
        cs.w_t.push_back([lat, pmp, chi_k, q, omega, eps, J](double t) {
            const Index ns = lat.n_sites;
            const auto zeta = pump_lattice_displacements(pmp, eps, J, t);
            Matrix w = Matrix::Zero(lat.dim(), lat.dim());
            for (Index s = 0; s < ns; ++s) {
                const Complex chi_qn = chi_k * std::exp(-iunit * q * static_cast<double>(s));
                w += omega * chi_qn *
                     (lat.number_op(s) + zeta[s] * lat.lower_op(s).adjoint() +
                      std::conj(zeta[s]) * lat.lower_op(s));
            }
            return w;
        });
    }

    Model m = make_model(lattice.h_lat(), bath, std::move(cs));
    m.pump = pump;
    m.pump_chi = chi;
    return m;
}

std::vector<Complex> pumped_drive_at(const Model& model, double t) {
    if (!model.pump) throw std::logic_error("pumped_drive_at: model has no pump");
    const auto zeta =
        pump_lattice_displacements(*model.pump, model.pump->eps, model.pump->J, t);
    return pump_phonon_drive(model.pump_chi, zeta);
}

} // namespace cps
