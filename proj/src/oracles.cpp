#include "mpotrace/oracles.hpp"

#include "mpotrace/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mpotrace {

namespace {
    void require_dense_size(Index L) {
        if(L > dense_oracle_max_sites) throw CapacityError("dense oracle is limited to " + std::to_string(dense_oracle_max_sites) + " sites");
    }

    // Adds c * (op at site i) to h; op acts on one site, diagonal or
    // off-diagonal flip.
    void add_site_term(Eigen::MatrixXd &h, Index L, Index i, double c, bool flip, bool sign) {
        if(c == 0.0) return;
        const Eigen::Index n   = h.rows();
        const Index        bit = L - 1 - i;
        for(Eigen::Index s = 0; s < n; ++s) {
            const auto   us  = static_cast<Index>(s);
            const bool   up  = ((us >> bit) & 1U) == 0U;
            const double val = sign ? (up ? c : -c) : c;
            if(flip)
                h(static_cast<Eigen::Index>(us ^ (Index{1} << bit)), s) += val;
            else
                h(s, s) += val;
        }
    }
} // namespace

Eigen::MatrixXd dense_ising(const IsingParams &p) {
    if(p.L < 1) throw DomainError("chain needs at least one site");
    require_dense_size(p.L);
    const auto      n = static_cast<Eigen::Index>(Index{1} << p.L);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for(Index i = 0; i < p.L; ++i) {
        add_site_term(h, p.L, i, p.g, false, true); // Z
        add_site_term(h, p.L, i, p.h, true, false); // X
    }
    if(p.J != 0.0)
        for(Index i = 0; i + 1 < p.L; ++i) {
            const Index mask = (Index{1} << (p.L - 1 - i)) | (Index{1} << (p.L - 2 - i));
            for(Eigen::Index s = 0; s < n; ++s) h(static_cast<Eigen::Index>(static_cast<Index>(s) ^ mask), s) += p.J;
        }
    return h;
}

Eigen::MatrixXd dense_propagator(const IsingParams &p, double t) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_ising(p));
    return es.eigenvectors() * (-t * es.eigenvalues().array()).exp().matrix().asDiagonal() * es.eigenvectors().transpose();
}

double exact_entropy_dense(const IsingParams &p) {
    require_dense_size(p.L);
    if(!(p.beta > 0.0)) throw DomainError("beta must be positive");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_ising(p), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd                                e    = es.eigenvalues();
    const double                                         emin = e.minCoeff();
    double                                               z = 0.0, mean = 0.0;
    for(Eigen::Index i = 0; i < e.size(); ++i) {
        const double de = e(i) - emin;
        const double w  = std::exp(-p.beta * de);
        z += w;
        mean += w * de;
    }
    return std::log(z) + p.beta * mean / z;
}

Eigen::VectorXd free_fermion_modes(const IsingParams &p) {
    if(p.h != 0.0) throw DomainError("the free-fermion solution requires h = 0");
    if(p.L < 1) throw DomainError("chain needs at least one site");
    // H = (i/4) sum_ab h_ab g_a g_b with Z_i = -i g_{2i-1} g_{2i} and
    // X_i X_{i+1} = -i g_{2i} g_{2i+1}.
    const auto      n = static_cast<Eigen::Index>(2 * p.L);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for(Eigen::Index i = 0; i < static_cast<Eigen::Index>(p.L); ++i) {
        h(2 * i, 2 * i + 1) = -2.0 * p.g;
        if(2 * i + 2 < n) h(2 * i + 1, 2 * i + 2) = -2.0 * p.J;
    }
    h -= Eigen::MatrixXd(h.transpose());
    const Eigen::MatrixXcd                                ih = cplx(0.0, 1.0) * h.cast<cplx>();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ih, Eigen::EigenvaluesOnly);
    // Spectrum is symmetric; the upper half holds the mode energies.
    Eigen::VectorXd modes = es.eigenvalues().tail(static_cast<Eigen::Index>(p.L)).cwiseAbs();
    std::sort(modes.begin(), modes.end());
    return modes;
}

double exact_entropy_free_fermion(const IsingParams &p) {
    if(!(p.beta > 0.0)) throw DomainError("beta must be positive");
    const Eigen::VectorXd modes = free_fermion_modes(p);
    double                s     = 0.0;
    for(double eps : modes) {
        const double x = p.beta * eps;
        s += std::log1p(std::exp(-x)) + x / (std::exp(x) + 1.0);
    }
    return s;
}

DenseLanczos dense_global_lanczos(const Eigen::MatrixXcd &a, Index kmax, double breakdown_tol) {
    if(a.rows() != a.cols()) throw DimensionError("matrix must be square");
    if(a.rows() > 4096) throw CapacityError("dense global Lanczos is limited to dimension 4096");
    if(kmax < 1) throw DomainError("kmax must be at least 1");
    const Eigen::Index n = a.rows();

    DenseLanczos     out;
    Eigen::MatrixXcd v      = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd u_prev = Eigen::MatrixXcd::Zero(n, n);
    double           beta   = v.norm();
    out.beta1               = beta;
    for(Index k = 1; k <= kmax; ++k) {
        const Eigen::MatrixXcd u = v / beta;
        Eigen::MatrixXcd       w = a * u;
        const double           norm_w = w.norm();
        if(k > 1) w -= beta * u_prev;
        const double alpha = (u.adjoint() * w).trace().real();
        w -= alpha * u;
        out.t.alphas.push_back(alpha);
        const double next = w.norm();
        if(next <= breakdown_tol * norm_w) {
            out.breakdown = true;
            break;
        }
        if(k == kmax) break;
        out.t.betas.push_back(next);
        u_prev = u;
        v      = std::move(w);
        beta   = next;
    }
    return out;
}

} // namespace mpotrace
