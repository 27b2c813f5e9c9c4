#include "mpotrace/models.hpp"

#include "mpotrace/errors.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace mpotrace {

void IsingParams::validate() const {
    if(L < 2) throw DomainError("the chain needs at least two sites");
    if(!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive");
    if(!std::isfinite(J) || !std::isfinite(g) || !std::isfinite(h)) throw DomainError("couplings must be finite");
}

void ThermalOptions::validate() const {
    if(dbond < 1) throw DomainError("bond cap must be at least 1");
    if(!(dtau > 0.0) || !std::isfinite(dtau)) throw DomainError("dtau must be positive");
    if(!(alarm > 0.0)) throw DomainError("alarm threshold must be positive");
    if(!(eps >= 0.0)) throw DomainError("eps must be nonnegative");
}

namespace {
    using Mat2 = Eigen::Matrix2cd;

    Mat2 pauli_x() { return (Mat2() << 0, 1, 1, 0).finished(); }
    Mat2 pauli_z() { return (Mat2() << 1, 0, 0, -1).finished(); }

    Eigen::Matrix4cd kron(const Mat2 &a, const Mat2 &b) {
        Eigen::Matrix4cd out;
        for(int i = 0; i < 2; ++i)
            for(int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        return out;
    }

    void put(Tensor &site, Index l, Index r, const Mat2 &op) {
        for(Index p = 0; p < 2; ++p)
            for(Index t = 0; t < 2; ++t) site(p, t, l, r) = op(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(t));
    }
} // namespace

Mpo ising_mpo(const IsingParams &p) {
    if(p.L < 2) throw DomainError("the chain needs at least two sites");
    const Mat2 id    = Mat2::Identity();
    const Mat2 x     = pauli_x();
    const Mat2 local = p.g * pauli_z() + p.h * x;

    // Lower-triangular operator matrix; the left boundary picks row 2 and
    // the right boundary column 0.
    Tensor bulk({2, 2, 3, 3});
    put(bulk, 0, 0, id);
    put(bulk, 1, 0, x);
    put(bulk, 2, 0, local);
    put(bulk, 2, 1, p.J * x);
    put(bulk, 2, 2, id);

    std::vector<Tensor> sites;
    for(Index k = 0; k < p.L; ++k) {
        const Index l = k == 0 ? 1 : 3;
        const Index r = k + 1 == p.L ? 1 : 3;
        Tensor      s({2, 2, l, r});
        for(Index i = 0; i < l; ++i)
            for(Index j = 0; j < r; ++j) {
                const Index bi = k == 0 ? 2 : i;
                const Index bj = k + 1 == p.L ? 0 : j;
                for(Index a = 0; a < 2; ++a)
                    for(Index b = 0; b < 2; ++b) s(a, b, i, j) = bulk(a, b, bi, bj);
            }
        sites.push_back(std::move(s));
    }
    return Mpo(std::move(sites));
}

namespace {
    // exp(-t h) for the bond term between sites i and i+1; single-site fields
    // are shared between the two bonds touching a site.
    Eigen::Matrix4cd bond_gate(const IsingParams &p, Index i, double t) {
        const double     wl = i == 0 ? 1.0 : 0.5;
        const double     wr = i + 2 == p.L ? 1.0 : 0.5;
        const Mat2       local = p.g * pauli_z() + p.h * pauli_x();
        const Mat2       id    = Mat2::Identity();
        Eigen::Matrix4cd h     = p.J * kron(pauli_x(), pauli_x());
        h += wl * kron(local, id);
        h += wr * kron(id, local);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
        return es.eigenvectors() * (-t * es.eigenvalues().array()).exp().matrix().asDiagonal() * es.eigenvectors().adjoint();
    }

    // One layer of commuting gates on the bonds i = parity, parity + 2, ...
    Mpo gate_layer(const IsingParams &p, Index parity, double t) {
        std::vector<Tensor> sites(p.L);
        for(Index k = 0; k < p.L; ++k) {
            Tensor id({2, 2, 1, 1});
            id(0, 0, 0, 0) = id(1, 1, 0, 0) = 1.0;
            sites[k]                        = std::move(id);
        }
        for(Index i = parity; i + 1 < p.L; i += 2) {
            const Eigen::Matrix4cd g = bond_gate(p, i, t);
            // (p1 p2, t1 t2) -> (p1 t1, p2 t2)
            Matrix m(4, 4);
            for(Index p1 = 0; p1 < 2; ++p1)
                for(Index p2 = 0; p2 < 2; ++p2)
                    for(Index t1 = 0; t1 < 2; ++t1)
                        for(Index t2 = 0; t2 < 2; ++t2)
                            m(static_cast<Eigen::Index>(p1 * 2 + t1), static_cast<Eigen::Index>(p2 * 2 + t2)) =
                                g(static_cast<Eigen::Index>(p1 * 2 + p2), static_cast<Eigen::Index>(t1 * 2 + t2));
            const auto f    = svd(m);
            Index      rank = 0;
            for(Eigen::Index j = 0; j < f.s.size(); ++j)
                if(f.s(j) > 1e-15 * f.s(0)) rank = static_cast<Index>(j) + 1;
            const auto   re   = static_cast<Eigen::Index>(rank);
            const Matrix sq   = f.s.head(re).cwiseSqrt().cast<cplx>().asDiagonal();
            const Matrix left = f.u.leftCols(re) * sq;
            const Matrix right = sq * f.v.topRows(re);
            sites[i]           = Tensor::from_matrix(left, {2, 2, 1, rank});
            sites[i + 1]       = Tensor::from_matrix(right, {rank, 2, 2, 1}).permute({1, 2, 0, 3});
        }
        return Mpo(std::move(sites));
    }
} // namespace

ThermalState thermal_half_state(const IsingParams &p, const ThermalOptions &opts) {
    p.validate();
    opts.validate();
    const auto t0 = std::chrono::steady_clock::now();

    ThermalState out;
    const double half = 0.5 * p.beta;
    out.steps         = static_cast<Index>(std::ceil(half / opts.dtau - 1e-12));
    out.steps         = std::max<Index>(out.steps, 1);
    out.tau           = half / static_cast<double>(out.steps);

    // e^{-tau H} ~ E(tau/2) O(tau) E(tau/2); neighbouring half layers merge.
    const Mpo even_half = gate_layer(p, 0, 0.5 * out.tau);
    const Mpo even_full = gate_layer(p, 0, out.tau);
    const Mpo odd_full  = gate_layer(p, 1, out.tau);

    Mpo  m     = identity_mpo(p.L, 2);
    auto apply = [&](const Mpo &layer) {
        auto t = truncate_svd(exact_multiply(layer, m), opts.dbond, opts.eps);
        out.layer_errors.push_back(t.error);
        if(t.error > opts.alarm) {
            std::ostringstream msg;
            msg << "layer " << out.layer_errors.size() << " truncation error " << t.error << " exceeds " << opts.alarm;
            out.warnings.push_back(msg.str());
        }
        m = std::move(t.mpo);
    };

    apply(even_half);
    for(Index s = 0; s < out.steps; ++s) {
        apply(odd_full);
        apply(s + 1 == out.steps ? even_half : even_full);
    }
    out.mpo     = std::move(m);
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Mpo thermal_state_full(const Mpo &half, Index dmax) {
    Mpo        rho   = truncate_svd(exact_multiply(half, half), dmax, 1e-14).mpo;
    const auto trace = inner_product(identity_mpo(half.length(), half.phys_dim()), rho);
    if(!(trace.real() > 0.0)) throw NumericError("thermal state has non-positive trace");
    return rho.with_log_scale(rho.log_scale() - std::log(trace.real()));
}

Mpo random_hermitian_mpo(Index L, Index d, Index dbond, std::uint64_t seed) {
    if(L < 1) throw DimensionError("need at least one site");
    if(d < 2) throw DimensionError("physical dimension must be at least 2");
    if(dbond < 1) throw DomainError("bond cap must be at least 1");
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> nd;

    if(dbond == 1 || L == 1) {
        std::vector<Tensor> sites;
        for(Index k = 0; k < L; ++k) {
            Eigen::MatrixXcd g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
            for(Eigen::Index i = 0; i < g.rows(); ++i)
                for(Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = cplx(nd(rng), nd(rng));
            const Eigen::MatrixXcd herm = 0.5 * (g + g.adjoint());
            Tensor                 s({d, d, 1, 1});
            for(Index i = 0; i < d; ++i)
                for(Index j = 0; j < d; ++j) s(i, j, 0, 0) = herm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            sites.push_back(std::move(s));
        }
        return Mpo(std::move(sites));
    }

    const Index         inner = dbond / 2;
    std::vector<Tensor> sites;
    for(Index k = 0; k < L; ++k) {
        const Index l = k == 0 ? 1 : inner;
        const Index r = k + 1 == L ? 1 : inner;
        Tensor      s({d, d, l, r});
        for(auto &x : s.data()) x = cplx(nd(rng), nd(rng)) / std::sqrt(static_cast<double>(d * inner));
        sites.push_back(std::move(s));
    }
    const Mpo m(std::move(sites));
    return exact_add(m, adjoint(m));
}

} // namespace mpotrace
