#pragma once

#include "mpotrace/tensor.hpp"

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace mpotrace {

// Open-boundary matrix product state.
//
// Site k has indices (physical, left bond, right bond); the outer bonds of the
// chain are 1. The represented vector is exp(log_scale) times the chain
// contraction, with site 1 as the most significant digit of the flat index.
class Mps {
public:
    Mps() = default;
    explicit Mps(std::vector<Tensor> sites, double log_scale = 0.0);

    [[nodiscard]] Index length() const noexcept { return sites_.size(); }
    [[nodiscard]] Index phys_dim() const { return sites_.front().extent(0); }
    [[nodiscard]] const std::vector<Tensor> &sites() const noexcept { return sites_; }
    [[nodiscard]] const Tensor &site(Index k) const { return sites_.at(k); }
    [[nodiscard]] double log_scale() const noexcept { return log_scale_; }
    [[nodiscard]] std::vector<Index> bond_dims() const;
    [[nodiscard]] Index max_bond() const;

private:
    std::vector<Tensor> sites_;
    double              log_scale_ = 0.0;
};

// Open-boundary matrix product operator.
//
// Site k has indices (physical out, physical in, left bond, right bond). The
// represented matrix is exp(log_scale) times the chain contraction; row and
// column indices are the out and in indices with site 1 most significant.
class Mpo {
public:
    Mpo() = default;
    explicit Mpo(std::vector<Tensor> sites, double log_scale = 0.0);

    [[nodiscard]] Index length() const noexcept { return sites_.size(); }
    [[nodiscard]] Index phys_dim() const { return sites_.front().extent(0); }
    [[nodiscard]] const std::vector<Tensor> &sites() const noexcept { return sites_; }
    [[nodiscard]] const Tensor &site(Index k) const { return sites_.at(k); }
    [[nodiscard]] double log_scale() const noexcept { return log_scale_; }

    // Internal bond extents, L-1 of them.
    [[nodiscard]] std::vector<Index> bond_dims() const;
    [[nodiscard]] Index max_bond() const;

    [[nodiscard]] Mpo with_log_scale(double log_scale) const &;
    [[nodiscard]] Mpo with_log_scale(double log_scale) &&;

    [[nodiscard]] std::vector<Tensor> release() && { return std::move(sites_); }

private:
    std::vector<Tensor> sites_;
    double              log_scale_ = 0.0;
};

inline constexpr Index unbounded = std::numeric_limits<Index>::max();

[[nodiscard]] Mpo identity_mpo(Index length, Index phys_dim);

// Reinterpret each site (out, in, l, r) as (out * d + in, l, r). The buffer is
// shared layout-wise, so this is a relabeling and the bonds are unchanged.
[[nodiscard]] Mps vectorize(const Mpo &m);
[[nodiscard]] Mpo unvectorize(const Mps &v);

// <a, b> = sum conj(a_i) b_i by left-to-right transfer contraction.
[[nodiscard]] cplx inner_product(const Mps &a, const Mps &b);
// <a, b> = tr(a^H b).
[[nodiscard]] cplx inner_product(const Mpo &a, const Mpo &b);

// Same contraction, but the magnitude is returned as a logarithm so the
// result survives chains whose norm is outside double range.
struct LogOverlap {
    double log_abs = -std::numeric_limits<double>::infinity();
    cplx   phase{1.0, 0.0};
};
[[nodiscard]] LogOverlap log_inner_product(const Mpo &a, const Mpo &b);
// tr(a^H op b) without forming the product op * b.
[[nodiscard]] LogOverlap log_sandwich(const Mpo &a, const Mpo &op, const Mpo &b);

[[nodiscard]] double frobenius_norm(const Mpo &a);
[[nodiscard]] double log_frobenius_norm(const Mpo &a);

[[nodiscard]] Mpo scalar_multiply(cplx c, const Mpo &a);
[[nodiscard]] Mpo adjoint(const Mpo &a);

// dense(a) + coeff * dense(b); internal bonds add up.
[[nodiscard]] Mpo exact_add(const Mpo &a, const Mpo &b, cplx coeff = 1.0);
// dense(a) * dense(b); internal bonds multiply.
[[nodiscard]] Mpo exact_multiply(const Mpo &a, const Mpo &b);
// (a + a^H) / 2
[[nodiscard]] Mpo hermitian_part(const Mpo &a);

// Mixed-canonical gauge around `center` (0-based). Sites to the left are
// left isometries over (out, in, left); sites to the right are right
// isometries over (out, in, right). The center is normalized and the norm is
// moved into log_scale, so site data stays O(1) regardless of chain length.
[[nodiscard]] Mpo canonicalize(const Mpo &a, Index center);

struct Truncation {
    Mpo    mpo;
    double error = 0.0; // sqrt(sum of discarded s^2) / ||a||
};

// Single right-to-left SVD sweep from left-canonical form. At every bond the
// kept rank is at most `dmax` and drops singular values at or below
// eps * ||s||. The result is left in right-canonical form.
[[nodiscard]] Truncation truncate_svd(const Mpo &a, Index dmax, double eps = 0.0);

// Norm computed from a canonicalization sweep rather than a transfer
// contraction: accurate to rounding relative to the result itself, which
// matters when `a` is a small difference of large operands.
[[nodiscard]] double canonical_norm(const Mpo &a);

// Dense reconstruction for tests and oracles, d^L <= 2^14.
inline constexpr Index dense_capacity = Index{1} << 14;
[[nodiscard]] Eigen::MatrixXcd dense(const Mpo &a);
[[nodiscard]] Eigen::VectorXcd dense(const Mps &a);

// Exact MPO of a dense d^L x d^L matrix by successive SVD splitting.
[[nodiscard]] Mpo mpo_from_dense(const Eigen::MatrixXcd &m, Index length, Index phys_dim, double eps = 0.0);

// Site-interleaved vectorization matching vectorize(): entry
// (row, col) lands at the index whose base-d^2 digits are out_k * d + in_k.
[[nodiscard]] Eigen::VectorXcd interleaved_vec(const Eigen::MatrixXcd &m, Index length, Index phys_dim);

} // namespace mpotrace
