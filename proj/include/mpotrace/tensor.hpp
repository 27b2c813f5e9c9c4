#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace mpotrace {

using cplx   = std::complex<double>;
using Index  = std::size_t;
using Shape  = std::vector<Index>;
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense complex tensor.
//
// Linearization is row-major over the declared index order: the last index
// varies fastest. Every site tensor in the library depends on this, e.g. an
// MPO site with indices (out, in, left, right) viewed as a matrix with the
// first three indices as rows is a zero-copy map of the same buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<cplx> data);

    [[nodiscard]] const Shape &shape() const noexcept { return shape_; }
    [[nodiscard]] Index rank() const noexcept { return shape_.size(); }
    [[nodiscard]] Index extent(Index axis) const { return shape_.at(axis); }
    [[nodiscard]] Index size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<const cplx> data() const noexcept { return data_; }
    [[nodiscard]] std::span<cplx> data() noexcept { return data_; }

    [[nodiscard]] Index offset(std::span<const Index> idx) const;

    template<typename... I>
    cplx &operator()(I... idx) {
        const Index tmp[] = {static_cast<Index>(idx)...};
        return data_[offset(tmp)];
    }
    template<typename... I>
    const cplx &operator()(I... idx) const {
        const Index tmp[] = {static_cast<Index>(idx)...};
        return data_[offset(tmp)];
    }

    // Same buffer, new extents. The product of extents must not change.
    [[nodiscard]] Tensor reshape(Shape shape) const &;
    [[nodiscard]] Tensor reshape(Shape shape) &&;

    // result axis k is input axis perm[k]
    [[nodiscard]] Tensor permute(std::span<const Index> perm) const;
    [[nodiscard]] Tensor permute(std::initializer_list<Index> perm) const {
        return permute(std::span<const Index>(perm.begin(), perm.size()));
    }

    [[nodiscard]] Tensor conj() const;
    [[nodiscard]] double norm() const;
    [[nodiscard]] bool all_finite() const;

    // Rows are the first `row_rank` indices, columns the rest.
    [[nodiscard]] Eigen::Map<Matrix> as_matrix(Index row_rank);
    [[nodiscard]] Eigen::Map<const Matrix> as_matrix(Index row_rank) const;
    [[nodiscard]] static Tensor from_matrix(const Matrix &m, Shape shape);

    Tensor &operator*=(cplx c);
    Tensor &operator+=(const Tensor &other);
    Tensor &operator-=(const Tensor &other);

    friend Tensor operator*(cplx c, Tensor t) { return t *= c; }
    friend Tensor operator+(Tensor a, const Tensor &b) { return a += b; }
    friend Tensor operator-(Tensor a, const Tensor &b) { return a -= b; }

private:
    Shape             shape_;
    std::vector<cplx> data_;
};

[[nodiscard]] Index shape_product(std::span<const Index> shape);

using AxisPair = std::pair<Index, Index>;

// Sum over the paired indices. The result carries the free indices of `a`
// followed by the free indices of `b`, each in declared order.
[[nodiscard]] Tensor contract(const Tensor &a, const Tensor &b, std::span<const AxisPair> axes);
[[nodiscard]] inline Tensor contract(const Tensor &a, const Tensor &b, std::initializer_list<AxisPair> axes) {
    return contract(a, b, std::span<const AxisPair>(axes.begin(), axes.size()));
}

// a = u * diag(s) * v with s descending, u having orthonormal columns and v
// orthonormal rows. All singular values are kept; truncation is the caller's
// business.
struct Svd {
    Matrix          u;
    Eigen::VectorXd s;
    Matrix          v;
};
[[nodiscard]] Svd svd(const Matrix &a);
[[nodiscard]] Svd svd(const Tensor &a, Index row_rank);

// Approximate leading `rank` singular triplets from a seeded Gaussian range
// sketch refined by one power iteration. Good when the spectrum beyond
// `rank` decays quickly; the tail is not represented at all.
[[nodiscard]] Svd sketched_svd(const Matrix &a, Index rank, std::uint64_t seed);

// Thin QR: q is m x k with orthonormal columns, r is k x n upper
// triangular, k = min(m, n).
struct Qr {
    Matrix q;
    Matrix r;
};
[[nodiscard]] Qr qr(const Matrix &a);

// Thin LQ: a = l * q with q having orthonormal rows.
struct Lq {
    Matrix l;
    Matrix q;
};
[[nodiscard]] Lq lq(const Matrix &a);

struct TridiagonalEigen {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // column j belongs to values(j)
};

// Eigen-decomposition of the real symmetric tridiagonal matrix with diagonal
// `alphas` (K entries) and off-diagonal `betas` (K-1 entries).
[[nodiscard]] TridiagonalEigen symmetric_tridiag_eig(std::span<const double> alphas, std::span<const double> betas);

} // namespace mpotrace
