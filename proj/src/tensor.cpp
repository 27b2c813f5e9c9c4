#include "mpotrace/tensor.hpp"

#include "mpotrace/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <random>
#include <numeric>
#include <string>

namespace mpotrace {

Index shape_product(std::span<const Index> shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

namespace {
    void check_shape(const Shape &shape) {
        for(auto e : shape)
            if(e == 0) throw DimensionError("tensor extents must be at least 1");
    }
} // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), cplx{0.0, 0.0});
}

Tensor::Tensor(Shape shape, std::vector<cplx> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if(data_.size() != shape_product(shape_))
        throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match shape volume " +
                             std::to_string(shape_product(shape_)));
}

Index Tensor::offset(std::span<const Index> idx) const {
    if(idx.size() != shape_.size()) throw DimensionError("index rank does not match tensor rank");
    Index off = 0;
    for(Index k = 0; k < idx.size(); ++k) {
        if(idx[k] >= shape_[k]) throw DimensionError("tensor index out of range");
        off = off * shape_[k] + idx[k];
    }
    return off;
}

Tensor Tensor::reshape(Shape shape) const & {
    Tensor copy = *this;
    return std::move(copy).reshape(std::move(shape));
}

Tensor Tensor::reshape(Shape shape) && {
    if(shape_product(shape) != data_.size()) throw DimensionError("reshape changes the number of elements");
    return Tensor(std::move(shape), std::move(data_));
}

Tensor Tensor::permute(std::span<const Index> perm) const {
    const Index r = rank();
    if(perm.size() != r) throw DimensionError("permutation rank mismatch");
    std::vector<bool> seen(r, false);
    for(auto p : perm) {
        if(p >= r || seen[p]) throw DimensionError("invalid permutation");
        seen[p] = true;
    }
    bool identity = true;
    for(Index k = 0; k < r; ++k) identity = identity && perm[k] == k;
    if(identity) return *this;

    std::vector<Index> in_stride(r, 1);
    for(Index k = r; k-- > 1;) in_stride[k - 1] = in_stride[k] * shape_[k];

    Shape              out_shape(r);
    std::vector<Index> stride(r);
    for(Index k = 0; k < r; ++k) {
        out_shape[k] = shape_[perm[k]];
        stride[k]    = in_stride[perm[k]];
    }

    std::vector<cplx> out(data_.size());
    std::vector<Index> counter(r, 0);
    Index              src = 0;
    // Innermost axis handled as a strided run.
    const Index inner_n = out_shape[r - 1];
    const Index inner_s = stride[r - 1];
    for(Index dst = 0; dst < out.size(); dst += inner_n) {
        const cplx *p = data_.data() + src;
        for(Index j = 0; j < inner_n; ++j) out[dst + j] = p[j * inner_s];
        for(Index k = r - 1; k-- > 0;) {
            ++counter[k];
            src += stride[k];
            if(counter[k] < out_shape[k]) break;
            src -= stride[k] * out_shape[k];
            counter[k] = 0;
        }
    }
    return Tensor(std::move(out_shape), std::move(out));
}

Tensor Tensor::conj() const {
    Tensor out = *this;
    for(auto &x : out.data_) x = std::conj(x);
    return out;
}

double Tensor::norm() const {
    double s = 0;
    for(const auto &x : data_) s += std::norm(x);
    return std::sqrt(s);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx &x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); });
}

Eigen::Map<Matrix> Tensor::as_matrix(Index row_rank) {
    if(row_rank > rank()) throw DimensionError("row rank exceeds tensor rank");
    const Index rows = shape_product(std::span<const Index>(shape_).first(row_rank));
    const Index cols = rows == 0 ? 0 : data_.size() / rows;
    return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const Matrix> Tensor::as_matrix(Index row_rank) const {
    if(row_rank > rank()) throw DimensionError("row rank exceeds tensor rank");
    const Index rows = shape_product(std::span<const Index>(shape_).first(row_rank));
    const Index cols = rows == 0 ? 0 : data_.size() / rows;
    return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Tensor Tensor::from_matrix(const Matrix &m, Shape shape) {
    if(shape_product(shape) != static_cast<Index>(m.size())) throw DimensionError("matrix size does not match shape");
    return Tensor(std::move(shape), std::vector<cplx>(m.data(), m.data() + m.size()));
}

Tensor &Tensor::operator*=(cplx c) {
    for(auto &x : data_) x *= c;
    return *this;
}

Tensor &Tensor::operator+=(const Tensor &other) {
    if(other.shape_ != shape_) throw DimensionError("tensor sum with mismatched shapes");
    for(Index i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor &Tensor::operator-=(const Tensor &other) {
    if(other.shape_ != shape_) throw DimensionError("tensor difference with mismatched shapes");
    for(Index i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor contract(const Tensor &a, const Tensor &b, std::span<const AxisPair> axes) {
    std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
    for(const auto &[ia, ib] : axes) {
        if(ia >= a.rank() || ib >= b.rank()) throw DimensionError("contracted axis out of range");
        if(used_a[ia] || used_b[ib]) throw DimensionError("axis contracted twice");
        if(a.extent(ia) != b.extent(ib))
            throw DimensionError("contracted extents differ: " + std::to_string(a.extent(ia)) + " vs " + std::to_string(b.extent(ib)));
        used_a[ia] = used_b[ib] = true;
    }

    std::vector<Index> perm_a, perm_b;
    Shape              out_shape;
    for(Index k = 0; k < a.rank(); ++k)
        if(!used_a[k]) {
            perm_a.push_back(k);
            out_shape.push_back(a.extent(k));
        }
    const Index free_a = perm_a.size();
    for(const auto &pr : axes) perm_a.push_back(pr.first);
    for(const auto &pr : axes) perm_b.push_back(pr.second);
    for(Index k = 0; k < b.rank(); ++k)
        if(!used_b[k]) {
            perm_b.push_back(k);
            out_shape.push_back(b.extent(k));
        }

    const Tensor pa = a.permute(perm_a);
    const Tensor pb = b.permute(perm_b);
    const auto   ma = pa.as_matrix(free_a);
    const auto   mb = pb.as_matrix(axes.size());

    if(out_shape.empty()) out_shape.push_back(1);
    Tensor out(out_shape);
    auto   mo = out.as_matrix(free_a);
    mo.noalias() = ma * mb;
    return out;
}

namespace {
    void require_finite(const Matrix &a, const char *what) {
        if(!a.allFinite()) throw NumericError(std::string(what) + ": non-finite input");
    }
} // namespace

namespace {
    Svd square_svd(const Matrix &a) {
        const Eigen::MatrixXcd          col = a;
        Eigen::BDCSVD<Eigen::MatrixXcd> solver(col, Eigen::ComputeThinU | Eigen::ComputeThinV);
        Svd                             out;
        out.u = solver.matrixU();
        out.s = solver.singularValues();
        out.v = solver.matrixV().adjoint();
        return out;
    }
} // namespace

Svd svd(const Matrix &a) {
    require_finite(a, "svd");
    // Strongly rectangular input is reduced to its triangular factor first.
    if(a.rows() > 2 * a.cols()) {
        auto [q, r] = qr(a);
        Svd f       = square_svd(r);
        f.u         = q * f.u;
        return f;
    }
    if(a.cols() > 2 * a.rows()) {
        auto [l, q] = lq(a);
        Svd f       = square_svd(l);
        f.v         = f.v * q;
        return f;
    }
    return square_svd(a);
}

Svd svd(const Tensor &a, Index row_rank) { return svd(Matrix(a.as_matrix(row_rank))); }

Svd sketched_svd(const Matrix &a, Index rank, std::uint64_t seed) {
    require_finite(a, "sketched_svd");
    const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(rank), std::min(a.rows(), a.cols()));
    if(k < 1) throw DomainError("sketch rank must be at least 1");
    std::mt19937_64                  rng(seed);
    std::normal_distribution<double> nd;
    Matrix                           omega(a.cols(), k);
    for(Eigen::Index i = 0; i < omega.rows(); ++i)
        for(Eigen::Index j = 0; j < k; ++j) omega(i, j) = cplx(nd(rng), nd(rng));
    Matrix q = qr(Matrix(a * omega)).q;
    q        = qr(Matrix(a.adjoint() * q)).q;
    q        = qr(Matrix(a * q)).q;
    Svd f    = svd(Matrix(q.adjoint() * a));
    f.u      = q * f.u;
    return f;
}

Qr qr(const Matrix &a) {
    require_finite(a, "qr");
    const auto                                 m = a.rows(), n = a.cols();
    const auto                                 k = std::min(m, n);
    Eigen::HouseholderQR<Eigen::MatrixXcd>     solver{Eigen::MatrixXcd(a)};
    Qr                                         out;
    out.q = solver.householderQ() * Eigen::MatrixXcd::Identity(m, k);
    out.r = solver.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    return out;
}

Lq lq(const Matrix &a) {
    auto [q, r] = qr(Matrix(a.adjoint()));
    return Lq{Matrix(r.adjoint()), Matrix(q.adjoint())};
}

TridiagonalEigen symmetric_tridiag_eig(std::span<const double> alphas, std::span<const double> betas) {
    if(alphas.empty()) throw EmptyInputError("tridiagonal eigenproblem needs at least one diagonal entry");
    if(betas.size() + 1 != alphas.size()) throw DimensionError("tridiagonal matrix needs exactly K-1 off-diagonal entries");
    for(double b : betas)
        if(!std::isfinite(b)) throw NumericError("non-finite off-diagonal entry");
    for(double a : alphas)
        if(!std::isfinite(a)) throw NumericError("non-finite diagonal entry");

    const auto      k = static_cast<Eigen::Index>(alphas.size());
    Eigen::VectorXd diag(k), sub(std::max<Eigen::Index>(k - 1, 1));
    for(Eigen::Index i = 0; i < k; ++i) diag(i) = alphas[static_cast<Index>(i)];
    for(Eigen::Index i = 0; i + 1 < k; ++i) sub(i) = betas[static_cast<Index>(i)];
    if(k == 1) return {diag, Eigen::MatrixXd::Identity(1, 1)};

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub.head(k - 1), Eigen::ComputeEigenvectors);
    if(solver.info() != Eigen::Success) throw NumericError("tridiagonal eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

} // namespace mpotrace
