#include "mpotrace/errors.hpp"
#include "mpotrace/tensor.hpp"
#include "test_support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>
#include <cmath>

using namespace mpotrace;
using mpotrace::testing::random_dense;
using mpotrace::testing::random_tensor;

TEST(Tensor, ShapeAndLength) {
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(t.rank(), 3u);
    EXPECT_THROW(Tensor({2, 0}), DimensionError);
    EXPECT_THROW(Tensor({2, 2}, std::vector<cplx>(3)), DimensionError);
}

TEST(Tensor, RowMajorLinearization) {
    Tensor t({2, 3});
    t(1, 2) = 7.0;
    EXPECT_EQ(t.data()[5], cplx(7.0));
}

TEST(Tensor, PermuteAndReshapePreserveValues) {
    std::mt19937_64 rng(1);
    const Tensor    t = random_tensor({2, 3, 4, 5}, rng);
    const Tensor    p = t.permute({2, 0, 3, 1});
    ASSERT_EQ(p.shape(), (Shape{4, 2, 5, 3}));
    for(Index a = 0; a < 2; ++a)
        for(Index b = 0; b < 3; ++b)
            for(Index c = 0; c < 4; ++c)
                for(Index d = 0; d < 5; ++d) EXPECT_EQ(p(c, a, d, b), t(a, b, c, d));
    EXPECT_NEAR(p.norm(), t.norm(), 1e-12);
    const Tensor r = t.reshape({6, 20});
    EXPECT_EQ(r.size(), t.size());
    EXPECT_THROW((void)t.reshape({7, 3}), DimensionError);
    EXPECT_THROW((void)t.permute({0, 0, 1, 2}), DimensionError);
}

TEST(Contract, IdentityLeavesTensorUnchanged) {
    std::mt19937_64 rng(2);
    Tensor          id({2, 2});
    id(0, 0) = id(1, 1) = 1.0;
    const Tensor x = random_tensor({2, 5}, rng);
    const Tensor y = contract(id, x, {{1, 0}});
    ASSERT_EQ(y.shape(), x.shape());
    for(Index i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Contract, HandComputed) {
    const Tensor a({2, 2}, {1.0, 2.0, 3.0, 4.0});
    const Tensor b({2, 1}, {1.0, 1.0});
    const Tensor c = contract(a, b, {{1, 0}});
    ASSERT_EQ(c.shape(), (Shape{2, 1}));
    EXPECT_EQ(c(0, 0), cplx(3.0));
    EXPECT_EQ(c(1, 0), cplx(7.0));
}

TEST(Contract, MatchesLoopReference) {
    std::mt19937_64 rng(3);
    const Tensor    a = random_tensor({3, 4, 5}, rng);
    const Tensor    b = random_tensor({5, 4}, rng);
    const Tensor    c = contract(a, b, {{2, 0}, {1, 1}});
    ASSERT_EQ(c.shape(), (Shape{3}));
    for(Index i = 0; i < 3; ++i) {
        cplx ref = 0.0;
        for(Index j = 0; j < 4; ++j)
            for(Index k = 0; k < 5; ++k) ref += a(i, j, k) * b(k, j);
        EXPECT_NEAR(std::abs(c(i) - ref), 0.0, 1e-12);
    }
}

TEST(Contract, ExtentMismatchThrows) {
    EXPECT_THROW((void)contract(Tensor({2, 3}), Tensor({4, 2}), {{1, 0}}), DimensionError);
}

TEST(Contract, Bilinear) {
    std::mt19937_64 rng(4);
    const Tensor    a = random_tensor({3, 4, 2}, rng);
    const Tensor    b = random_tensor({3, 4, 2}, rng);
    const Tensor    c = random_tensor({4, 2, 5}, rng);
    const cplx      alpha(0.7, -1.3);
    const Tensor    lhs = contract(alpha * a + b, c, {{1, 0}, {2, 1}});
    const Tensor    rhs = alpha * contract(a, c, {{1, 0}, {2, 1}}) + contract(b, c, {{1, 0}, {2, 1}});
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(Svd, Identity) {
    const auto f = svd(Matrix(Matrix::Identity(3, 3)));
    for(int i = 0; i < 3; ++i) EXPECT_NEAR(f.s(i), 1.0, 1e-14);
}

TEST(Svd, RankOne) {
    const auto u = mpotrace::testing::random_dense(5, 1, 5);
    const auto v = mpotrace::testing::random_dense(4, 1, 6);
    const auto f = svd(Matrix(u * v.transpose()));
    int        above = 0;
    for(int i = 0; i < f.s.size(); ++i) above += f.s(i) > 1e-12 * f.s(0);
    EXPECT_EQ(above, 1);
}

TEST(Svd, ReconstructsAndIsOrthonormal) {
    const Matrix a = mpotrace::testing::random_dense(6, 4, 7);
    const auto   f = svd(a);
    EXPECT_LT((f.u * f.s.asDiagonal() * f.v - a).norm() / a.norm(), 1e-12);
    EXPECT_LT((f.u.adjoint() * f.u - Matrix::Identity(4, 4)).norm(), 1e-12);
    EXPECT_LT((f.v * f.v.adjoint() - Matrix::Identity(4, 4)).norm(), 1e-12);
    for(int i = 1; i < f.s.size(); ++i) EXPECT_GE(f.s(i - 1), f.s(i));
}

TEST(Svd, TruncationErrorIsTailNorm) {
    const Matrix a = mpotrace::testing::random_dense(8, 6, 8);
    const auto   f = svd(a);
    for(int r = 1; r < 6; ++r) {
        const Matrix approx = f.u.leftCols(r) * f.s.head(r).asDiagonal() * f.v.topRows(r);
        EXPECT_NEAR((a - approx).norm(), f.s.tail(6 - r).norm(), 1e-12 * a.norm());
    }
}

TEST(Svd, NonFiniteThrows) {
    Matrix a = Matrix::Identity(2, 2);
    a(0, 1)  = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW((void)svd(a), NumericError);
}

TEST(Qr, Identity) {
    const auto f = qr(Matrix(Matrix::Identity(3, 3)));
    EXPECT_LT((f.q.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 1e-14);
    EXPECT_LT((f.r.cwiseAbs() - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(Qr, OrthonormalAndReconstructs) {
    const Matrix a = mpotrace::testing::random_dense(5, 3, 9);
    const auto   f = qr(a);
    EXPECT_LT((f.q.adjoint() * f.q - Matrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LT((f.q * f.r - a).norm() / a.norm(), 1e-12);
}

TEST(Qr, DiagonalCase) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0)  = 2.0;
    a(1, 1)  = 3.0;
    const auto f = qr(a);
    EXPECT_NEAR(std::abs(f.r(0, 0)), 2.0, 1e-14);
    EXPECT_NEAR(std::abs(f.r(1, 1)), 3.0, 1e-14);
    a(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW((void)qr(a), NumericError);
}

TEST(Lq, OrthonormalRows) {
    const Matrix a = mpotrace::testing::random_dense(3, 7, 10);
    const auto   f = lq(a);
    EXPECT_LT((f.q * f.q.adjoint() - Matrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LT((f.l * f.q - a).norm() / a.norm(), 1e-12);
}

TEST(TridiagEig, SingleEntry) {
    const std::vector<double> a{5.0};
    const auto                e = symmetric_tridiag_eig(a, {});
    EXPECT_EQ(e.values(0), 5.0);
    EXPECT_EQ(std::abs(e.vectors(0, 0)), 1.0);
}

TEST(TridiagEig, TwoByTwo) {
    const std::vector<double> a{0.0, 0.0}, b{1.0};
    const auto                e = symmetric_tridiag_eig(a, b);
    EXPECT_NEAR(e.values(0), -1.0, 1e-14);
    EXPECT_NEAR(e.values(1), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0 / std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0 / std::sqrt(2.0), 1e-14);
}

TEST(TridiagEig, EmptyAndMismatched) {
    EXPECT_THROW((void)symmetric_tridiag_eig({}, {}), EmptyInputError);
    const std::vector<double> a{1.0, 2.0}, b{1.0, 1.0};
    EXPECT_THROW((void)symmetric_tridiag_eig(a, b), DimensionError);
}

TEST(TridiagEig, MatchesGeneralEigensolver) {
    std::mt19937_64                  rng(11);
    std::normal_distribution<double> nd;
    const int                        K = 8;
    std::vector<double>              a(K), b(K - 1);
    for(auto &x : a) x = nd(rng);
    for(auto &x : b) x = std::abs(nd(rng));
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(K, K);
    for(int i = 0; i < K; ++i) t(i, i) = a[i];
    for(int i = 0; i + 1 < K; ++i) t(i, i + 1) = t(i + 1, i) = b[i];

    const auto e = symmetric_tridiag_eig(a, b);
    // Independent route: nonsymmetric solver, sorted.
    Eigen::EigenSolver<Eigen::MatrixXd> general(t, false);
    std::vector<double>                 ref;
    for(int i = 0; i < K; ++i) {
        EXPECT_NEAR(general.eigenvalues()(i).imag(), 0.0, 1e-10);
        ref.push_back(general.eigenvalues()(i).real());
    }
    std::sort(ref.begin(), ref.end());
    const double tn = t.norm();
    for(int i = 0; i < K; ++i) EXPECT_NEAR(e.values(i), ref[static_cast<size_t>(i)], 1e-10 * tn);
    EXPECT_LT((t * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-10 * tn);
    EXPECT_LT((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(K, K)).norm(), 1e-10);
}

TEST(SketchedSvd, RecoversLowRank) {
    const Matrix a = random_dense(60, 8, 1) * random_dense(8, 90, 2);
    const Svd    f = sketched_svd(a, 12, 3);
    const Svd    g = svd(a);
    for(Eigen::Index j = 0; j < 8; ++j) EXPECT_NEAR(f.s(j), g.s(j), 1e-10 * g.s(0));
    const Matrix rec = f.u * f.s.cast<cplx>().asDiagonal() * f.v;
    EXPECT_LT((rec - a).norm(), 1e-10 * a.norm());
    EXPECT_LT((f.u.adjoint() * f.u - Matrix::Identity(f.u.cols(), f.u.cols())).norm(), 1e-12);
}

TEST(SketchedSvd, DeterministicPerSeed) {
    const Matrix a = random_dense(40, 50, 4);
    EXPECT_EQ(sketched_svd(a, 5, 9).s, sketched_svd(a, 5, 9).s);
}
