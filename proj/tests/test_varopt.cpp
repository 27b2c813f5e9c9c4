#include "mpotrace/errors.hpp"
#include "mpotrace/varopt.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <cmath>

using namespace mpotrace;
using mpotrace::testing::random_mpo;
using mpotrace::testing::rel_dist;

namespace {
void expect_nondecreasing(const OptimizeResult &res) {
    const auto &fit = res.fit_history;
    if(res.lossless_start) {
        EXPECT_EQ(res.sweeps, 0u);
        return;
    }
    ASSERT_FALSE(fit.empty());
    for(Index i = 1; i < fit.size(); ++i) EXPECT_GE(fit[i], fit[i - 1] - 1e-12 * fit[i - 1]) << "update " << i;
}
} // namespace

TEST(SweepOptions, Validation) {
    SweepOptions o;
    o.max_sweeps = 0;
    EXPECT_THROW(o.validate(), DomainError);
    o            = {};
    o.rel_tol    = 0.0;
    EXPECT_THROW(o.validate(), DomainError);
    EXPECT_NO_THROW(SweepOptions{}.validate());
}

TEST(MultiplyAndOptimize, IdentityOperatorIsNoWorseThanSvd) {
    const Mpo  u     = random_mpo(6, 2, 6, 1);
    const auto trunc = truncate_svd(u, 3);
    const auto res   = multiply_and_optimize(identity_mpo(6, 2), u, 3);
    EXPECT_LE(res.mpo.max_bond(), 3u);
    const double norm_u = frobenius_norm(u);
    EXPECT_LE(res.residual, trunc.error * norm_u * (1.0 + 1e-8));
    EXPECT_NEAR(res.residual, (dense(res.mpo) - dense(u)).norm(), 1e-8 * norm_u);
    expect_nondecreasing(res);
}

TEST(MultiplyAndOptimize, UnconstrainedMatchesExactProduct) {
    const Mpo a   = random_mpo(4, 2, 3, 2, 0.4);
    const Mpo u   = random_mpo(4, 2, 2, 3, -0.3);
    const auto res = multiply_and_optimize(a, u, 6);
    EXPECT_LT(rel_dist(dense(res.mpo), dense(a) * dense(u)), 1e-10);
    EXPECT_LT(res.relative_residual, 1e-10);
    EXPECT_TRUE(res.converged);
}

TEST(MultiplyAndOptimize, RandomStartReachesExactProduct) {
    const Mpo    a = random_mpo(4, 2, 2, 4);
    const Mpo    u = random_mpo(4, 2, 2, 5);
    SweepOptions o;
    o.init       = InitPolicy::random;
    o.max_sweeps = 40;
    o.rel_tol    = 1e-14;
    const auto res = multiply_and_optimize(a, u, 4, o);
    EXPECT_EQ(res.start, InitPolicy::random);
    EXPECT_LT(rel_dist(dense(res.mpo), dense(a) * dense(u)), 1e-8);
    expect_nondecreasing(res);
}

TEST(MultiplyAndOptimize, RankOneClosure) {
    const Mpo  a   = random_mpo(5, 2, 1, 6);
    const Mpo  u   = random_mpo(5, 2, 1, 7);
    const auto res = multiply_and_optimize(a, u, 1);
    EXPECT_EQ(res.mpo.max_bond(), 1u);
    EXPECT_LT(res.relative_residual, 1e-10);
}

TEST(MultiplyAndOptimize, TruncatingFitIsMonotoneAndConsistent) {
    const Mpo    a = random_mpo(6, 2, 3, 8);
    const Mpo    u = random_mpo(6, 2, 4, 9);
    SweepOptions o;
    o.init    = InitPolicy::random;
    o.rel_tol = 1e-12;
    const auto res = multiply_and_optimize(a, u, 5, o);
    EXPECT_LE(res.mpo.max_bond(), 5u);
    expect_nondecreasing(res);
    // ||T - X||^2 = ||T||^2 - ||X||^2 at the optimum; compare the cached
    // objective with the from-scratch residual.
    const Eigen::MatrixXcd t = dense(a) * dense(u);
    const double scale  = std::exp(2.0 * (a.log_scale() + u.log_scale()));
    const double cached = t.squaredNorm() - scale * res.fit_history.back();
    EXPECT_NEAR(cached, res.residual * res.residual, 1e-9 * t.squaredNorm());
    EXPECT_NEAR(res.residual, (dense(res.mpo) - t).norm(), 1e-8 * t.norm());
}

TEST(MultiplyAndOptimize, GaugeInvariantObjective) {
    const Mpo    a = random_mpo(5, 2, 3, 10);
    const Mpo    u = random_mpo(5, 2, 3, 11);
    SweepOptions o;
    o.rel_tol      = 1e-13;
    o.max_sweeps   = 30;
    const auto r1  = multiply_and_optimize(a, u, 4, o);
    const auto r2  = multiply_and_optimize(canonicalize(a, 2), canonicalize(u, 4), 4, o);
    EXPECT_NEAR(r1.residual, r2.residual, 1e-8 * frobenius_norm(exact_multiply(a, u)));
}

TEST(MultiplyAndOptimize, RejectsBadArguments) {
    const Mpo a = random_mpo(4, 2, 2, 12);
    EXPECT_THROW((void)multiply_and_optimize(a, random_mpo(5, 2, 2, 1), 4), DimensionError);
    EXPECT_THROW((void)multiply_and_optimize(a, a, 0), DomainError);
}

TEST(MultiplyAndOptimize, LargeScalesStayFinite) {
    const Mpo a = identity_mpo(400, 2);
    const Mpo u = scalar_multiply(3.0, identity_mpo(400, 2));
    SweepOptions o;
    o.compute_residual = false;
    const auto res = multiply_and_optimize(a, u, 4, o);
    EXPECT_NEAR(log_frobenius_norm(res.mpo), std::log(3.0) + 200.0 * std::log(2.0), 1e-9);
}

TEST(SumAndOptimize, EmptyTermsTruncatesInput) {
    const Mpo    u     = random_mpo(6, 2, 6, 13);
    const auto   trunc = truncate_svd(u, 3);
    const auto   res   = sum_and_optimize(u, {}, 3);
    const double nu    = frobenius_norm(u);
    EXPECT_LE(res.residual, trunc.error * nu * (1.0 + 1e-8));
    EXPECT_GE(res.residual, 0.9 * trunc.error * nu);
}

TEST(SumAndOptimize, CancellationGivesZero) {
    const Mpo                  u = random_mpo(5, 2, 3, 14);
    const std::vector<SumTerm> terms{{-1.0, std::cref(u)}};
    for(Index dnew : {1u, 3u, 8u}) {
        const auto res = sum_and_optimize(u, terms, dnew);
        EXPECT_LT(dense(res.mpo).norm(), 1e-10 * dense(u).norm());
        EXPECT_LT(res.residual, 1e-10 * dense(u).norm());
    }
}

TEST(SumAndOptimize, ThreeTermsMatchExactAdd) {
    const Mpo                  u  = random_mpo(4, 2, 2, 15, 0.1);
    const Mpo                  t1 = random_mpo(4, 2, 2, 16, -0.5);
    const Mpo                  t2 = random_mpo(4, 2, 3, 17, 0.9);
    const Mpo                  t3 = random_mpo(4, 2, 1, 18);
    const cplx                 c1(0.5, 0.5), c2(-1.2, 0.0), c3(0.0, 2.0);
    const std::vector<SumTerm> terms{{c1, std::cref(t1)}, {c2, std::cref(t2)}, {c3, std::cref(t3)}};
    const Eigen::MatrixXcd     ref = dense(u) + c1 * dense(t1) + c2 * dense(t2) + c3 * dense(t3);
    for(auto init : {InitPolicy::automatic, InitPolicy::random}) {
        SweepOptions o;
        o.init       = init;
        o.max_sweeps = 40;
        o.rel_tol    = 1e-14;
        const auto res = sum_and_optimize(u, terms, 8, o);
        EXPECT_LT(rel_dist(dense(res.mpo), ref), init == InitPolicy::random ? 1e-8 : 1e-10);
        expect_nondecreasing(res);
    }
}

TEST(SumAndOptimize, TruncatingFitIsConsistent) {
    const Mpo                  u  = random_mpo(6, 2, 4, 19);
    const Mpo                  t1 = random_mpo(6, 2, 4, 20, 0.3);
    const std::vector<SumTerm> terms{{cplx(-0.7, 0.2), std::cref(t1)}};
    SweepOptions               o;
    o.init    = InitPolicy::random;
    o.rel_tol = 1e-12;
    const auto res = sum_and_optimize(u, terms, 4, o);
    expect_nondecreasing(res);
    const Eigen::MatrixXcd ref = dense(u) + cplx(-0.7, 0.2) * dense(t1);
    EXPECT_NEAR(res.residual, (dense(res.mpo) - ref).norm(), 1e-8 * ref.norm());
}

TEST(MultiplyAndOptimize, ZipUpStartIsLosslessWhenUncapped) {
    const Mpo  a   = random_mpo(5, 2, 3, 23);
    const Mpo  u   = random_mpo(5, 2, 2, 24);
    const auto res = multiply_and_optimize(a, u, 6);
    EXPECT_EQ(res.start, InitPolicy::zip_up);
    EXPECT_TRUE(res.lossless_start);
    EXPECT_LT(rel_dist(dense(res.mpo), dense(a) * dense(u)), 1e-11);
}

TEST(MultiplyAndOptimize, InitPoliciesAgreeOnTruncatedFit) {
    const Mpo    a = random_mpo(6, 2, 3, 25);
    const Mpo    u = random_mpo(6, 2, 3, 26);
    SweepOptions o;
    o.rel_tol    = 1e-13;
    o.max_sweeps = 60;
    std::vector<double> residuals;
    for(auto init : {InitPolicy::zip_up, InitPolicy::truncated_exact, InitPolicy::random}) {
        o.init         = init;
        const auto res = multiply_and_optimize(a, u, 4, o);
        EXPECT_FALSE(res.lossless_start);
        expect_nondecreasing(res);
        residuals.push_back(res.residual);
    }
    // Different starts may land in different local optima, but none should
    // be far from the best.
    const double best = *std::min_element(residuals.begin(), residuals.end());
    for(double r : residuals) EXPECT_LT(r, 1.05 * best);
}

TEST(SumAndOptimize, ShapeMismatchThrows) {
    const Mpo                  u = random_mpo(4, 2, 2, 21);
    const Mpo                  v = random_mpo(5, 2, 2, 22);
    const std::vector<SumTerm> terms{{1.0, std::cref(v)}};
    EXPECT_THROW((void)sum_and_optimize(u, terms, 4), DimensionError);
}
