#include "mpotrace/errors.hpp"
#include "mpotrace/oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <cmath>

using namespace mpotrace;

namespace {
IsingParams ising(Index L, double beta, double J = 1.0, double g = 1.0, double h = 0.0) {
    return IsingParams{.L = L, .J = J, .g = g, .h = h, .beta = beta};
}

double entropy_by_probabilities(const Eigen::MatrixXd &h, double beta) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    const Eigen::ArrayXd e = es.eigenvalues().array() - es.eigenvalues().minCoeff();
    const Eigen::ArrayXd w = (-beta * e).exp();
    const Eigen::ArrayXd p = w / w.sum();
    double               s = 0.0;
    for(double x : p)
        if(x > 0.0) s -= x * std::log(x);
    return s;
}
} // namespace

TEST(DenseIsing, TwoSiteCouplingOnly) {
    Eigen::MatrixXd xx = Eigen::MatrixXd::Zero(4, 4);
    xx(0, 3) = xx(3, 0) = xx(1, 2) = xx(2, 1) = 1.0;
    EXPECT_LT((dense_ising(ising(2, 1.0, 1.0, 0.0)) - xx).norm(), 1e-15);
}

TEST(DenseIsing, TwoSiteFieldOnly) {
    const Eigen::Vector4d zz(2.0, 0.0, 0.0, -2.0);
    EXPECT_LT((dense_ising(ising(2, 1.0, 0.0, 1.0)) - Eigen::MatrixXd(zz.asDiagonal())).norm(), 1e-15);
}

TEST(DenseIsing, CapacityGuard) {
    EXPECT_THROW((void)dense_ising(ising(15, 1.0)), CapacityError);
    EXPECT_THROW((void)exact_entropy_dense(ising(15, 1.0)), CapacityError);
}

TEST(ExactEntropyDense, MatchesProbabilityForm) {
    const auto p = ising(6, 0.7, 1.0, 0.8, 0.3);
    EXPECT_NEAR(exact_entropy_dense(p), entropy_by_probabilities(dense_ising(p), p.beta), 1e-12);
}

TEST(ExactEntropyDense, InfiniteTemperature) {
    EXPECT_NEAR(exact_entropy_dense(ising(6, 1e-6)), 6.0 * std::log(2.0), 1e-6);
}

TEST(ExactEntropyDense, GroundStateLimit) {
    EXPECT_NEAR(exact_entropy_dense(ising(4, 50.0, 1.0, 1.0, 0.1)), 0.0, 1e-8);
}

TEST(ExactEntropyDense, ShiftInvariant) {
    const auto      p = ising(6, 0.5);
    Eigen::MatrixXd h = dense_ising(p);
    const double    s = entropy_by_probabilities(h, p.beta);
    h += 3.7 * Eigen::MatrixXd::Identity(h.rows(), h.cols());
    EXPECT_NEAR(entropy_by_probabilities(h, p.beta), s, 1e-10);
    EXPECT_NEAR(exact_entropy_dense(p), s, 1e-10);
}

TEST(FreeFermion, RejectsLongitudinalField) {
    EXPECT_THROW((void)exact_entropy_free_fermion(ising(8, 0.1, 1.0, 1.0, 0.2)), DomainError);
}

TEST(FreeFermion, ModesReproduceSpectrum) {
    // Many-body energies are -sum(eps) / 2 plus any subset of the modes.
    const auto            p     = ising(5, 1.0, 1.0, 0.7);
    const Eigen::VectorXd modes = free_fermion_modes(p);
    std::vector<double>   e;
    for(unsigned mask = 0; mask < (1u << 5); ++mask) {
        double x = -0.5 * modes.sum();
        for(int k = 0; k < 5; ++k)
            if(mask & (1u << k)) x += modes(k);
        e.push_back(x);
    }
    std::sort(e.begin(), e.end());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_ising(p), Eigen::EigenvaluesOnly);
    for(std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(e[i], es.eigenvalues()(static_cast<Eigen::Index>(i)), 1e-10);
}

class TwoOracles : public ::testing::TestWithParam<std::tuple<Index, double>> {};

TEST_P(TwoOracles, Agree) {
    const auto [L, beta] = GetParam();
    const auto p         = ising(L, beta);
    EXPECT_NEAR(exact_entropy_free_fermion(p), exact_entropy_dense(p), 1e-8 * exact_entropy_dense(p));
}

INSTANTIATE_TEST_SUITE_P(Grid, TwoOracles, ::testing::Combine(::testing::Values(4, 6, 8, 10), ::testing::Values(0.1, 1.0)));

TEST(TwoOracles, AgreeAtTwelveSites) {
    const auto p = ising(12, 0.1);
    EXPECT_NEAR(exact_entropy_free_fermion(p), exact_entropy_dense(p), 1e-8 * exact_entropy_dense(p));
}

TEST(FreeFermion, DecoupledLimit) {
    const auto p = ising(8, 1.0, 1.0, 0.0);
    EXPECT_NEAR(exact_entropy_free_fermion(p), exact_entropy_dense(p), 1e-8);
}

TEST(FreeFermion, LargeChainIsFinite) {
    const double s = exact_entropy_free_fermion(ising(100, 0.1));
    EXPECT_TRUE(std::isfinite(s));
    EXPECT_LT(s, 100.0 * std::log(2.0));
    EXPECT_GT(s, 0.9 * 100.0 * std::log(2.0));
}

TEST(DenseGlobalLanczos, MultipleOfIdentityBreaksDown) {
    const auto r = dense_global_lanczos(2.5 * Eigen::MatrixXcd::Identity(16, 16), 5);
    ASSERT_EQ(r.t.size(), 1u);
    EXPECT_NEAR(r.t.alphas[0], 2.5, 1e-14);
    EXPECT_TRUE(r.breakdown);
    EXPECT_NEAR(r.beta1, 4.0, 1e-14);
}

TEST(DenseGlobalLanczos, RitzContainment) {
    const Eigen::MatrixXcd x = mpotrace::testing::random_dense(32, 32, 5);
    const Eigen::MatrixXcd a = (x + x.adjoint()) / 2.0;
    const auto             r = dense_global_lanczos(a, 8);
    ASSERT_EQ(r.t.size(), 8u);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ea(a, Eigen::EigenvaluesOnly);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(8, 8);
    for(int i = 0; i < 8; ++i) t(i, i) = r.t.alphas[i];
    for(int i = 0; i < 7; ++i) t(i, i + 1) = t(i + 1, i) = r.t.betas[i];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(t, Eigen::EigenvaluesOnly);
    EXPECT_GE(et.eigenvalues().minCoeff(), ea.eigenvalues().minCoeff() - 1e-10);
    EXPECT_LE(et.eigenvalues().maxCoeff(), ea.eigenvalues().maxCoeff() + 1e-10);
}

TEST(DenseGlobalLanczos, CapacityGuard) {
    EXPECT_THROW((void)dense_global_lanczos(Eigen::MatrixXcd::Identity(4097, 4097), 1), CapacityError);
}
