#pragma once

#include "mpotrace/models.hpp"
#include "mpotrace/quadrature.hpp"

#include <Eigen/Dense>

namespace mpotrace {

inline constexpr Index dense_oracle_max_sites = 14;

// Dense Ising Hamiltonian, site 1 most significant.
[[nodiscard]] Eigen::MatrixXd dense_ising(const IsingParams &p);

// exp(-t H) through the eigendecomposition of H.
[[nodiscard]] Eigen::MatrixXd dense_propagator(const IsingParams &p, double t);

// Thermal entropy by exact diagonalization; L <= 14.
[[nodiscard]] double exact_entropy_dense(const IsingParams &p);

// Thermal entropy of the transverse-field chain (h = 0) from the
// single-particle spectrum of its Majorana quadratic form.
[[nodiscard]] double exact_entropy_free_fermion(const IsingParams &p);

// Nonnegative single-particle energies of the h = 0 chain, ascending.
[[nodiscard]] Eigen::VectorXd free_fermion_modes(const IsingParams &p);

struct DenseLanczos {
    TridiagonalMatrix t;
    double            beta1     = 0.0;
    bool              breakdown = false;
};

// Global Lanczos on explicitly stored matrices started at the identity.
// Dimension <= 4096.
[[nodiscard]] DenseLanczos dense_global_lanczos(const Eigen::MatrixXcd &a, Index kmax, double breakdown_tol = 1e-12);

} // namespace mpotrace
