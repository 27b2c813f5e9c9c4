#pragma once

#include "mpotrace/mpo.hpp"
#include "mpotrace/quadrature.hpp"
#include "mpotrace/varopt.hpp"

#include <functional>

namespace mpotrace {

// Called after every iteration with the fresh record and the basis element
// U_k it belongs to. Must not throw for the run to continue.
using IterationCallback = std::function<void(const IterationRecord &, const Mpo &)>;

struct LanczosOptions {
    Index          kmax = 50;
    Index          dmax = 100;
    StoppingConfig stop;
    SweepOptions   sweep{.compute_residual = false};
    IterationCallback on_iteration;
};

// Global Lanczos in MPO arithmetic with Gauss quadrature of tr f(a).
//
// `start` must be orthogonal up to scale (the identity in practice); it is
// normalized to U_1. Bond caps follow D <- min(dmax, D * D_a) before the
// multiplication and D <- min(dmax, D + D_U) before each orthogonalization.
// tr(U_k^H a U_k) with an imaginary part above 1e-8 of its modulus raises
// HermiticityError.
// A stop on a violated criterion reports the previous estimate.
[[nodiscard]] QuadratureRun global_lanczos(const Mpo &a, const Mpo &start, const SpectralFunction &f, const LanczosOptions &opts);

// Same with the identity start.
[[nodiscard]] QuadratureRun global_lanczos(const Mpo &a, const SpectralFunction &f, const LanczosOptions &opts);

struct EntropyResult {
    double              entropy = 0.0;
    double              log_z2  = 0.0; // ln tr(m^H m)
    std::vector<double> entropy_per_iteration;
    QuadratureRun       run;
};

// von Neumann entropy of rho = m^H m / tr(m^H m) for Hermitian m. The
// quadrature runs on m itself with the squared kernel -x^2 ln x^2; the
// options' stop configuration is completed with a zero spectrum floor and the
// lower bound direction unless already set.
[[nodiscard]] EntropyResult entropy_from_half_state(const Mpo &m, const LanczosOptions &opts);

// tr m from a single Lanczos step at the identity: beta_1^2 alpha_1.
[[nodiscard]] double trace_of_positive(const Mpo &m, Index dmax = unbounded, const SweepOptions &sweep = {.compute_residual = false});

// Sign (+1 or -1) of d^{2K}/dx^{2K} (-x^2 ln x^2) for K > 1, which is
// 4 (2K-3)! / x^{2K-2}.
[[nodiscard]] int entropy_derivative_sign(Index K);

// A positive 2K-th derivative makes Gauss estimates lower bounds.
[[nodiscard]] BoundDirection bound_from_derivative_sign(int sign);

} // namespace mpotrace
