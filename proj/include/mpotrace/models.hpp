#pragma once

#include "mpotrace/mpo.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpotrace {

// H = J sum_i X_i X_{i+1} + g sum_i Z_i + h sum_i X_i on an open chain.
struct IsingParams {
    Index  L    = 10;
    double J    = 1.0;
    double g    = 1.0;
    double h    = 0.0;
    double beta = 0.1;

    void validate() const;
};

// Bond dimension 3, Hermitian exactly.
[[nodiscard]] Mpo ising_mpo(const IsingParams &p);

struct ThermalOptions {
    Index  dbond = 20;
    double dtau  = 0.01;
    // Truncation at a single layer beyond this relative error is reported.
    double alarm = 1e-6;
    double eps   = 1e-13;

    void validate() const;
};

struct ThermalState {
    Mpo                      mpo;
    Index                    steps = 0; // Trotter steps of size tau
    double                   tau   = 0.0;
    std::vector<double>      layer_errors;
    std::vector<std::string> warnings;
    double                   wall_ms = 0.0;
};

// M ~ exp(-(beta/2) H) by second-order even/odd Trotter layers applied to the
// identity, truncated after every layer. The site data carries unit
// Frobenius norm and log_scale holds ln ||M||_F.
[[nodiscard]] ThermalState thermal_half_state(const IsingParams &p, const ThermalOptions &opts = {});

// rho(beta) = M M / tr(M M) from the half state, recompressed to at most
// `dmax` (lossless by default).
[[nodiscard]] Mpo thermal_state_full(const Mpo &half, Index dmax = unbounded);

// Hermitian MPO with internal bonds <= dbond, reproducible from `seed`.
// For dbond 1 every site is a random Hermitian matrix; otherwise a random
// chain of bond dbond / 2 is added to its adjoint.
[[nodiscard]] Mpo random_hermitian_mpo(Index L, Index d, Index dbond, std::uint64_t seed);

} // namespace mpotrace
