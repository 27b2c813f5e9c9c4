#pragma once

#include "mpotrace/mpo.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <limits>
#include <span>
#include <vector>

namespace mpotrace {

// Initial guess for the sweeping fit.
//   automatic:       zip_up for products; for sums the truncated exact result
//                    if the exact bonds are <= 4 * dnew, random otherwise
//   truncated_exact: form the exact result and SVD-truncate it
//   zip_up:          products only; contract site by site from the left and
//                    SVD-truncate every new bond immediately
//   random:          random tensors with the target bond profile
// When the start loses nothing beyond compress_eps the sweeps are skipped.
enum class InitPolicy { automatic, truncated_exact, zip_up, random };

struct SweepOptions {
    Index      max_sweeps = 8;
    double     rel_tol    = 1e-9; // stop once a half sweep gains less than rel_tol of the captured norm
    InitPolicy init       = InitPolicy::automatic;
    // Evaluate ||target - result|| at the end. Requires forming the exact
    // target, which is expensive for products at large bond dimension.
    bool          compute_residual = true;
    // Singular values below compress_eps * ||s|| are dropped from the result.
    double        compress_eps = 1e-13;
    std::uint64_t seed         = 0x5eedULL;

    void validate() const;
};

struct OptimizeResult {
    Mpo    mpo;
    double residual          = std::numeric_limits<double>::quiet_NaN(); // ||target - mpo||_F
    double relative_residual = std::numeric_limits<double>::quiet_NaN(); // residual / ||target||_F
    bool       converged         = false;
    Index      sweeps            = 0;
    InitPolicy start             = InitPolicy::automatic; // policy actually used
    bool       lossless_start    = false;
    // Squared norm of the optimal local tensor after every site update. The
    // objective is ||target||^2 minus this value (in units of the target's
    // leading scale), so the sequence is nondecreasing.
    std::vector<double> fit_history;
};

// Approximates a * u with every bond <= dnew by single-site alternating least
// squares in mixed-canonical gauge.
[[nodiscard]] OptimizeResult multiply_and_optimize(const Mpo &a, const Mpo &u, Index dnew, const SweepOptions &opts = {});

struct SumTerm {
    cplx                             coeff;
    std::reference_wrapper<const Mpo> mpo;
};

// Approximates u + sum_k coeff_k * term_k with every bond <= dnew.
[[nodiscard]] OptimizeResult sum_and_optimize(const Mpo &u, std::span<const SumTerm> terms, Index dnew, const SweepOptions &opts = {});

} // namespace mpotrace
