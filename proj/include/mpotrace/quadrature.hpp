#pragma once

#include "mpotrace/tensor.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpotrace {

// Real symmetric tridiagonal T_K. `betas` holds the K-1 off-diagonal entries
// beta_2..beta_K; beta_1 is the norm of the start block and lives elsewhere.
struct TridiagonalMatrix {
    std::vector<double> alphas;
    std::vector<double> betas;

    [[nodiscard]] Index size() const noexcept { return alphas.size(); }
    void                validate() const;
};

// Which side of tr f(A) the Gauss rule approaches from, fixed by the sign of
// the 2K-th derivative of f on the spectrum.
enum class BoundDirection { none, lower, upper };

[[nodiscard]] std::string_view to_string(BoundDirection b);

class SpectralFunction {
public:
    SpectralFunction(std::string name, std::function<double(double)> fn, BoundDirection bound = BoundDirection::none);

    [[nodiscard]] double operator()(double x) const { return fn_(x); }
    [[nodiscard]] const std::string &name() const noexcept { return name_; }
    [[nodiscard]] BoundDirection bound_direction() const noexcept { return bound_; }

    // f(x) = x
    static SpectralFunction identity();
    // f(x) = c
    static SpectralFunction constant(double c);
    // f(x) = sum_j coeffs[j] x^j
    static SpectralFunction polynomial(std::vector<double> coeffs);
    // f(x) = -x^2 ln x^2 with f(0) = 0. Every even derivative of order >= 4
    // is positive, so Gauss estimates are lower bounds.
    static SpectralFunction entropy_kernel();

private:
    std::string                   name_;
    std::function<double(double)> fn_;
    BoundDirection                bound_;
};

struct GaussRule {
    double              estimate = 0.0;
    std::vector<double> ritz;    // ascending
    std::vector<double> weights; // squared first eigenvector components
};

// beta1^2 * e_1^T f(T) e_1 through the eigendecomposition of T.
[[nodiscard]] GaussRule gauss_quadrature(const TridiagonalMatrix &t, double beta1, const SpectralFunction &f);

// Same rule with beta1 given as a logarithm, for start blocks whose squared
// norm is outside double range.
[[nodiscard]] GaussRule gauss_quadrature_log(const TridiagonalMatrix &t, double log_beta1, const SpectralFunction &f);

enum class StopReason { none, converged, breakdown, ritz_violation, bound_monotonicity_violation, sigma_outlier, kmax };

[[nodiscard]] std::string_view to_string(StopReason r);
[[nodiscard]] StopReason       stop_reason_from_string(std::string_view s);

struct StoppingConfig {
    double                eps_conv   = 1e-10;
    Index                 window     = 3;
    double                sigma_mult = 3.0;
    std::optional<double> spectrum_floor;
    std::optional<double> spectrum_ceiling;
    BoundDirection        bound_direction = BoundDirection::none;
    // beta_{i+1} <= breakdown_tol * ||A U_i|| counts as an exact invariant subspace
    double breakdown_tol = 1e-12;

    void validate() const;
};

struct IterationRecord {
    Index               k        = 0;
    double              alpha    = 0.0;
    double              beta     = 0.0; // beta_k; beta_1 is the start norm
    double              ritz_min = 0.0;
    double              ritz_max = 0.0;
    double              estimate = 0.0;
    double              wall_ms  = 0.0;
    std::vector<double> ritz;
    std::vector<double> weights;
    Index               max_bond = 0; // largest bond of the new basis element
    // Optimization residuals of the multiply and the two sums (NaN when not computed).
    double multiply_residual = 0.0;
    double sum_residual_prev = 0.0;
    double sum_residual_self = 0.0;
};

struct QuadratureRun {
    std::vector<IterationRecord> records;
    TridiagonalMatrix            tridiagonal;
    double                       log_beta1   = 0.0;
    double                       estimate    = 0.0;
    StopReason                   stop_reason = StopReason::none;
    std::string                  function;
    double                       wall_ms = 0.0;
};

struct StopDecision {
    bool       halt   = false;
    StopReason reason = StopReason::none;
};

// Criteria in order: convergence of successive estimates, Ritz values outside
// the known spectral interval, bound monotonicity, and a sigma outlier
// against the trailing window of previous estimates.
[[nodiscard]] StopDecision check_stop(const QuadratureRun &run, const StoppingConfig &stop);

} // namespace mpotrace
