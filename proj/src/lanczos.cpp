#include "mpotrace/lanczos.hpp"

#include "mpotrace/errors.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <limits>

namespace mpotrace {

namespace {
    using Clock = std::chrono::steady_clock;

    double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

    Index cap_product(Index dmax, Index d, Index da) {
        const Index p = (da != 0 && d > unbounded / da) ? unbounded : d * da;
        return std::min(dmax, p);
    }

    Index cap_sum(Index dmax, Index d, Index du) { return std::min(dmax, d > unbounded - du ? unbounded : d + du); }

    cplx from_log(const LogOverlap &o) { return std::isfinite(o.log_abs) ? std::exp(o.log_abs) * o.phase : cplx(0.0); }

    bool is_violation(StopReason r) {
        return r == StopReason::ritz_violation || r == StopReason::bound_monotonicity_violation || r == StopReason::sigma_outlier;
    }
} // namespace

QuadratureRun global_lanczos(const Mpo &a, const Mpo &start, const SpectralFunction &f, const LanczosOptions &opts) {
    if(opts.kmax < 1) throw DomainError("kmax must be at least 1");
    if(opts.dmax < 1) throw DomainError("dmax must be at least 1");
    opts.stop.validate();
    opts.sweep.validate();
    if(a.length() != start.length() || a.phys_dim() != start.phys_dim()) throw DimensionError("operator and start block differ in shape");
    if(start.max_bond() > opts.dmax) throw DomainError("dmax is below the bond dimension of the start block");

    const auto t_run = Clock::now();
    // Lanczos runs on the raw chain; every alpha, beta and Ritz value is
    // rescaled by exp(s_a) afterwards.
    const double s_a   = a.log_scale();
    const double scale = std::exp(s_a);
    const Mpo    a_raw = a.with_log_scale(0.0);
    const Index  d_a   = a.max_bond();

    QuadratureRun run;
    run.function = f.name();

    double log_beta = log_frobenius_norm(start);
    if(!std::isfinite(log_beta)) throw DomainError("start block has zero norm");
    run.log_beta1 = log_beta;

    Mpo                v = start;
    std::optional<Mpo> u_prev;
    double             beta_raw = 0.0; // beta_k of the raw chain, k >= 2
    Index              dcap     = start.max_bond();

    for(Index k = 1; k <= opts.kmax; ++k) {
        const auto t0 = Clock::now();
        Mpo        u  = v.with_log_scale(v.log_scale() - log_beta);

        dcap              = cap_product(opts.dmax, dcap, d_a);
        auto   mult       = multiply_and_optimize(a_raw, u, dcap, opts.sweep);
        v                 = std::move(mult.mpo);
        double log_norm_w = log_frobenius_norm(v);
        double res_prev   = std::numeric_limits<double>::quiet_NaN();
        if(u_prev) {
            dcap                       = cap_sum(opts.dmax, dcap, u_prev->max_bond());
            const std::vector<SumTerm> terms{{cplx(-beta_raw), std::cref(*u_prev)}};
            auto                       s = sum_and_optimize(v, terms, dcap, opts.sweep);
            v                            = std::move(s.mpo);
            res_prev                     = s.residual;
        }

        // tr(U^H A U) is real for Hermitian A whatever the truncation did to V.
        const cplx sandwich = from_log(log_sandwich(u, a_raw, u));
        if(std::abs(sandwich.imag()) > 1e-8 * std::abs(sandwich) + 1e-12 * std::exp(log_norm_w))
            throw HermiticityError("alpha_" + std::to_string(k) + " has imaginary part " + std::to_string(sandwich.imag() * scale) +
                                   "; the operator is not Hermitian");
        const double alpha_raw = from_log(log_inner_product(u, v)).real();

        dcap                             = cap_sum(opts.dmax, dcap, u.max_bond());
        const std::vector<SumTerm> terms{{cplx(-alpha_raw), std::cref(u)}};
        auto                       s_self = sum_and_optimize(v, terms, dcap, opts.sweep);
        v                                 = std::move(s_self.mpo);

        run.tridiagonal.alphas.push_back(alpha_raw * scale);
        if(k >= 2) run.tridiagonal.betas.push_back(beta_raw * scale);

        const auto rule = gauss_quadrature_log(run.tridiagonal, run.log_beta1, f);

        IterationRecord rec;
        rec.k                 = k;
        rec.alpha             = alpha_raw * scale;
        rec.beta              = k == 1 ? std::exp(run.log_beta1) : beta_raw * scale;
        rec.ritz              = rule.ritz;
        rec.weights           = rule.weights;
        rec.ritz_min          = rule.ritz.front();
        rec.ritz_max          = rule.ritz.back();
        rec.estimate          = rule.estimate;
        rec.max_bond          = u.max_bond();
        rec.multiply_residual = mult.residual;
        rec.sum_residual_prev = res_prev;
        rec.sum_residual_self = s_self.residual;

        // beta_{k+1}; negligible against ||A U_k|| means an invariant subspace.
        const double log_beta_next = log_frobenius_norm(v);
        const bool   breakdown =
            !std::isfinite(log_beta_next) || log_beta_next <= std::log(opts.stop.breakdown_tol) + log_norm_w;

        rec.wall_ms = ms_since(t0);
        run.records.push_back(rec);
        spdlog::debug("k={} alpha={:.12g} beta={:.6g} estimate={:.15g} bond={} ({:.0f} ms)", k, rec.alpha, rec.beta, rec.estimate,
                      rec.max_bond, rec.wall_ms);

        StopReason reason = StopReason::none;
        if(breakdown) {
            reason = StopReason::breakdown;
        } else if(auto dec = check_stop(run, opts.stop); dec.halt) {
            reason = dec.reason;
        } else if(k == opts.kmax) {
            reason = StopReason::kmax;
        }

        if(opts.on_iteration) opts.on_iteration(run.records.back(), u);

        if(reason != StopReason::none) {
            run.stop_reason = reason;
            run.estimate    = rec.estimate;
            if(is_violation(reason) && run.records.size() >= 2) run.estimate = run.records[run.records.size() - 2].estimate;
            break;
        }

        log_beta = log_beta_next;
        beta_raw = std::exp(log_beta_next);
        u_prev   = std::move(u);
    }
    run.wall_ms = ms_since(t_run);
    return run;
}

QuadratureRun global_lanczos(const Mpo &a, const SpectralFunction &f, const LanczosOptions &opts) {
    return global_lanczos(a, identity_mpo(a.length(), a.phys_dim()), f, opts);
}

EntropyResult entropy_from_half_state(const Mpo &m, const LanczosOptions &opts) {
    const double log_norm = log_frobenius_norm(m);
    if(!std::isfinite(log_norm)) throw NumericError("tr(m^H m) is not positive");

    EntropyResult out;
    out.log_z2 = 2.0 * log_norm;

    // With ||m||_F = 1 the eigenvalues x of m satisfy sum x^2 = 1 and
    // S = -sum x^2 ln x^2 directly.
    const Mpo unit = m.with_log_scale(m.log_scale() - log_norm);

    LanczosOptions o = opts;
    if(!o.stop.spectrum_floor) o.stop.spectrum_floor = 0.0;
    if(o.stop.bound_direction == BoundDirection::none) o.stop.bound_direction = bound_from_derivative_sign(entropy_derivative_sign(2));

    const auto       kernel = SpectralFunction::entropy_kernel();
    SpectralFunction f("entropy",
                       [kernel](double x) {
                           if(x <= 0.0) {
                               spdlog::warn("non-positive Ritz value {:.3e} in the entropy run; clamped to 1e-300", x);
                               x = 1e-300;
                           }
                           return kernel(x);
                       },
                       BoundDirection::lower);

    out.run     = global_lanczos(unit, f, o);
    out.entropy = out.run.estimate;
    for(const auto &r : out.run.records) out.entropy_per_iteration.push_back(r.estimate);
    return out;
}

double trace_of_positive(const Mpo &m, Index dmax, const SweepOptions &sweep) {
    LanczosOptions o;
    o.kmax  = 1;
    o.dmax  = dmax;
    o.sweep = sweep;
    return global_lanczos(m, SpectralFunction::identity(), o).estimate;
}

int entropy_derivative_sign(Index K) {
    if(K <= 1) throw DomainError("the derivative sign is only established for K > 1");
    return +1;
}

BoundDirection bound_from_derivative_sign(int sign) {
    if(sign > 0) return BoundDirection::lower;
    if(sign < 0) return BoundDirection::upper;
    return BoundDirection::none;
}

} // namespace mpotrace
