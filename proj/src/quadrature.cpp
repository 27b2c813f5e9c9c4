#include "mpotrace/quadrature.hpp"

#include "mpotrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mpotrace {

void TridiagonalMatrix::validate() const {
    if(alphas.empty()) throw EmptyInputError("tridiagonal matrix is empty");
    if(betas.size() + 1 != alphas.size()) throw DimensionError("tridiagonal matrix needs K-1 off-diagonal entries");
    for(double a : alphas)
        if(!std::isfinite(a)) throw NumericError("non-finite diagonal entry");
    for(double b : betas)
        if(!std::isfinite(b)) throw NumericError("non-finite off-diagonal entry");
}

std::string_view to_string(BoundDirection b) {
    switch(b) {
        case BoundDirection::lower: return "lower";
        case BoundDirection::upper: return "upper";
        default: return "none";
    }
}

SpectralFunction::SpectralFunction(std::string name, std::function<double(double)> fn, BoundDirection bound)
    : name_(std::move(name)), fn_(std::move(fn)), bound_(bound) {
    if(!fn_) throw DomainError("spectral function is empty");
}

SpectralFunction SpectralFunction::identity() {
    return {"identity", [](double x) { return x; }};
}

SpectralFunction SpectralFunction::constant(double c) {
    return {"constant", [c](double) { return c; }};
}

SpectralFunction SpectralFunction::polynomial(std::vector<double> coeffs) {
    if(coeffs.empty()) throw DomainError("polynomial needs at least one coefficient");
    std::ostringstream name;
    name << "poly:";
    for(Index j = 0; j < coeffs.size(); ++j) name << (j ? "," : "") << coeffs[j];
    return {name.str(), [c = std::move(coeffs)](double x) {
                double acc = 0.0;
                for(auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
                return acc;
            }};
}

SpectralFunction SpectralFunction::entropy_kernel() {
    return {"entropy",
            [](double x) {
                const double x2 = x * x;
                if(x2 == 0.0) return 0.0;
                return -x2 * std::log(x2);
            },
            BoundDirection::lower};
}

namespace {
    GaussRule evaluate_rule(const TridiagonalMatrix &t, double log_beta1, const SpectralFunction &f) {
        t.validate();
        const auto eig = symmetric_tridiag_eig(t.alphas, t.betas);
        GaussRule  out;
        const auto K = static_cast<Index>(eig.values.size());
        out.ritz.resize(K);
        out.weights.resize(K);
        double sum = 0.0;
        for(Index j = 0; j < K; ++j) {
            const auto   je = static_cast<Eigen::Index>(j);
            const double v1 = eig.vectors(0, je);
            out.ritz[j]     = eig.values(je);
            out.weights[j]  = v1 * v1;
            const double fv = f(out.ritz[j]);
            if(!std::isfinite(fv)) {
                std::ostringstream msg;
                msg << "f = " << f.name() << " is not finite at Ritz value " << j << " (" << out.ritz[j] << ")";
                throw EvaluationError(msg.str());
            }
            sum += out.weights[j] * fv;
        }
        out.estimate = std::exp(2.0 * log_beta1) * sum;
        return out;
    }
} // namespace

GaussRule gauss_quadrature(const TridiagonalMatrix &t, double beta1, const SpectralFunction &f) {
    if(!(beta1 > 0.0) || !std::isfinite(beta1)) throw DomainError("beta1 must be positive and finite");
    return evaluate_rule(t, std::log(beta1), f);
}

GaussRule gauss_quadrature_log(const TridiagonalMatrix &t, double log_beta1, const SpectralFunction &f) {
    if(!std::isfinite(log_beta1)) throw DomainError("log beta1 must be finite");
    return evaluate_rule(t, log_beta1, f);
}

std::string_view to_string(StopReason r) {
    switch(r) {
        case StopReason::converged: return "converged";
        case StopReason::breakdown: return "breakdown";
        case StopReason::ritz_violation: return "ritz-violation";
        case StopReason::bound_monotonicity_violation: return "bound-monotonicity-violation";
        case StopReason::sigma_outlier: return "sigma-outlier";
        case StopReason::kmax: return "kmax";
        default: return "none";
    }
}

StopReason stop_reason_from_string(std::string_view s) {
    for(auto r : {StopReason::converged, StopReason::breakdown, StopReason::ritz_violation, StopReason::bound_monotonicity_violation,
                  StopReason::sigma_outlier, StopReason::kmax, StopReason::none})
        if(to_string(r) == s) return r;
    throw DomainError("unknown stop reason: " + std::string(s));
}

void StoppingConfig::validate() const {
    if(!(eps_conv > 0.0)) throw DomainError("eps_conv must be positive");
    if(window < 2) throw DomainError("window must be at least 2");
    if(!(sigma_mult > 0.0)) throw DomainError("sigma_mult must be positive");
    if(!(breakdown_tol >= 0.0)) throw DomainError("breakdown_tol must be nonnegative");
    if(spectrum_floor && spectrum_ceiling && *spectrum_floor > *spectrum_ceiling) throw DomainError("spectrum floor exceeds ceiling");
}

StopDecision check_stop(const QuadratureRun &run, const StoppingConfig &stop) {
    const auto &rec = run.records;
    if(rec.empty()) return {};
    const auto  &cur = rec.back();
    const double g   = cur.estimate;

    if(rec.size() >= 2) {
        const double prev = rec[rec.size() - 2].estimate;
        if(std::abs(g - prev) <= stop.eps_conv * std::max(1.0, std::abs(g))) return {true, StopReason::converged};
    }

    if((stop.spectrum_floor && cur.ritz_min < *stop.spectrum_floor) || (stop.spectrum_ceiling && cur.ritz_max > *stop.spectrum_ceiling))
        return {true, StopReason::ritz_violation};

    if(rec.size() >= 2 && stop.bound_direction != BoundDirection::none) {
        const double prev = rec[rec.size() - 2].estimate;
        if((stop.bound_direction == BoundDirection::lower && g < prev) || (stop.bound_direction == BoundDirection::upper && g > prev))
            return {true, StopReason::bound_monotonicity_violation};
    }

    if(rec.size() > stop.window) {
        const auto   first = rec.end() - 1 - static_cast<std::ptrdiff_t>(stop.window);
        const auto   last  = rec.end() - 1;
        const double n     = static_cast<double>(stop.window);
        const double mean  = std::accumulate(first, last, 0.0, [](double s, const IterationRecord &r) { return s + r.estimate; }) / n;
        double       var   = 0.0;
        for(auto it = first; it != last; ++it) var += (it->estimate - mean) * (it->estimate - mean);
        const double sigma = std::sqrt(var / (n - 1.0));
        if(sigma > 0.0 && std::abs(g - mean) > stop.sigma_mult * sigma) return {true, StopReason::sigma_outlier};
    }
    return {};
}

} // namespace mpotrace
