#include "mpotrace/varopt.hpp"

#include "mpotrace/errors.hpp"
#include "site_ops.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace mpotrace {

using namespace detail;

void SweepOptions::validate() const {
    if(max_sweeps < 1) throw DomainError("max_sweeps must be at least 1");
    if(!(rel_tol > 0.0)) throw DomainError("rel_tol must be positive");
    if(!(compress_eps >= 0.0)) throw DomainError("compress_eps must be nonnegative");
}

namespace {

    Index saturating_mul(Index a, Index b) { return (b != 0 && a > unbounded / b) ? unbounded : a * b; }
    Index saturating_add(Index a, Index b) { return a > unbounded - b ? unbounded : a + b; }

    // Environment bookkeeping for one fit problem. The fitted chain x is kept
    // in mixed-canonical form; left(k) covers sites < k and right(k) sites > k.
    class FitTarget {
    public:
        virtual ~FitTarget() = default;

        void reset(const std::vector<Tensor> &x) {
            const Index L = x.size();
            init_boundaries(L);
            for(Index k = L - 1; k > 0; --k) advance_right(k, x[k]);
        }

        // Optimal site tensor at k given the current environments.
        [[nodiscard]] virtual Tensor local(Index k) const = 0;
        virtual void                 advance_left(Index k, const Tensor &xk)  = 0;
        virtual void                 advance_right(Index k, const Tensor &xk) = 0;
        virtual void                 set_direction(bool /*moving_right*/) {}

    protected:
        virtual void init_boundaries(Index L) = 0;
    };

    // target = a * u; environments are (x, a, u) tensors. The partial
    // contraction of an update is cached for the environment step that
    // follows it at the same site.
    class ProductTarget final : public FitTarget {
    public:
        ProductTarget(const Mpo &a, const Mpo &u) : a_(a), u_(u) {}

        Tensor local(Index k) const override {
            if(moving_right_) {
                cache(k, true);
                return contract(half_, right_[k], {{2, 2}, {4, 1}}).permute({2, 1, 0, 3}); // (x, t, p, y)
            }
            cache(k, false);
            return contract(half_, left_[k], {{1, 2}, {4, 1}}).permute({2, 0, 3, 1}); // (t, y, p, x)
        }

        void advance_left(Index k, const Tensor &xk) override {
            cache(k, true);
            const Tensor e = contract(xk.conj(), half_, {{0, 3}, {1, 1}, {2, 0}}); // (x', u', a')
            left_[k + 1]   = e.permute({0, 2, 1});
            cached_k_      = unbounded;
        }

        void advance_right(Index k, const Tensor &xk) override {
            cache(k, false);
            const Tensor e = contract(half_, xk.conj(), {{0, 1}, {2, 3}, {3, 0}}); // (u, a, x)
            right_[k - 1]  = e.permute({2, 1, 0});
            cached_k_      = unbounded;
        }

        void set_direction(bool moving_right) override { moving_right_ = moving_right; }

    protected:
        void init_boundaries(Index L) override {
            left_.assign(L, Tensor());
            right_.assign(L, Tensor());
            left_[0]      = Tensor({1, 1, 1}, {cplx(1.0)});
            right_[L - 1] = Tensor({1, 1, 1}, {cplx(1.0)});
            cached_k_     = unbounded;
        }

    private:
        // left half: (x, t, u', p, a'); right half: (t, u, y, p, a)
        void cache(Index k, bool left) const {
            if(cached_k_ == k && cached_left_ == left) return;
            if(left) {
                const Tensor t1 = contract(left_[k], u_.site(k), {{2, 2}}); // (x, a, s, t, u')
                half_           = contract(t1, a_.site(k), {{1, 2}, {2, 1}});
            } else {
                const Tensor t1 = contract(u_.site(k), right_[k], {{3, 2}}); // (s, t, u, y, a')
                half_           = contract(t1, a_.site(k), {{0, 1}, {4, 3}});
            }
            cached_k_    = k;
            cached_left_ = left;
        }

        const Mpo          &a_;
        const Mpo          &u_;
        std::vector<Tensor> left_, right_;
        bool                moving_right_ = true;
        mutable Tensor      half_;
        mutable Index       cached_k_    = unbounded;
        mutable bool        cached_left_ = true;
    };

    // target = sum_j c_j * m_j; one (x, y_j) matrix environment per operand.
    class SumTarget final : public FitTarget {
    public:
        SumTarget(std::vector<cplx> coeffs, std::vector<const Mpo *> ops) : coeffs_(std::move(coeffs)), ops_(std::move(ops)) {}

        Tensor local(Index k) const override {
            const Index d  = ops_.front()->phys_dim();
            const Index dl = static_cast<Index>(left_.front()[k].rows());
            const Index dr = static_cast<Index>(right_.front()[k].rows());
            Tensor      out({d, d, dl, dr});
            for(Index j = 0; j < ops_.size(); ++j) {
                const Tensor &m  = ops_[j]->site(k);
                const Index   ml = m.extent(2), mr = m.extent(3);
                for(Index p = 0; p < d * d; ++p) {
                    Eigen::Map<const Matrix> mp(m.data().data() + p * ml * mr, static_cast<Eigen::Index>(ml), static_cast<Eigen::Index>(mr));
                    Eigen::Map<Matrix>       op(out.data().data() + p * dl * dr, static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dr));
                    Matrix                   tmp = left_[j][k] * mp;
                    op.noalias() += coeffs_[j] * (tmp * right_[j][k].transpose());
                }
            }
            return out;
        }

        void advance_left(Index k, const Tensor &xk) override {
            const Index xl = xk.extent(2), xr = xk.extent(3);
            for(Index j = 0; j < ops_.size(); ++j) {
                const Tensor &m  = ops_[j]->site(k);
                const Index   ml = m.extent(2), mr = m.extent(3);
                Matrix        next = Matrix::Zero(static_cast<Eigen::Index>(xr), static_cast<Eigen::Index>(mr));
                for(Index p = 0; p < xk.size() / (xl * xr); ++p) {
                    Eigen::Map<const Matrix> xp(xk.data().data() + p * xl * xr, static_cast<Eigen::Index>(xl), static_cast<Eigen::Index>(xr));
                    Eigen::Map<const Matrix> mp(m.data().data() + p * ml * mr, static_cast<Eigen::Index>(ml), static_cast<Eigen::Index>(mr));
                    Matrix                   tmp = left_[j][k] * mp;
                    next.noalias() += xp.adjoint() * tmp;
                }
                left_[j][k + 1] = std::move(next);
            }
        }

        void advance_right(Index k, const Tensor &xk) override {
            const Index xl = xk.extent(2), xr = xk.extent(3);
            for(Index j = 0; j < ops_.size(); ++j) {
                const Tensor &m  = ops_[j]->site(k);
                const Index   ml = m.extent(2), mr = m.extent(3);
                Matrix        next = Matrix::Zero(static_cast<Eigen::Index>(xl), static_cast<Eigen::Index>(ml));
                for(Index p = 0; p < xk.size() / (xl * xr); ++p) {
                    Eigen::Map<const Matrix> xp(xk.data().data() + p * xl * xr, static_cast<Eigen::Index>(xl), static_cast<Eigen::Index>(xr));
                    Eigen::Map<const Matrix> mp(m.data().data() + p * ml * mr, static_cast<Eigen::Index>(ml), static_cast<Eigen::Index>(mr));
                    Matrix                   tmp = xp.conjugate() * right_[j][k];
                    next.noalias() += tmp * mp.transpose();
                }
                right_[j][k - 1] = std::move(next);
            }
        }

    protected:
        void init_boundaries(Index L) override {
            left_.assign(ops_.size(), std::vector<Matrix>(L));
            right_.assign(ops_.size(), std::vector<Matrix>(L));
            for(Index j = 0; j < ops_.size(); ++j) {
                left_[j][0]      = Matrix::Ones(1, 1);
                right_[j][L - 1] = Matrix::Ones(1, 1);
            }
        }

    private:
        std::vector<cplx>                coeffs_;
        std::vector<const Mpo *>         ops_;
        std::vector<std::vector<Matrix>> left_, right_;
    };

    struct SweepOutcome {
        std::vector<Tensor> sites;
        std::vector<double> fit_history;
        Index               sweeps    = 0;
        bool                converged = false;
    };

    double squared_norm(const Tensor &t) {
        const double n = t.norm();
        return n * n;
    }

    // x must be right-canonical around site 0 on entry.
    SweepOutcome run_sweeps(FitTarget &target, std::vector<Tensor> x, const SweepOptions &opts) {
        const Index  L = x.size();
        const Index  d = x.front().extent(0);
        SweepOutcome out;
        target.reset(x);

        if(L == 1) {
            x[0] = target.local(0);
            out.fit_history.push_back(squared_norm(x[0]));
            out.sweeps    = 1;
            out.converged = true;
            out.sites     = std::move(x);
            return out;
        }

        for(Index sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
            target.set_direction(true);
            for(Index k = 0; k < L; ++k) {
                // On later sweeps site 0 is already optimal from the previous return pass.
                if(sweep == 1 || k > 0) {
                    x[k] = target.local(k);
                    out.fit_history.push_back(squared_norm(x[k]));
                }
                if(k + 1 < L) {
                    auto [q, r] = qr(Matrix(x[k].as_matrix(3)));
                    x[k]        = Tensor::from_matrix(q, {d, d, x[k].extent(2), static_cast<Index>(q.cols())});
                    x[k + 1]    = absorb_left(r, x[k + 1]);
                    target.advance_left(k, x[k]);
                }
            }
            const double half_fit = out.fit_history.back();
            target.set_direction(false);
            for(Index k = L - 1;; --k) {
                if(k + 1 < L) {
                    x[k] = target.local(k);
                    out.fit_history.push_back(squared_norm(x[k]));
                }
                if(k == 0) break;
                auto [l, q] = lq(right_matrix(x[k]));
                x[k]        = site_from_right_matrix(q, d, x[k].extent(3));
                x[k - 1]    = absorb_right(x[k - 1], l);
                target.advance_right(k, x[k]);
            }
            out.sweeps         = sweep;
            const double fit   = out.fit_history.back();
            if(fit - half_fit <= opts.rel_tol * fit) {
                out.converged = true;
                break;
            }
        }
        out.sites = std::move(x);
        return out;
    }

    std::vector<Tensor> random_start(Index L, Index d, const std::vector<Index> &bonds, std::uint64_t seed) {
        std::mt19937_64                  rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<Tensor>              sites;
        for(Index k = 0; k < L; ++k) {
            const Index l = k == 0 ? 1 : bonds[k - 1];
            const Index r = k + 1 == L ? 1 : bonds[k];
            Tensor      s({d, d, l, r});
            for(auto &v : s.data()) v = cplx(normal(rng), normal(rng));
            sites.push_back(std::move(s));
        }
        return sites;
    }

    // Bond profile for a random start: the cap, the exact operation's bonds
    // and the largest rank a cut of the chain can support.
    std::vector<Index> start_profile(Index L, Index d, Index dnew, const std::vector<Index> &exact_bonds) {
        std::vector<Index> out(L - 1);
        for(Index b = 0; b + 1 < L; ++b) {
            Index reach_l = 1, reach_r = 1;
            for(Index k = 0; k <= b && reach_l < dnew; ++k) reach_l = saturating_mul(reach_l, d * d);
            for(Index k = b + 1; k < L && reach_r < dnew; ++k) reach_r = saturating_mul(reach_r, d * d);
            out[b] = std::min({dnew, exact_bonds[b], reach_l, reach_r});
        }
        return out;
    }

    Index max_of(const std::vector<Index> &v) { return v.empty() ? 1 : *std::max_element(v.begin(), v.end()); }

    // Contracts a * u from the left, compressing every new bond by SVD. The
    // operands are right-canonicalized first so the discarded weight is
    // measured against a reasonably conditioned remainder.
    struct ZipUp {
        Mpo  mpo;
        bool lossless = true; // no singular value above eps * ||s|| was cut by dnew
    };

    ZipUp zip_up(const Mpo &a_in, const Mpo &u_in, Index dnew, double eps) {
        const Mpo   a = canonicalize(a_in, 0);
        const Mpo   u = canonicalize(u_in, 0);
        const Index L = a.length();
        const Index d = a.phys_dim();
        ZipUp       out;
        double      ls = a.log_scale() + u.log_scale();

        std::vector<Tensor> sites;
        Tensor              carry({1, 1, 1}, {cplx(1.0)}); // (r, a, u)
        for(Index k = 0; k < L; ++k) {
            const Tensor t1 = contract(carry, u.site(k), {{2, 2}});           // (r, a, s, t, u')
            const Tensor t2 = contract(t1, a.site(k), {{1, 2}, {2, 1}});      // (r, t, u', p, a')
            Tensor       th = t2.permute({3, 1, 0, 4, 2});                    // (p, t, r, a', u')
            const Index  r  = th.extent(2);
            if(k + 1 == L) {
                sites.push_back(std::move(th).reshape({d, d, r, 1}));
                break;
            }
            const Index  ar = th.extent(3), ur = th.extent(4);
            const Matrix mk = th.as_matrix(3);
            // Far more columns and rows than the cap: only the leading part is
            // computed, and the result can no longer claim to be lossless.
            const Index  oversample = 10;
            const bool   sketch = dnew != unbounded && static_cast<Index>(std::min(mk.rows(), mk.cols())) > 2 * (dnew + oversample);
            const auto   f      = sketch ? sketched_svd(mk, dnew + oversample, 0x5eedULL + k) : svd(mk);
            if(sketch) out.lossless = false;
            const double total = sketch ? mk.norm() : f.s.norm();
            Index        keep  = 0;
            for(Eigen::Index j = 0; j < f.s.size(); ++j)
                if(f.s(j) > eps * total) keep = static_cast<Index>(j) + 1;
            keep = std::max<Index>(keep, 1);
            if(keep > dnew) {
                out.lossless = false;
                keep         = dnew;
            }
            const auto ke = static_cast<Eigen::Index>(keep);
            sites.push_back(Tensor::from_matrix(f.u.leftCols(ke), {d, d, r, keep}));
            Matrix       rest = f.s.head(ke).asDiagonal() * f.v.topRows(ke);
            const double n    = rest.norm();
            if(n > 0.0) {
                rest /= n;
                ls += std::log(n);
            }
            carry = Tensor::from_matrix(rest, {keep, ar, ur});
        }
        ls += normalize_site(sites.back());
        out.mpo = Mpo(std::move(sites), ls);
        return out;
    }

    OptimizeResult finish(Mpo start, FitTarget &target, double log_ref, Index dnew, const SweepOptions &opts, InitPolicy policy,
                          bool lossless) {
        OptimizeResult res;
        res.start          = policy;
        res.lossless_start = lossless;
        if(lossless) {
            res.mpo       = std::move(start);
            res.converged = true;
            return res;
        }
        auto outcome    = run_sweeps(target, canonicalize(start, 0).sites(), opts);
        res.fit_history = std::move(outcome.fit_history);
        res.sweeps      = outcome.sweeps;
        res.converged   = outcome.converged;
        double ls       = log_ref + normalize_site(outcome.sites.front());
        Mpo    mpo(std::move(outcome.sites), ls);
        if(opts.compress_eps > 0.0 && mpo.length() > 1) mpo = truncate_svd(mpo, dnew, opts.compress_eps).mpo;
        res.mpo = std::move(mpo);
        return res;
    }

    void fill_residual(OptimizeResult &res, const Mpo &exact) {
        res.residual          = canonical_norm(exact_add(exact, res.mpo, -1.0));
        const double tn       = canonical_norm(exact);
        res.relative_residual = tn > 0.0 ? res.residual / tn : res.residual;
    }

} // namespace

OptimizeResult multiply_and_optimize(const Mpo &a, const Mpo &u, Index dnew, const SweepOptions &opts) {
    opts.validate();
    if(dnew < 1) throw DomainError("bond cap must be at least 1");
    if(a.length() != u.length() || a.phys_dim() != u.phys_dim()) throw DimensionError("operands of the product differ in shape");
    const Index L = a.length();
    const Index d = a.phys_dim();

    std::vector<Index> exact_bonds(L - 1);
    const auto         ba = a.bond_dims(), bu = u.bond_dims();
    for(Index b = 0; b + 1 < L; ++b) exact_bonds[b] = ba[b] * bu[b];

    const InitPolicy policy = opts.init == InitPolicy::automatic ? InitPolicy::zip_up : opts.init;
    std::optional<Mpo> exact;
    Mpo                start;
    bool               lossless = false;
    switch(policy) {
        case InitPolicy::truncated_exact: {
            exact       = exact_multiply(a, u);
            auto t      = truncate_svd(*exact, dnew, opts.compress_eps);
            lossless    = t.mpo.max_bond() < dnew || t.error <= opts.compress_eps;
            start       = std::move(t.mpo);
            break;
        }
        case InitPolicy::random: start = Mpo(random_start(L, d, start_profile(L, d, dnew, exact_bonds), opts.seed)); break;
        default: {
            auto z   = zip_up(a, u, dnew, opts.compress_eps);
            lossless = z.lossless;
            start    = std::move(z.mpo);
        }
    }
    if(lossless && opts.compress_eps > 0.0 && L > 1) start = truncate_svd(start, dnew, opts.compress_eps).mpo;

    // The fit runs on raw site data; the operands' scales are restored at the end.
    const Mpo     a_raw = a.with_log_scale(0.0);
    const Mpo     u_raw = u.with_log_scale(0.0);
    ProductTarget target(a_raw, u_raw);
    auto          res = finish(std::move(start), target, a.log_scale() + u.log_scale(), dnew, opts, policy, lossless);
    if(opts.compute_residual) {
        if(!exact) exact = exact_multiply(a, u);
        fill_residual(res, *exact);
    }
    return res;
}

OptimizeResult sum_and_optimize(const Mpo &u, std::span<const SumTerm> terms, Index dnew, const SweepOptions &opts) {
    opts.validate();
    if(dnew < 1) throw DomainError("bond cap must be at least 1");
    const Index L = u.length();
    const Index d = u.phys_dim();
    for(const auto &t : terms)
        if(t.mpo.get().length() != L || t.mpo.get().phys_dim() != d) throw DimensionError("operands of the sum differ in shape");

    // Common reference scale so the fit sees O(1) coefficients.
    double log_ref = u.log_scale();
    for(const auto &t : terms)
        if(std::abs(t.coeff) > 0.0) log_ref = std::max(log_ref, t.mpo.get().log_scale() + std::log(std::abs(t.coeff)));

    std::vector<cplx> coeffs{std::exp(u.log_scale() - log_ref)};
    std::vector<Mpo>  raw;
    raw.reserve(terms.size() + 1);
    raw.push_back(u.with_log_scale(0.0));
    for(const auto &t : terms) {
        if(std::abs(t.coeff) == 0.0) continue;
        coeffs.push_back(t.coeff * std::exp(t.mpo.get().log_scale() - log_ref));
        raw.push_back(t.mpo.get().with_log_scale(0.0));
    }
    std::vector<const Mpo *> ops;
    for(const auto &m : raw) ops.push_back(&m);

    std::vector<Index> exact_bonds = u.bond_dims();
    for(Index j = 1; j < raw.size(); ++j) {
        const auto b = raw[j].bond_dims();
        for(Index k = 0; k + 1 < L; ++k) exact_bonds[k] = saturating_add(exact_bonds[k], b[k]);
    }
    InitPolicy policy = opts.init;
    if(policy == InitPolicy::automatic || policy == InitPolicy::zip_up)
        policy = max_of(exact_bonds) <= saturating_mul(4, dnew) ? InitPolicy::truncated_exact : InitPolicy::random;

    std::optional<Mpo> exact;
    auto               build_exact = [&] {
        Mpo acc = u;
        for(const auto &t : terms)
            if(std::abs(t.coeff) > 0.0) acc = exact_add(acc, t.mpo.get(), t.coeff);
        return acc;
    };

    Mpo  start;
    bool lossless = false;
    if(policy == InitPolicy::truncated_exact) {
        exact    = build_exact();
        auto t   = truncate_svd(*exact, dnew, opts.compress_eps);
        lossless = t.error <= opts.compress_eps;
        start    = std::move(t.mpo);
    } else {
        start = Mpo(random_start(L, d, start_profile(L, d, dnew, exact_bonds), opts.seed));
    }

    SumTarget target(std::move(coeffs), std::move(ops));
    auto      res = finish(std::move(start), target, log_ref, dnew, opts, policy, lossless);
    if(opts.compute_residual) {
        if(!exact) exact = build_exact();
        fill_residual(res, *exact);
    }
    return res;
}

} // namespace mpotrace
