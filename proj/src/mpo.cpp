#include "mpotrace/mpo.hpp"

#include "mpotrace/errors.hpp"
#include "site_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mpotrace {

// ---------------------------------------------------------------------------
// validation

namespace {
    void validate_chain(const std::vector<Tensor> &sites, Index rank, const char *kind) {
        if(sites.empty()) throw DimensionError(std::string(kind) + " needs at least one site");
        const Index d = sites.front().extent(0);
        if(d < 2) throw DimensionError(std::string(kind) + " physical dimension must be at least 2");
        for(Index k = 0; k < sites.size(); ++k) {
            const auto &s = sites[k];
            if(s.rank() != rank) throw DimensionError(std::string(kind) + " site has wrong rank");
            for(Index ax = 0; ax + 2 < rank; ++ax)
                if(s.extent(ax) != d) throw DimensionError(std::string(kind) + " physical dimension differs across sites");
            const Index left  = s.extent(rank - 2);
            const Index right = s.extent(rank - 1);
            if(k == 0 && left != 1) throw DimensionError(std::string(kind) + " left boundary bond must be 1");
            if(k + 1 == sites.size() && right != 1) throw DimensionError(std::string(kind) + " right boundary bond must be 1");
            if(k + 1 < sites.size() && right != sites[k + 1].extent(rank - 2))
                throw DimensionError(std::string(kind) + " bond mismatch between sites " + std::to_string(k) + " and " +
                                     std::to_string(k + 1));
        }
    }

    std::vector<Index> internal_bonds(const std::vector<Tensor> &sites) {
        std::vector<Index> out;
        for(Index k = 0; k + 1 < sites.size(); ++k) out.push_back(sites[k].shape().back());
        return out;
    }

    void require_compatible(const Mpo &a, const Mpo &b) {
        if(a.length() != b.length()) throw DimensionError("MPO lengths differ");
        if(a.phys_dim() != b.phys_dim()) throw DimensionError("MPO physical dimensions differ");
    }
} // namespace

Mps::Mps(std::vector<Tensor> sites, double log_scale) : sites_(std::move(sites)), log_scale_(log_scale) {
    validate_chain(sites_, 3, "MPS");
}

std::vector<Index> Mps::bond_dims() const { return internal_bonds(sites_); }

Index Mps::max_bond() const {
    auto b = bond_dims();
    return b.empty() ? 1 : *std::max_element(b.begin(), b.end());
}

Mpo::Mpo(std::vector<Tensor> sites, double log_scale) : sites_(std::move(sites)), log_scale_(log_scale) {
    validate_chain(sites_, 4, "MPO");
}

std::vector<Index> Mpo::bond_dims() const { return internal_bonds(sites_); }

Index Mpo::max_bond() const {
    auto b = bond_dims();
    return b.empty() ? 1 : *std::max_element(b.begin(), b.end());
}

Mpo Mpo::with_log_scale(double log_scale) const & {
    Mpo out    = *this;
    out.log_scale_ = log_scale;
    return out;
}

Mpo Mpo::with_log_scale(double log_scale) && {
    log_scale_ = log_scale;
    return std::move(*this);
}

// ---------------------------------------------------------------------------
// site helpers shared with varopt

namespace detail {
    Matrix right_matrix(const Tensor &site) {
        const Tensor p = site.permute({2, 0, 1, 3});
        return p.as_matrix(1);
    }

    Tensor site_from_right_matrix(const Matrix &m, Index d, Index dr) {
        return Tensor::from_matrix(m, {static_cast<Index>(m.rows()), d, d, dr}).permute({1, 2, 0, 3});
    }

    Tensor absorb_right(const Tensor &site, const Matrix &r) {
        const Index d  = site.extent(0);
        const Index dl = site.extent(2);
        Matrix      m  = site.as_matrix(3) * r;
        return Tensor::from_matrix(m, {d, d, dl, static_cast<Index>(r.cols())});
    }

    Tensor absorb_left(const Matrix &l, const Tensor &site) {
        const Index d  = site.extent(0);
        const Index dr = site.extent(3);
        Matrix      m  = l * right_matrix(site);
        return site_from_right_matrix(m, d, dr);
    }

    // Shift the norm of site `k` into the returned log offset.
    double normalize_site(Tensor &site) {
        const double n = site.norm();
        if(n == 0.0 || !std::isfinite(n)) return 0.0;
        site *= cplx(1.0 / n);
        return std::log(n);
    }
} // namespace detail

using namespace detail;

// ---------------------------------------------------------------------------
// construction

Mpo identity_mpo(Index length, Index phys_dim) {
    if(length < 1) throw DimensionError("identity MPO needs at least one site");
    if(phys_dim < 2) throw DimensionError("physical dimension must be at least 2");
    std::vector<Tensor> sites;
    sites.reserve(length);
    for(Index k = 0; k < length; ++k) {
        Tensor s({phys_dim, phys_dim, 1, 1});
        for(Index p = 0; p < phys_dim; ++p) s(p, p, 0, 0) = 1.0;
        sites.push_back(std::move(s));
    }
    return Mpo(std::move(sites));
}

Mps vectorize(const Mpo &m) {
    std::vector<Tensor> sites;
    sites.reserve(m.length());
    const Index d = m.phys_dim();
    for(const auto &s : m.sites()) sites.push_back(s.reshape({d * d, s.extent(2), s.extent(3)}));
    return Mps(std::move(sites), m.log_scale());
}

Mpo unvectorize(const Mps &v) {
    const Index dd = v.phys_dim();
    const auto  d  = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(dd))));
    if(d * d != dd) throw DimensionError("MPS physical dimension is not a perfect square");
    std::vector<Tensor> sites;
    for(const auto &s : v.sites()) sites.push_back(s.reshape({d, d, s.extent(1), s.extent(2)}));
    return Mpo(std::move(sites), v.log_scale());
}

// ---------------------------------------------------------------------------
// overlaps

namespace {
    // Left-to-right transfer contraction over sites whose data is laid out as
    // (physical..., left, right). The environment is rescaled at every step
    // and the scale accumulated in log form.
    LogOverlap transfer_overlap(const std::vector<Tensor> &a, const std::vector<Tensor> &b, double log_scale) {
        if(a.size() != b.size()) throw DimensionError("chain lengths differ");
        Matrix env       = Matrix::Ones(1, 1);
        double log_accum = log_scale;
        for(Index k = 0; k < a.size(); ++k) {
            const auto &sa = a[k];
            const auto &sb = b[k];
            const Index r  = sa.rank();
            const Index la = sa.extent(r - 2), ra = sa.extent(r - 1);
            const Index lb = sb.extent(r - 2), rb = sb.extent(r - 1);
            const Index phys = sa.size() / (la * ra);
            if(phys != sb.size() / (lb * rb)) throw DimensionError("physical dimensions differ");
            if(static_cast<Index>(env.rows()) != la || static_cast<Index>(env.cols()) != lb)
                throw DimensionError("bond mismatch in overlap");
            Matrix next = Matrix::Zero(static_cast<Eigen::Index>(ra), static_cast<Eigen::Index>(rb));
            for(Index p = 0; p < phys; ++p) {
                Eigen::Map<const Matrix> ap(sa.data().data() + p * la * ra, static_cast<Eigen::Index>(la), static_cast<Eigen::Index>(ra));
                Eigen::Map<const Matrix> bp(sb.data().data() + p * lb * rb, static_cast<Eigen::Index>(lb), static_cast<Eigen::Index>(rb));
                Matrix                   tmp = env * bp;
                next.noalias() += ap.adjoint() * tmp;
            }
            const double m = next.cwiseAbs().maxCoeff();
            if(m == 0.0) return LogOverlap{};
            if(!std::isfinite(m)) throw NumericError("non-finite value in transfer contraction");
            next /= m;
            log_accum += std::log(m);
            env = std::move(next);
        }
        const cplx v = env(0, 0);
        if(v == cplx(0.0)) return LogOverlap{};
        return LogOverlap{log_accum + std::log(std::abs(v)), v / std::abs(v)};
    }

    cplx from_log(const LogOverlap &o) {
        if(!std::isfinite(o.log_abs)) return {0.0, 0.0};
        return std::exp(o.log_abs) * o.phase;
    }
} // namespace

cplx inner_product(const Mps &a, const Mps &b) {
    if(a.length() != b.length()) throw DimensionError("MPS lengths differ");
    if(a.phys_dim() != b.phys_dim()) throw DimensionError("MPS physical dimensions differ");
    return from_log(transfer_overlap(a.sites(), b.sites(), a.log_scale() + b.log_scale()));
}

LogOverlap log_inner_product(const Mpo &a, const Mpo &b) {
    require_compatible(a, b);
    return transfer_overlap(a.sites(), b.sites(), a.log_scale() + b.log_scale());
}

cplx inner_product(const Mpo &a, const Mpo &b) { return from_log(log_inner_product(a, b)); }

LogOverlap log_sandwich(const Mpo &a, const Mpo &op, const Mpo &b) {
    require_compatible(a, op);
    require_compatible(a, b);
    // Environment indices (a bond, op bond, b bond).
    Tensor env({1, 1, 1});
    env(0, 0, 0)     = 1.0;
    double log_accum = a.log_scale() + op.log_scale() + b.log_scale();
    for(Index k = 0; k < a.length(); ++k) {
        const Tensor t1 = contract(env, b.site(k), {{2, 2}});              // (x, y, r, q, z')
        const Tensor t2 = contract(t1, op.site(k), {{1, 2}, {2, 1}});      // (x, q, z', p, y')
        const Tensor t3 = contract(t2, a.site(k).conj(), {{0, 2}, {1, 1}, {3, 0}}); // (z', y', x')
        Tensor       next = t3.permute({2, 1, 0});
        double       m    = 0.0;
        for(const auto &x : next.data()) m = std::max(m, std::abs(x));
        if(m == 0.0) return LogOverlap{};
        if(!std::isfinite(m)) throw NumericError("non-finite value in transfer contraction");
        next *= 1.0 / m;
        log_accum += std::log(m);
        env = std::move(next);
    }
    const cplx v = env(0, 0, 0);
    if(v == cplx(0.0)) return LogOverlap{};
    return LogOverlap{log_accum + std::log(std::abs(v)), v / std::abs(v)};
}

double log_frobenius_norm(const Mpo &a) {
    const auto o = log_inner_product(a, a);
    if(!std::isfinite(o.log_abs)) return o.log_abs;
    if(std::abs(o.phase.imag()) > 1e-10) throw NumericError("squared norm has a significant imaginary part");
    if(o.phase.real() < 0.0) throw NumericError("squared norm is negative; the contraction is broken");
    return 0.5 * o.log_abs;
}

double frobenius_norm(const Mpo &a) { return std::exp(log_frobenius_norm(a)); }

double canonical_norm(const Mpo &a) {
    const Mpo c = canonicalize(a, 0);
    return std::exp(c.log_scale()) * c.site(0).norm();
}

// ---------------------------------------------------------------------------
// algebra

Mpo scalar_multiply(cplx c, const Mpo &a) {
    if(c.imag() == 0.0 && c.real() > 0.0) return a.with_log_scale(a.log_scale() + std::log(c.real()));
    auto sites = std::vector<Tensor>(a.sites());
    sites.front() *= c;
    return Mpo(std::move(sites), a.log_scale());
}

Mpo adjoint(const Mpo &a) {
    std::vector<Tensor> sites;
    sites.reserve(a.length());
    for(const auto &s : a.sites()) sites.push_back(s.permute({1, 0, 2, 3}).conj());
    return Mpo(std::move(sites), a.log_scale());
}

Mpo exact_add(const Mpo &a, const Mpo &b, cplx coeff) {
    require_compatible(a, b);
    const Index L  = a.length();
    const Index d  = a.phys_dim();
    const double s  = std::max(a.log_scale(), b.log_scale());
    const cplx   fa = std::exp(a.log_scale() - s);
    const cplx   fb = coeff * std::exp(b.log_scale() - s);

    std::vector<Tensor> sites;
    sites.reserve(L);
    for(Index k = 0; k < L; ++k) {
        const auto &sa = a.site(k);
        const auto &sb = b.site(k);
        const cplx  ca = k == 0 ? fa : cplx(1.0);
        const cplx  cb = k == 0 ? fb : cplx(1.0);
        if(L == 1) {
            sites.push_back(ca * sa + cb * sb);
            break;
        }
        const Index la = sa.extent(2), ra = sa.extent(3), lb = sb.extent(2), rb = sb.extent(3);
        const Index l  = k == 0 ? 1 : la + lb;
        const Index r  = k + 1 == L ? 1 : ra + rb;
        const Index ol = k == 0 ? 0 : la;
        const Index orr = k + 1 == L ? 0 : ra;
        Tensor      out({d, d, l, r});
        for(Index p = 0; p < d; ++p)
            for(Index t = 0; t < d; ++t) {
                for(Index i = 0; i < la; ++i)
                    for(Index j = 0; j < ra; ++j) out(p, t, i, j) = ca * sa(p, t, i, j);
                for(Index i = 0; i < lb; ++i)
                    for(Index j = 0; j < rb; ++j) out(p, t, ol + i, orr + j) = cb * sb(p, t, i, j);
            }
        sites.push_back(std::move(out));
    }
    return Mpo(std::move(sites), s);
}

Mpo exact_multiply(const Mpo &a, const Mpo &b) {
    require_compatible(a, b);
    const Index         d = a.phys_dim();
    std::vector<Tensor> sites;
    sites.reserve(a.length());
    for(Index k = 0; k < a.length(); ++k) {
        const auto &sa = a.site(k);
        const auto &sb = b.site(k);
        // (p, la, ra, t, lb, rb)
        Tensor c = contract(sa, sb, {{1, 0}});
        c        = c.permute({0, 3, 1, 4, 2, 5});
        sites.push_back(std::move(c).reshape({d, d, sa.extent(2) * sb.extent(2), sa.extent(3) * sb.extent(3)}));
    }
    return Mpo(std::move(sites), a.log_scale() + b.log_scale());
}

Mpo hermitian_part(const Mpo &a) { return scalar_multiply(0.5, exact_add(a, adjoint(a))); }

// ---------------------------------------------------------------------------
// gauge and truncation

Mpo canonicalize(const Mpo &a, Index center) {
    const Index L = a.length();
    if(center >= L) throw DimensionError("canonical center out of range");
    const Index         d     = a.phys_dim();
    std::vector<Tensor> sites = a.sites();
    double              ls    = a.log_scale();

    for(Index k = 0; k < center; ++k) {
        auto [q, r] = qr(Matrix(sites[k].as_matrix(3)));
        const double n = r.norm();
        if(n > 0.0) {
            r /= n;
            ls += std::log(n);
        }
        sites[k]     = Tensor::from_matrix(q, {d, d, sites[k].extent(2), static_cast<Index>(q.cols())});
        sites[k + 1] = absorb_left(r, sites[k + 1]);
    }
    for(Index k = L - 1; k > center; --k) {
        auto [l, q] = lq(right_matrix(sites[k]));
        const double n = l.norm();
        if(n > 0.0) {
            l /= n;
            ls += std::log(n);
        }
        sites[k]     = site_from_right_matrix(q, d, sites[k].extent(3));
        sites[k - 1] = absorb_right(sites[k - 1], l);
    }
    ls += normalize_site(sites[center]);
    return Mpo(std::move(sites), ls);
}

Truncation truncate_svd(const Mpo &a, Index dmax, double eps) {
    if(dmax < 1) throw DimensionError("bond cap must be at least 1");
    if(eps < 0.0) throw DomainError("truncation threshold must be nonnegative");
    const Index L = a.length();
    const Index d = a.phys_dim();
    Mpo         c = canonicalize(a, L - 1);
    if(c.site(L - 1).norm() == 0.0) return {std::move(c), 0.0};

    double              ls    = c.log_scale();
    std::vector<Tensor> sites = std::move(c).release();
    double              discarded = 0.0;
    for(Index k = L - 1; k > 0; --k) {
        const auto   f     = svd(right_matrix(sites[k]));
        const double total = f.s.norm();
        Index        keep  = 0;
        for(Eigen::Index j = 0; j < f.s.size(); ++j)
            if(f.s(j) > eps * total) keep = static_cast<Index>(j) + 1;
        keep = std::clamp<Index>(keep, 1, dmax);
        keep = std::min<Index>(keep, static_cast<Index>(f.s.size()));
        for(Eigen::Index j = static_cast<Eigen::Index>(keep); j < f.s.size(); ++j) discarded += f.s(j) * f.s(j);

        const auto ke = static_cast<Eigen::Index>(keep);
        sites[k]      = site_from_right_matrix(f.v.topRows(ke), d, sites[k].extent(3));
        Matrix us     = f.u.leftCols(ke) * f.s.head(ke).asDiagonal();
        sites[k - 1]  = absorb_right(sites[k - 1], us);
    }
    ls += normalize_site(sites[0]);
    return {Mpo(std::move(sites), ls), std::sqrt(discarded)};
}

// ---------------------------------------------------------------------------
// dense reconstruction

namespace {
    Index checked_power(Index base, Index exp, Index cap) {
        Index v = 1;
        for(Index k = 0; k < exp; ++k) {
            if(v > cap / base) throw CapacityError("dense reconstruction exceeds the capacity guard");
            v *= base;
        }
        return v;
    }
} // namespace

Eigen::MatrixXcd dense(const Mpo &a) {
    const Index d = a.phys_dim();
    checked_power(d, a.length(), dense_capacity);
    std::vector<Eigen::MatrixXcd> cur(1, Eigen::MatrixXcd::Ones(1, 1));
    for(const auto &s : a.sites()) {
        const Index                   l = s.extent(2), r = s.extent(3);
        const auto                    n = cur.front().rows();
        std::vector<Eigen::MatrixXcd> next(r, Eigen::MatrixXcd::Zero(n * static_cast<Eigen::Index>(d), n * static_cast<Eigen::Index>(d)));
        for(Index j = 0; j < r; ++j)
            for(Index i = 0; i < l; ++i)
                for(Index p = 0; p < d; ++p)
                    for(Index t = 0; t < d; ++t) {
                        const cplx w = s(p, t, i, j);
                        if(w == cplx(0.0)) continue;
                        for(Eigen::Index row = 0; row < n; ++row)
                            for(Eigen::Index col = 0; col < n; ++col)
                                next[j](row * static_cast<Eigen::Index>(d) + static_cast<Eigen::Index>(p),
                                        col * static_cast<Eigen::Index>(d) + static_cast<Eigen::Index>(t)) += cur[i](row, col) * w;
                    }
        cur = std::move(next);
    }
    return std::exp(a.log_scale()) * cur.front();
}

Eigen::VectorXcd dense(const Mps &a) {
    const Index d = a.phys_dim();
    checked_power(d, a.length(), Index{1} << 28);
    std::vector<Eigen::VectorXcd> cur(1, Eigen::VectorXcd::Ones(1));
    for(const auto &s : a.sites()) {
        const Index                   l = s.extent(1), r = s.extent(2);
        const auto                    n = cur.front().size();
        std::vector<Eigen::VectorXcd> next(r, Eigen::VectorXcd::Zero(n * static_cast<Eigen::Index>(d)));
        for(Index j = 0; j < r; ++j)
            for(Index i = 0; i < l; ++i)
                for(Index p = 0; p < d; ++p) {
                    const cplx w = s(p, i, j);
                    for(Eigen::Index row = 0; row < n; ++row) next[j](row * static_cast<Eigen::Index>(d) + static_cast<Eigen::Index>(p)) += cur[i](row) * w;
                }
        cur = std::move(next);
    }
    return std::exp(a.log_scale()) * cur.front();
}

Eigen::VectorXcd interleaved_vec(const Eigen::MatrixXcd &m, Index length, Index phys_dim) {
    const Index n = checked_power(phys_dim, length, dense_capacity);
    if(static_cast<Index>(m.rows()) != n || static_cast<Index>(m.cols()) != n) throw DimensionError("matrix size does not match d^L");
    Eigen::VectorXcd out(static_cast<Eigen::Index>(n * n));
    std::vector<Index> rd(length), cd(length);
    for(Index row = 0; row < n; ++row) {
        for(Index k = 0, x = row; k < length; ++k, x /= phys_dim) rd[length - 1 - k] = x % phys_dim;
        for(Index col = 0; col < n; ++col) {
            for(Index k = 0, x = col; k < length; ++k, x /= phys_dim) cd[length - 1 - k] = x % phys_dim;
            Index idx = 0;
            for(Index k = 0; k < length; ++k) idx = idx * phys_dim * phys_dim + rd[k] * phys_dim + cd[k];
            out(static_cast<Eigen::Index>(idx)) = m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
        }
    }
    return out;
}

Mpo mpo_from_dense(const Eigen::MatrixXcd &m, Index length, Index phys_dim, double eps) {
    const Eigen::VectorXcd v  = interleaved_vec(m, length, phys_dim);
    const Index            dd = phys_dim * phys_dim;
    std::vector<Tensor>    sites;
    Matrix                 rest = Matrix::Map(v.data(), 1, v.size());
    Index                  left = 1;
    for(Index k = 0; k + 1 < length; ++k) {
        const auto rows = static_cast<Eigen::Index>(left * dd);
        Matrix     c    = Matrix::Map(rest.data(), rows, rest.size() / rows);
        const auto f    = svd(c);
        Index      keep = 0;
        for(Eigen::Index j = 0; j < f.s.size(); ++j)
            if(f.s(j) > eps * f.s.norm()) keep = static_cast<Index>(j) + 1;
        keep          = std::max<Index>(keep, 1);
        const auto ke = static_cast<Eigen::Index>(keep);
        sites.push_back(Tensor::from_matrix(f.u.leftCols(ke), {left, phys_dim, phys_dim, keep}).permute({1, 2, 0, 3}));
        rest = f.s.head(ke).asDiagonal() * f.v.topRows(ke);
        left = keep;
    }
    sites.push_back(Tensor::from_matrix(rest, {left, phys_dim, phys_dim, 1}).permute({1, 2, 0, 3}));
    return Mpo(std::move(sites));
}

} // namespace mpotrace
