#pragma once

// Samplers for the two spiked F-ratio models and the spectral solvers on
// top of them.
//
// Direct route: draw A ~ W_p(nA, Sigma1) (covariance spike) or a non-central
// W_p(nA, I, Omega1) (non-centrality spike) together with B ~ W_p(n2, I) and
// compute eigenvalues of (B/n2)^{-1} A/nA.  Central Wisharts are drawn as
// Bartlett factors, which are simultaneously their Cholesky factors, so the
// ratio spectrum reduces to singular values of triangular products; a Lanczos
// path exploits this for top-eigenvalue Monte Carlo without any p^3 step.
//
// Canonical route: draw the equivalent factor model (xi, H, E) and solve
// det(xi xi'/n1 + H - x E) = 0; eigenvalues of F are n1/(n1+k) times the
// roots.  The k largest roots are also available through the secular
// function M(x) = xi'(H - xE)^{-1} xi / n1, whose eigenvalue branches are
// strictly increasing in x, giving a bracketed branch-wise root finder.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fratio/errors.hpp"
#include "fratio/rng.hpp"
#include "fratio/types.hpp"

namespace fratio {

enum class SampleRoute { Direct, Canonical };

namespace substream {
// Fixed substream ids so each logical draw has its own counter block space.
constexpr std::uint32_t direct_a = 0;
constexpr std::uint32_t direct_b = 1;
constexpr std::uint32_t canon_v = 2;
constexpr std::uint32_t canon_u = 3;
constexpr std::uint32_t canon_h = 4;
constexpr std::uint32_t canon_e = 5;
constexpr std::uint32_t canon_wf = 6;
constexpr std::uint32_t lanczos_start = 7;
} // namespace substream

// Lower-triangular Bartlett factor T with T T' ~ W_dim(df, I).
// Row i carries sqrt(chi^2_{df-i}) on the diagonal and standard normals
// to its left; fill order is fixed to keep streams reproducible.
inline Eigen::MatrixXd bartlett_factor(RngStream& g, int dim, int df) {
    if (df < dim) throw config_error("bartlett_factor: need df >= dim");
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        t(i, i) = std::sqrt(g.chisq(static_cast<double>(df - i)));
        for (int j = 0; j < i; ++j) t(i, j) = g.normal();
    }
    return t;
}

inline void fill_normal(RngStream& g, Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = g.normal();
}

// All p eigenvalues of B^{-1}A for symmetric A and positive definite B,
// via Cholesky reduction to a symmetric eigenproblem; descending.
inline std::vector<double> generalized_eigs(const Eigen::MatrixXd& a,
                                            const Eigen::MatrixXd& b) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
        throw config_error("generalized_eigs: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(b);
    if (llt.info() != Eigen::Success)
        throw numerical_error("generalized_eigs: B is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b,
                                                                 Eigen::EigenvaluesOnly |
                                                                     Eigen::Ax_lBx);
    if (es.info() != Eigen::Success)
        throw numerical_error("generalized_eigs: eigensolver failed to converge");
    const Eigen::VectorXd ev = es.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), std::greater<double>());
    return out;
}

// ---------------------------------------------------------------------------
// Direct route
// ---------------------------------------------------------------------------

// Factorized direct-route draw: A_raw = g_a g_a' + w w', B_raw = l_b l_b',
// with A_raw ~ W_p(nA, Sigma1) resp. non-central W_p(nA, I, Omega1) and
// B_raw ~ W_p(n2, I).  F = (n2/nA) * B_raw^{-1} A_raw.
struct DirectFactors {
    Eigen::MatrixXd g_a;  // p x p lower triangular (rows scaled for Setting 1)
    Eigen::MatrixXd w;    // p x k shifted Gaussian columns (Setting 2), else p x 0
    Eigen::MatrixXd l_b;  // p x p lower triangular
};

inline DirectFactors sample_direct_factors(const ModelDims& dims, const SpikeSpec& spikes,
                                           std::uint64_t seed, int rep) {
    dims.validate();
    spikes.validate();
    if (spikes.k() != dims.k) throw config_error("sample_direct_factors: k mismatch");
    const int p = dims.p, k = dims.k, na = dims.n_a();

    DirectFactors f;
    RngStream ga(seed, static_cast<std::uint32_t>(rep), substream::direct_a);
    if (spikes.setting == Setting::CovarianceSpike || k == 0) {
        // A = Sigma^{1/2} T T' Sigma^{1/2}; Sigma diagonal, so scale rows.
        f.g_a = bartlett_factor(ga, p, na);
        for (int i = 0; i < k; ++i) f.g_a.row(i) *= std::sqrt(1.0 + spikes.h[i]);
        f.w.resize(p, 0);
    } else {
        // Split off the k mean-shifted rows: central part has df nA - k = n1.
        f.g_a = bartlett_factor(ga, p, na - k);
        f.w.resize(p, k);
        fill_normal(ga, f.w);
        for (int i = 0; i < k; ++i)
            f.w(i, i) += std::sqrt(static_cast<double>(na) * spikes.h[i]);
    }
    RngStream gb(seed, static_cast<std::uint32_t>(rep), substream::direct_b);
    f.l_b = bartlett_factor(gb, p, dims.n2);
    return f;
}

inline std::vector<double> direct_eigs(const DirectFactors& f, const ModelDims& dims) {
    const double na = static_cast<double>(dims.n_a());
    Eigen::MatrixXd a = f.g_a * f.g_a.transpose();
    if (f.w.cols() > 0) a += f.w * f.w.transpose();
    a /= na;
    const Eigen::MatrixXd b = f.l_b * f.l_b.transpose() / static_cast<double>(dims.n2);
    return generalized_eigs(a, b);
}

// ---------------------------------------------------------------------------
// Lanczos on the implicitly factored ratio operator
// ---------------------------------------------------------------------------

namespace detail {

// u -> L_B^{-1} A_raw L_B^{-T} u, all factors triangular or thin.
struct RatioOperator {
    const DirectFactors& f;

    Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
        Eigen::VectorXd t = f.l_b.transpose().triangularView<Eigen::Upper>().solve(u);
        Eigen::VectorXd y = f.g_a.triangularView<Eigen::Lower>() *
                            (f.g_a.transpose().triangularView<Eigen::Upper>() * t);
        if (f.w.cols() > 0) y.noalias() += f.w * (f.w.transpose() * t);
        return f.l_b.triangularView<Eigen::Lower>().solve(y);
    }
};

// Largest `want` eigenvalues of a symmetric PSD operator by Lanczos with
// full reorthogonalization.  Deterministic start vector from its own
// substream keeps runs bit-reproducible.
template <typename Op>
std::vector<double> lanczos_top(const Op& op, int p, int want, RngStream& g,
                                double rel_tol = 1e-11) {
    if (want <= 0 || want > p) throw argument_error("lanczos_top: bad want");
    const int max_iter = std::min(p, std::max(12 * want + 60, 120));
    Eigen::MatrixXd basis(p, max_iter);
    std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}

    Eigen::VectorXd v(p);
    for (int i = 0; i < p; ++i) v(i) = g.normal();
    v.normalize();
    basis.col(0) = v;

    std::vector<double> ritz(want, 0.0);
    int m = 0;
    for (; m < max_iter; ++m) {
        Eigen::VectorXd w = op.apply(basis.col(m));
        const double a = basis.col(m).dot(w);
        alpha.push_back(a);
        w -= a * basis.col(m);
        if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
        // Two-pass full reorthogonalization.
        for (int pass = 0; pass < 2; ++pass)
            w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
        const double b = w.norm();

        if (m + 1 >= want && (m % 2 == 1 || b < 1e-13 || m + 1 == max_iter)) {
            // Ritz values of the tridiagonal section.
            Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m + 1, m + 1);
            for (int i = 0; i <= m; ++i) tri(i, i) = alpha[static_cast<std::size_t>(i)];
            for (int i = 0; i < m; ++i)
                tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
            const Eigen::VectorXd th = es.eigenvalues();  // ascending
            const Eigen::MatrixXd s = es.eigenvectors();
            bool done = true;
            const double scale = std::max(std::abs(th(m)), 1e-30);
            for (int i = 0; i < want; ++i) {
                const int idx = m - i;
                const double resid = b * std::abs(s(m, idx));
                if (resid > rel_tol * scale) {
                    done = false;
                    break;
                }
            }
            if (done || b < 1e-13 || m + 1 == max_iter) {
                for (int i = 0; i < want; ++i) ritz[static_cast<std::size_t>(i)] = th(m - i);
                if (done || b < 1e-13) return ritz;
                throw numerical_error("lanczos_top: no convergence within iteration budget");
            }
        }
        if (b < 1e-13) {
            // Invariant subspace hit before convergence bookkeeping: restart
            // direction from the stream, orthogonalized against the basis.
            Eigen::VectorXd nv(p);
            for (int i = 0; i < p; ++i) nv(i) = g.normal();
            for (int pass = 0; pass < 2; ++pass)
                nv -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * nv);
            const double nb = nv.norm();
            if (nb < 1e-13) throw numerical_error("lanczos_top: basis exhausted");
            beta.push_back(0.0);
            if (m + 1 < max_iter) basis.col(m + 1) = nv / nb;
            continue;
        }
        beta.push_back(b);
        if (m + 1 < max_iter) basis.col(m + 1) = w / b;
    }
    throw numerical_error("lanczos_top: iteration budget exhausted");
}

} // namespace detail

// Top `count` eigenvalues of F for the direct-route draw at (seed, rep),
// computed without forming any p x p product matrix.
inline std::vector<double> sample_top_eigenvalues(const ModelDims& dims,
                                                  const SpikeSpec& spikes,
                                                  std::uint64_t seed, int rep, int count) {
    const DirectFactors f = sample_direct_factors(dims, spikes, seed, rep);
    detail::RatioOperator op{f};
    RngStream gs(seed, static_cast<std::uint32_t>(rep), substream::lanczos_start);
    std::vector<double> top = detail::lanczos_top(op, dims.p, count, gs);
    const double scale = static_cast<double>(dims.n2) / static_cast<double>(dims.n_a());
    for (double& t : top) t *= scale;
    return top;
}

inline double sample_top_eigenvalue(const ModelDims& dims, const SpikeSpec& spikes,
                                    std::uint64_t seed, int rep) {
    return sample_top_eigenvalues(dims, spikes, seed, rep, 1)[0];
}

// ---------------------------------------------------------------------------
// Canonical route
// ---------------------------------------------------------------------------

struct FactorModelDraw {
    Eigen::MatrixXd xi;  // p x k perturbation block
    Eigen::MatrixXd h;   // p x p, n1 * h ~ W_p(n1, I)
    Eigen::MatrixXd e;   // p x p, n2 * e ~ W_p(n2, I)
};

namespace detail {

// Symmetric inverse square root (and square root) of a small SPD matrix.
inline Eigen::MatrixXd spd_power(const Eigen::MatrixXd& m, double expo) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw numerical_error("spd_power: eigensolver failed");
    Eigen::VectorXd d = es.eigenvalues();
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (!(d(i) > 0.0)) throw numerical_error("spd_power: matrix not positive definite");
        d(i) = std::pow(d(i), expo);
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace detail

inline FactorModelDraw sample_factor_draw(const ModelDims& dims, const SpikeSpec& spikes,
                                          std::uint64_t seed, int rep) {
    dims.validate();
    spikes.validate();
    if (spikes.k() != dims.k) throw config_error("sample_factor_draw: k mismatch");
    const int p = dims.p, k = dims.k, n1 = dims.n1, na = dims.n_a();
    FactorModelDraw d;

    if (k > 0) {
        RngStream gv(seed, static_cast<std::uint32_t>(rep), substream::canon_v);
        RngStream gu(seed, static_cast<std::uint32_t>(rep), substream::canon_u);
        Eigen::MatrixXd v(p, k), u(p, k);
        fill_normal(gv, v);
        fill_normal(gu, u);
        const Eigen::MatrixXd wv_isqrt = detail::spd_power(v.transpose() * v, -0.5);

        Eigen::MatrixXd wf_sqrt;
        if (spikes.setting == Setting::CovarianceSpike) {
            RngStream gw(seed, static_cast<std::uint32_t>(rep), substream::canon_wf);
            const Eigen::MatrixXd tw = bartlett_factor(gw, k, na);
            wf_sqrt = detail::spd_power(tw * tw.transpose(), 0.5);
        } else {
            // Non-centrality spike: W_F = nA * I exactly, no randomness here.
            wf_sqrt = std::sqrt(static_cast<double>(na)) * Eigen::MatrixXd::Identity(k, k);
        }
        Eigen::VectorXd hsqrt(k);
        for (int i = 0; i < k; ++i) hsqrt(i) = std::sqrt(spikes.h[i]);
        d.xi = v * wv_isqrt * hsqrt.asDiagonal() * wf_sqrt + u;
    } else {
        d.xi.resize(p, 0);
    }

    RngStream gh(seed, static_cast<std::uint32_t>(rep), substream::canon_h);
    RngStream ge(seed, static_cast<std::uint32_t>(rep), substream::canon_e);
    const Eigen::MatrixXd th = bartlett_factor(gh, p, n1);
    const Eigen::MatrixXd te = bartlett_factor(ge, p, dims.n2);
    d.h = th * th.transpose() / static_cast<double>(n1);
    d.e = te * te.transpose() / static_cast<double>(dims.n2);
    return d;
}

inline double canonical_rescale(const ModelDims& dims) {
    return static_cast<double>(dims.n1) / static_cast<double>(dims.n1 + dims.k);
}

// All p eigenvalues of F via the factor representation.
inline std::vector<double> canonical_eigs(const FactorModelDraw& d, const ModelDims& dims) {
    Eigen::MatrixXd lhs = d.h;
    if (d.xi.cols() > 0)
        lhs += d.xi * d.xi.transpose() / static_cast<double>(dims.n1);
    std::vector<double> roots = generalized_eigs(lhs, d.e);
    const double s = canonical_rescale(dims);
    for (double& x : roots) x *= s;
    return roots;
}

// ---------------------------------------------------------------------------
// Secular function
// ---------------------------------------------------------------------------

// M(x) = xi'(H - xE)^{-1} xi / n1 for x above the top eigenvalue mu1 of
// E^{-1}H.  Roots of det(I_k + M(x)) = 0 in (mu1, inf) are the leading
// eigenvalues of the canonical pencil; each sorted eigenvalue branch of M
// is strictly increasing in x, so roots are found by per-branch bisection.
class SecularFunction {
public:
    SecularFunction(FactorModelDraw draw, ModelDims dims, SpikeSpec spikes)
        : draw_(std::move(draw)), dims_(dims), spikes_(std::move(spikes)) {
        dims_.validate();
        spikes_.validate();
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
            draw_.h, draw_.e, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
        if (es.info() != Eigen::Success)
            throw numerical_error("SecularFunction: pencil eigensolver failed");
        mu_ = es.eigenvalues();           // ascending; phi' E phi = I
        y_ = es.eigenvectors().transpose() * draw_.xi;  // p x k
    }

    double mu1() const { return mu_(mu_.size() - 1); }
    const ModelDims& dims() const { return dims_; }

    // Reference evaluation straight from the definition: one SPD solve of
    // (xE - H) s = xi.  Throws below mu1.
    Eigen::MatrixXd eval(double x) const {
        check_domain(x);
        if (dims_.k == 0) return Eigen::MatrixXd(0, 0);
        Eigen::LLT<Eigen::MatrixXd> llt(x * draw_.e - draw_.h);
        if (llt.info() != Eigen::Success)
            throw numerical_error("secular_eval: shifted pencil not positive definite");
        const Eigen::MatrixXd s = llt.solve(draw_.xi);
        return -(draw_.xi.transpose() * s) / static_cast<double>(dims_.n1);
    }

    // Same value through the cached pencil eigenbasis; O(p k^2) per call.
    Eigen::MatrixXd eval_fast(double x) const {
        check_domain(x);
        if (dims_.k == 0) return Eigen::MatrixXd(0, 0);
        Eigen::VectorXd inv = (mu_.array() - x).inverse().matrix();
        return y_.transpose() * inv.asDiagonal() * y_ / static_cast<double>(dims_.n1);
    }

    // All roots of det(I_k + M(x)) = 0 above mu1, largest first (branch j+1
    // crosses -1 no later than branch j).
    std::vector<double> roots() const {
        const int k = dims_.k;
        std::vector<double> out;
        if (k == 0 || draw_.xi.norm() == 0.0) return out;

        const double spread = std::max({mu1() - mu_(0), 1e-3 * std::abs(mu1()), 1e-9});
        const double x_lo = mu1() + 1e-6 * spread;
        const Eigen::VectorXd eps_lo = branch_values(x_lo);

        for (int j = 0; j < k; ++j) {
            if (!(eps_lo(j) < -1.0)) break;  // this and later branches never reach -1
            double lo = x_lo;
            double hi = x_lo + spread;
            int guard = 0;
            while (branch_values(hi)(j) < -1.0) {
                lo = hi;
                hi = mu1() + 2.0 * (hi - mu1());
                if (++guard > 200)
                    throw numerical_error("secular_roots: bracket growth failed");
            }
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                if (branch_values(mid)(j) < -1.0)
                    lo = mid;
                else
                    hi = mid;
            }
            out.push_back(0.5 * (lo + hi));
        }
        return out;
    }

private:
    void check_domain(double x) const {
        if (!(x > mu1()))
            throw domain_error("secular function: x must exceed the top pencil eigenvalue");
    }

    // Ascending eigenvalues of M(x): branch j is the j-th smallest.
    Eigen::VectorXd branch_values(double x) const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eval_fast(x),
                                                          Eigen::EigenvaluesOnly);
        return es.eigenvalues();
    }

    FactorModelDraw draw_;
    ModelDims dims_;
    SpikeSpec spikes_;
    Eigen::VectorXd mu_;   // pencil eigenvalues, ascending
    Eigen::MatrixXd y_;    // rotated perturbation block
};

inline Eigen::MatrixXd secular_eval(const SecularFunction& sf, double x) {
    return sf.eval(x);
}

inline std::vector<double> secular_roots(const SecularFunction& sf) { return sf.roots(); }

// ---------------------------------------------------------------------------
// Public sampler
// ---------------------------------------------------------------------------

inline EigenSample sample_spiked_f(const ModelDims& dims, const SpikeSpec& spikes,
                                   std::uint64_t seed, int rep,
                                   SampleRoute route = SampleRoute::Direct) {
    dims.validate();
    spikes.validate();
    if (spikes.k() != dims.k) throw config_error("sample_spiked_f: k mismatch");

    EigenSample s;
    s.dims = dims;
    s.spikes = spikes;
    s.seed = seed;
    s.replication_index = rep;
    if (route == SampleRoute::Direct) {
        const DirectFactors f = sample_direct_factors(dims, spikes, seed, rep);
        s.values = direct_eigs(f, dims);
    } else {
        const FactorModelDraw d = sample_factor_draw(dims, spikes, seed, rep);
        s.values = canonical_eigs(d, dims);
    }
    return s;
}

} // namespace fratio
