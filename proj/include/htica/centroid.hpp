#ifndef HTICA_CENTROID_HPP_
#define HTICA_CENTROID_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "htica/errors.hpp"
#include "htica/lp_simplex.hpp"
#include "htica/types.hpp"

namespace htica {

/**
 * Empirical centroid body of a sample x(1)..x(N): the zonotope
 *
 *   (1/N) sum_i [-x(i), x(i)],
 *
 * origin-symmetric and convex.  Its support function is the empirical
 * absolute moment h(u) = (1/N) sum_i |u . x(i)| and the Minkowski functional
 * at q equals 1/lambda* where lambda* is the optimum of
 *
 *   max lambda   s.t.  (1/N) sum_i lambda_i x(i) = lambda q,
 *                      lambda_i in [-1, 1].
 */
class EmpiricalCentroidBody {
  public:
    explicit EmpiricalCentroidBody(SampleMatrix points) : points_(std::move(points)) {
        points_.validate();
        row_norms_.resize(points_.count());
        for (Eigen::Index i = 0; i < points_.count(); ++i) row_norms_[i] = points_.data.row(i).norm();
        max_row_norm_ = row_norms_.size() ? row_norms_.maxCoeff() : 0.0;
    }

    const RowMatrix& points() const { return points_.data; }
    const Vector& row_norms() const { return row_norms_; }
    Eigen::Index count() const { return points_.count(); }
    Eigen::Index dim() const { return points_.dim(); }
    double max_row_norm() const { return max_row_norm_; }

    // Transposed copy of the sample (dim x N, rows contiguous): the dual
    // walk's matrix-vector products stream along it.
    const RowMatrix& points_transposed() const {
        std::call_once(transpose_once_, [this] { transposed_ = points_.data.transpose(); });
        return transposed_;
    }

    // Orthonormal basis of the span of the sample (columns), computed once.
    const Matrix& span_basis() const {
        std::call_once(span_once_, [this] {
            Matrix gram = points_.data.transpose() * points_.data;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
            const Vector& vals = eig.eigenvalues();
            const double floor = std::max(vals.maxCoeff(), 0.0) * 1e-24 + 1e-300;
            Eigen::Index rank = 0;
            for (Eigen::Index k = 0; k < vals.size(); ++k)
                if (vals[k] > floor) ++rank;
            span_basis_ = eig.eigenvectors().rightCols(rank);
        });
        return span_basis_;
    }

    bool in_span(const Vector& q, double rel_tol = 1e-9) const {
        const Matrix& v = span_basis();
        if (v.cols() == dim()) return true;
        Vector residual = q - v * (v.transpose() * q);
        return residual.norm() <= rel_tol * q.norm();
    }

  private:
    SampleMatrix points_;
    Vector row_norms_;
    double max_row_norm_ = 0.0;
    mutable std::once_flag span_once_, transpose_once_;
    mutable Matrix span_basis_;
    mutable RowMatrix transposed_;
};

struct LpSolution {
    enum class Status { optimal, unbounded, infeasible };
    Status status = Status::optimal;
    double objective = 0.0;  // lambda* (+inf when unbounded)
    double scale = 0.0;      // the scalar objective variable, same as objective
    Vector coefficients;     // lambda in [-1,1]^N
    long iterations = 0;
};

struct OracleAnswer {
    bool yes = false;
    double epsilon = 0.0;  // closeness parameter, recorded for audit
    double gauge = 0.0;    // computed Minkowski functional value
};

/** Empirical support function h(u) = (1/N) sum_i |u . x(i)|. */
inline double support_function(const EmpiricalCentroidBody& body, const Vector& u) {
    if (!u.allFinite()) throw Error(ErrorCode::invalid_input, "support_function: non-finite direction");
    if (u.size() != body.dim()) throw Error(ErrorCode::invalid_input, "support_function: dimension mismatch");
    return (body.points() * u).cwiseAbs().sum() / static_cast<double>(body.count());
}

namespace detail {

constexpr double kGaugeBoundaryTol = 1e-9;

// ---------------------------------------------------------------------------
// Primal engine: bounded-variable simplex on the gauge LP itself.  Columns
// are unit sample directions (variable bounds carry the row norms) plus one
// column for the scalar lambda.  Reference implementation; intended for
// moderate N.
// ---------------------------------------------------------------------------
inline LpSolution gauge_lp_primal(const EmpiricalCentroidBody& body, const Vector& q) {
    const Eigen::Index big_n = body.count();
    const Eigen::Index n = body.dim();
    const double q_norm = q.norm();

    std::vector<Eigen::Index> live;  // rows with nonzero norm
    live.reserve(static_cast<std::size_t>(big_n));
    for (Eigen::Index i = 0; i < big_n; ++i)
        if (body.row_norms()[i] > 0.0) live.push_back(i);

    const Eigen::Index k = static_cast<Eigen::Index>(live.size());
    Matrix a(n, k + 1);
    Vector lower(k + 1), upper(k + 1), c = Vector::Zero(k + 1);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index i = live[static_cast<std::size_t>(j)];
        a.col(j) = body.points().row(i).transpose() / body.row_norms()[i];
        lower[j] = -body.row_norms()[i];
        upper[j] = body.row_norms()[i];
    }
    const double lambda_scale = static_cast<double>(big_n) * q_norm;
    a.col(k) = -q / q_norm;
    lower[k] = 0.0;
    upper[k] = std::numeric_limits<double>::infinity();
    c[k] = 1.0;

    BoundedSimplex simplex(std::move(a), Vector::Zero(n), c, lower, upper);
    const long bland_after = 10 * (big_n + n);
    const long hard_cap = std::max<long>(400 * (big_n + n), 20000);
    SimplexResult r = simplex.solve(bland_after, hard_cap);

    if (r.status == SimplexResult::Status::iteration_limit)
        throw Error(ErrorCode::solver_failure,
                    "gauge LP iteration limit exceeded after " + std::to_string(r.iterations) + " iterations");
    if (r.status != SimplexResult::Status::optimal)
        throw Error(ErrorCode::solver_failure, "gauge LP failed (numerical)");

    LpSolution out;
    out.status = LpSolution::Status::optimal;
    out.objective = r.solution[k] / lambda_scale;
    out.scale = out.objective;
    out.iterations = r.iterations;
    out.coefficients = Vector::Zero(big_n);
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index i = live[static_cast<std::size_t>(j)];
        out.coefficients[i] = std::clamp(r.solution[j] / body.row_norms()[i], -1.0, 1.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dual engine:  lambda* = min { sum_i |x(i) . z| : qhat . z = 1 } / (N |q|).
//
// The dual lives in R^n, so it stays cheap for very large N.  We walk facet
// normals of the zonotope with an active-set scheme: project the signed-sum
// gradient onto the current active subspace, take an exact piecewise-linear
// line minimization (weighted median over breakpoints), and stop when the
// subgradient multipliers certify optimality.  Primal coefficients are then
// reconstructed and verified, so results agree with the simplex engine to
// floating-point accuracy.
// ---------------------------------------------------------------------------

struct DualCertificate {
    double dual_value = 0.0;           // min of sum_i |x_i . z| on the plane
    Vector z;                          // optimal dual point
    Vector sigma;                      // per-row sign of x_i . z (0 on active rows)
    std::vector<Eigen::Index> active;  // rows with x_i . z = 0
    long iterations = 0;
    bool ok = false;
    bool stall_accepted = false;  // converged by tolerance exhaustion, not by certificate
};

class GaugeDualWalk {
  public:
    explicit GaugeDualWalk(const EmpiricalCentroidBody& body, long max_iterations = 0)
        : body_(body), x_(body.points()), xt_(body.points_transposed()), max_iterations_(max_iterations) {}

    // Relative slack on the optimality (subgradient) test.  Zero keeps the
    // exact default; experiment-scale callers may trade the last fraction of
    // a digit for a shorter vertex crawl.
    double multiplier_slack = 0.0;

    // instrumentation for tuning; reset per solve
    long stat_refreshes = 0;
#ifdef HTICA_WALK_TIMERS
    double t_matvec = 0, t_scan = 0, t_heap = 0, t_cod = 0, t_commit = 0, t_refresh = 0;
#endif

    // qhat must be unit length; z0, when given, must satisfy qhat . z0 = 1.
    DualCertificate solve(const Vector& qhat, const Vector* z0) {
        const Eigen::Index big_n = x_.rows();
        const Eigen::Index n = x_.cols();
        const Vector& rn = body_.row_norms();

        z_ = z0 ? *z0 : qhat;
        s_.resize(big_n);
        sigma_.resize(big_n);
        r_.resize(big_n);
        breakpoints_.reserve(static_cast<std::size_t>(big_n));

        double act_tol = 1e-11;
        const long cap = max_iterations_ > 0 ? max_iterations_ : 128 + 48 * n;
        int stalls = 0;
        DualCertificate cert;
        stat_refreshes = 0;

        // out_i = x_i . v, streamed along the transposed layout in blocks
        auto matvec = [&](const Vector& v, Vector& out) {
            const double* vp = v.data();
            double* __restrict op = out.data();
            const double* xtp = xt_.data();
            constexpr Eigen::Index kBlock = 1024;
            for (Eigen::Index b = 0; b < big_n; b += kBlock) {
                const Eigen::Index e = std::min(big_n, b + kBlock);
                for (Eigen::Index i = b; i < e; ++i) op[i] = 0.0;
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double vj = vp[j];
                    if (vj == 0.0) continue;
                    const double* __restrict col = xtp + j * big_n;
                    for (Eigen::Index i = b; i < e; ++i) op[i] += vj * col[i];
                }
            }
        };

        // full recompute of s, sigma, active set, gradient and objective
        auto refresh = [&] {
            ++stat_refreshes;
            matvec(z_, s_);
            const double zn = z_.norm();
            active_.clear();
            double f_acc = 0.0;
            for (Eigen::Index i = 0; i < big_n; ++i) {
                const double si = s_[i];
                f_acc += std::abs(si);
                if (rn[i] == 0.0) {
                    sigma_[i] = 0.0;
                } else if (std::abs(si) <= act_tol * rn[i] * zn) {
                    sigma_[i] = 0.0;
                    active_.push_back(i);
                } else {
                    sigma_[i] = si > 0.0 ? 1.0 : -1.0;
                }
            }
            f_ = f_acc;
            g_.resize(n);
            for (Eigen::Index j = 0; j < n; ++j)
                g_[j] = xt_.row(j).dot(sigma_);
        };

        auto fill_cert = [&](long iter, bool stall_accepted) {
            act_tol = 1e-11;
            refresh();
            cert.dual_value = f_;
            cert.z = z_;
            cert.sigma = sigma_;
            cert.active = active_;
            cert.iterations = iter;
            cert.ok = true;
            cert.stall_accepted = stall_accepted;
        };

        refresh();

        for (long iter = 0;; ++iter) {
            if (iter >= cap) {
                cert.iterations = iter;
                return cert;  // cert.ok == false
            }

            // constraint normals: qhat plus unit active directions
            const Eigen::Index ka = static_cast<Eigen::Index>(active_.size());
            Matrix ct(n, ka + 1);
            ct.col(0) = qhat;
            for (Eigen::Index j = 0; j < ka; ++j) {
                const Eigen::Index row = active_[static_cast<std::size_t>(j)];
                ct.col(j + 1) = x_.row(row).transpose() / rn[row];
            }
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(ct);
            Vector beta = cod.solve(g_);
            Vector proj_resid = g_ - ct * beta;

            Eigen::Index dropped = -1;  // index into active_
            double dropped_sign = 0.0;
            if (proj_resid.norm() > 1e-10 * (1.0 + g_.norm())) {
                d_ = -proj_resid;
            } else {
                // subgradient test: need alpha_j = -beta_{j+1}, |alpha_j| <= |x_row|
                Eigen::Index worst = -1;
                double worst_excess = std::max(1e-9, multiplier_slack);
                for (Eigen::Index j = 0; j < ka; ++j) {
                    const Eigen::Index row = active_[static_cast<std::size_t>(j)];
                    const double excess = std::abs(beta[j + 1]) / rn[row] - 1.0;
                    if (excess > worst_excess) {
                        worst_excess = excess;
                        worst = j;
                    }
                }
                if (worst < 0) {
                    fill_cert(iter, false);
                    return cert;
                }
                // leave the worst active hyperplane toward the profitable side
                Vector rhs = Vector::Zero(ka + 1);
                rhs[worst + 1] = -beta[worst + 1] > 0.0 ? 1.0 : -1.0;
                Eigen::CompleteOrthogonalDecomposition<Matrix> codt(Matrix(ct.transpose()));
                d_ = codt.solve(rhs);
                dropped = worst;
                dropped_sign = rhs[worst + 1];
            }

            // Fused blocked pass: r = X d plus, block-hot, the slope at 0+,
            // candidate breakpoints, and their per-binade weight sums (keyed
            // by ilogb(s)-ilogb(r), bracketing the true binade within one).
            {
                const double* dp = d_.data();
                const double* xtp = xt_.data();
                double* __restrict rp = r_.data();
                const double* sp = s_.data();
                const double* gp_sigma = sigma_.data();
                std::fill(bucket_w_, bucket_w_ + kBuckets, 0.0);
                breakpoints_.clear();
                slope_accum_ = 0.0;
                constexpr Eigen::Index kB = 1024;
                for (Eigen::Index b = 0; b < big_n; b += kB) {
                    const Eigen::Index e = std::min(big_n, b + kB);
                    for (Eigen::Index i = b; i < e; ++i) rp[i] = 0.0;
                    for (Eigen::Index j = 0; j < n; ++j) {
                        const double vj = dp[j];
                        if (vj == 0.0) continue;
                        const double* __restrict col = xtp + j * big_n;
                        for (Eigen::Index i = b; i < e; ++i) rp[i] += vj * col[i];
                    }
                    double slope_blk = 0.0;
                    for (Eigen::Index i = b; i < e; ++i) {
                        const double sg = gp_sigma[i];
                        const double ri = rp[i];
                        if (sg != 0.0) {
                            const double prod = sg * ri;
                            slope_blk += prod;
                            if (prod < 0.0) {
                                const int k = std::clamp(std::ilogb(sp[i]) - std::ilogb(ri) + kOffset, 1, kBuckets - 1);
                                bucket_w_[k] += 2.0 * std::abs(ri);
                                breakpoints_.push_back({-sp[i] / ri, 2.0 * std::abs(ri), i});
                            }
                        } else if (rn[i] != 0.0) {
                            slope_blk += std::abs(ri);  // active rows leave zero at cost |r|
                        }
                    }
                    slope_accum_ += slope_blk;
                }
            }
            const double slope0 = slope_accum_;

            bool stalled = slope0 >= -1e-12 * (1.0 + f_);
            double t_star = 0.0;
            if (!stalled) {
                t_star = resolve_crossing(-slope0, big_n);
                stalled = !(t_star > 0.0) || !std::isfinite(t_star);
            }
            if (stalled) {
                if (++stalls > 4) {
                    // remaining descent is below tolerance: take this point
                    fill_cert(iter, true);
                    return cert;
                }
                act_tol = std::min(act_tol * 100.0, 1e-5);
                refresh();
                continue;
            }
            stalls = 0;

            // commit the move
            z_ += t_star * d_;
            double f_acc = 0.0;
            {
                double* __restrict sp = s_.data();
                const double* __restrict rp = r_.data();
                for (Eigen::Index i = 0; i < big_n; ++i) {
                    sp[i] += t_star * rp[i];
                    f_acc += std::abs(sp[i]);
                }
            }
            f_ = f_acc;
            // rows crossed strictly before t* flip sign; rows at t* turn active
            const double tie = 1e-12 * t_star;
            for (const Break& bp : breakpoints_) {
                if (bp.t > t_star + tie) continue;
                const Eigen::Index i = bp.index;
                if (bp.t >= t_star - tie) {
                    g_ -= sigma_[i] * x_.row(i).transpose();
                    sigma_[i] = 0.0;
                    s_[i] = 0.0;
                    active_.push_back(i);
                } else {
                    sigma_[i] = -sigma_[i];
                    g_ += 2.0 * sigma_[i] * x_.row(i).transpose();
                }
            }
            if (dropped >= 0) {
                // the dropped row leaves the active set with its new sign
                const Eigen::Index row = active_[static_cast<std::size_t>(dropped)];
                active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(dropped));
                sigma_[row] = dropped_sign;
                g_ += dropped_sign * x_.row(row).transpose();
            }
        }
    }

  private:
    struct Break {
        double t;
        double w;
        Eigen::Index index;
    };

    static constexpr int kBuckets = 256;
    static constexpr int kOffset = 128;

    // Resolve the crossing exactly from the pre-collected candidates and
    // their approximate binade sums (key error at most one bucket, so the
    // gathered set provably contains every breakpoint <= t*).
    double resolve_crossing(double want, Eigen::Index) {
        double acc_keyed = 0.0;
        int crossing = -1;
        for (int k = 0; k < kBuckets; ++k) {
            if (acc_keyed + bucket_w_[k] >= want) {
                crossing = k;
                break;
            }
            acc_keyed += bucket_w_[k];
        }
        if (crossing < 0) {
            if (acc_keyed < want * (1.0 - 1e-12)) return std::numeric_limits<double>::infinity();
            crossing = kBuckets - 1;  // fp slack at exhaustion: take everything
        }
        // The keyed bucket exceeds the true binade by at most one, so the
        // crossing breakpoint's true binade is K-1 or K: elements below K-1
        // are safely in front, elements above K are safely beyond.
        scratch_.clear();
        double below = 0.0;
        for (const Break& e : breakpoints_) {
            if (!(e.t > 0.0) || !std::isfinite(e.t)) continue;
            const int k = key_of(e.t);
            if (k < crossing - 1)
                below += e.w;
            else if (k <= crossing)
                scratch_.push_back(e);
        }
        double acc = 0.0;
        std::sort(scratch_.begin(), scratch_.end(), [](const Break& p, const Break& q) { return p.t < q.t; });
        acc = below;
        for (const Break& e : scratch_) {
            acc += e.w;
            if (acc >= want) {
                keep_flips(e.t);
                return e.t;
            }
        }
        if (!scratch_.empty()) {
            keep_flips(scratch_.back().t);
            return scratch_.back().t;  // fp slack inside the candidate set
        }
        return std::numeric_limits<double>::infinity();
    }

    static int key_of(double t) { return std::clamp(std::ilogb(t) + kOffset, 1, kBuckets - 1); }

    // shrink breakpoints_ to the rows with breakpoint <= t* (the flip set)
    void keep_flips(double t_star) {
        const double lim = t_star * (1.0 + 1e-12);
        std::size_t out = 0;
        for (const Break& e : breakpoints_)
            if (e.t > 0.0 && e.t <= lim) breakpoints_[out++] = e;
        breakpoints_.resize(out);
    }



    const EmpiricalCentroidBody& body_;
    const RowMatrix& x_;
    const RowMatrix& xt_;
    long max_iterations_ = 0;
    std::vector<Break> breakpoints_, scratch_;
    double bucket_w_[kBuckets] = {};
    double slope_accum_ = 0.0;
    // per-solve scratch, reused across queries
    Vector z_, s_, sigma_, r_, g_, d_;
    double f_ = 0.0;
    std::vector<Eigen::Index> active_;
};

// Reconstruct primal coefficients from a dual certificate, verifying the
// equality constraints so the certified objective is trustworthy.
inline bool reconstruct_primal(const EmpiricalCentroidBody& body, const Vector& q, const DualCertificate& cert,
                               Vector& lambda_out) {
    const Eigen::Index n = body.dim();
    const double q_norm = q.norm();

    lambda_out = cert.sigma;
    Vector target = cert.dual_value * (q / q_norm);  // = lambda* N q
    Vector resid = target - body.points().transpose() * cert.sigma;

    const Eigen::Index ka = static_cast<Eigen::Index>(cert.active.size());
    if (ka > 0) {
        Matrix cols(n, ka);
        for (Eigen::Index j = 0; j < ka; ++j)
            cols.col(j) = body.points().row(cert.active[static_cast<std::size_t>(j)]).transpose();
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cols);
        Vector mu = cod.solve(resid);
        if (ka > 0 && mu.cwiseAbs().maxCoeff() > 1.0 + 1e-7) return false;
        for (Eigen::Index j = 0; j < ka; ++j)
            lambda_out[cert.active[static_cast<std::size_t>(j)]] = std::clamp(mu[j], -1.0, 1.0);
        resid -= cols * mu;
    }
    return resid.norm() <= 1e-7 * (1.0 + cert.dual_value + body.max_row_norm());
}

inline LpSolution gauge_lp_dual(const EmpiricalCentroidBody& body, const Vector& q) {
    const double q_norm = q.norm();
    Vector qhat = q / q_norm;
    GaugeDualWalk walk(body);
    DualCertificate cert = walk.solve(qhat, nullptr);
    if (cert.ok && cert.stall_accepted && body.count() <= 6000) {
        // converged by tolerance exhaustion only; prefer the exact engine
        return gauge_lp_primal(body, q);
    }
    LpSolution out;
    if (cert.ok && reconstruct_primal(body, q, cert, out.coefficients)) {
        out.status = LpSolution::Status::optimal;
        out.objective = cert.dual_value / (static_cast<double>(body.count()) * q_norm);
        out.scale = out.objective;
        out.iterations = cert.iterations;
        return out;
    }
    if (body.count() <= 6000) return gauge_lp_primal(body, q);
    throw Error(ErrorCode::solver_failure, "gauge dual walk did not converge");
}

}  // namespace detail

enum class GaugeEngine { automatic, primal_simplex, dual_walk };

/**
 * Optimal value and coefficients of the gauge LP.  q = 0 is reported
 * unbounded with objective +inf; q outside the span of the sample yields
 * lambda* = 0 (gauge +inf) with status optimal.
 */
inline LpSolution solve_gauge_lp(const EmpiricalCentroidBody& body, const Vector& q,
                                 GaugeEngine engine = GaugeEngine::automatic) {
    if (q.size() != body.dim()) throw Error(ErrorCode::invalid_input, "gauge query dimension mismatch");
    if (!q.allFinite()) throw Error(ErrorCode::invalid_input, "gauge query must be finite");

    LpSolution out;
    if (q.norm() == 0.0) {
        out.status = LpSolution::Status::unbounded;
        out.objective = std::numeric_limits<double>::infinity();
        out.scale = out.objective;
        out.coefficients = Vector::Zero(body.count());
        return out;
    }
    if (!body.in_span(q)) {
        out.status = LpSolution::Status::optimal;
        out.objective = 0.0;
        out.scale = 0.0;
        out.coefficients = Vector::Zero(body.count());
        return out;
    }
    const bool use_dual =
        engine == GaugeEngine::dual_walk || (engine == GaugeEngine::automatic && body.count() > 256);
    return use_dual ? detail::gauge_lp_dual(body, q) : detail::gauge_lp_primal(body, q);
}

/** Minkowski functional p(q) = 1/lambda*; 0 at the origin, +inf off the span. */
inline double minkowski_functional(const EmpiricalCentroidBody& body, const Vector& q,
                                   GaugeEngine engine = GaugeEngine::automatic) {
    LpSolution sol = solve_gauge_lp(body, q, engine);
    if (sol.status == LpSolution::Status::unbounded) return 0.0;
    if (sol.objective <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / sol.objective;
}

/** Weak membership oracle: YES iff the gauge is <= 1 (up to LP tolerance). */
inline OracleAnswer membership(const EmpiricalCentroidBody& body, const Vector& q, double epsilon,
                               GaugeEngine engine = GaugeEngine::automatic) {
    if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_parameter, "membership epsilon must be > 0");
    OracleAnswer ans;
    ans.epsilon = epsilon;
    ans.gauge = minkowski_functional(body, q, engine);
    ans.yes = ans.gauge <= 1.0 + detail::kGaugeBoundaryTol;
    return ans;
}

// ---------------------------------------------------------------------------
// Batched gauge evaluation with a per-chunk facet cache.
//
// A cached facet normal u yields the dual bound lambda* <= h(u)/(N q.u);
// reconstructing box-feasible coefficients on that facet exhibits a primal
// point of equal value, which pins the optimum exactly, so cache hits are
// certified answers rather than approximations.  Work is split into a fixed
// number of chunks so results do not depend on the number of worker threads.
// ---------------------------------------------------------------------------

struct GaugeBatchOptions {
    int threads = 0;  // 0 = hardware concurrency
    int chunks = 128;
    int cache_capacity = 80;
    GaugeEngine engine = GaugeEngine::automatic;
    // relative slack on the LP optimality test (0 = exact); values around
    // 1e-6 suit large experiment sweeps where thresholds are two-digit
    double multiplier_slack = 0.0;
};

namespace detail {

struct Facet {
    Vector u;        // unit normal
    double h = 0.0;  // sum_i |x_i . u|
    Vector z_f;      // sum of sigma_i x_i over inactive rows
    Matrix active_cols;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    bool has_active = false;
};

class FacetCache {
  public:
    explicit FacetCache(int capacity) : capacity_(static_cast<std::size_t>(std::max(capacity, 1))) {}

    void insert(Facet f) {
        if (facets_.size() < capacity_) {
            facets_.push_back(std::move(f));
        } else {
            facets_[next_] = std::move(f);
            next_ = (next_ + 1) % capacity_;
        }
    }

    const Facet* best_for(const Vector& q, double* c_out) const {
        const Facet* best = nullptr;
        double best_gauge = -1.0;
        for (const Facet& f : facets_) {
            const double c = q.dot(f.u);
            if (c == 0.0) continue;
            const double gauge = std::abs(c) / f.h;
            if (gauge > best_gauge) {
                best_gauge = gauge;
                best = &f;
                if (c_out) *c_out = c;
            }
        }
        return best;
    }

    // Certified gauge from the cache, or NaN if no cached facet certifies q.
    double try_certify(const EmpiricalCentroidBody& body, const Vector& q) const {
        double c = 0.0;
        const Facet* f = best_for(q, &c);
        if (!f) return std::numeric_limits<double>::quiet_NaN();
        const double sgn = c > 0.0 ? 1.0 : -1.0;
        Vector target = (f->h / std::abs(c)) * q - sgn * f->z_f;
        const double scale = 1.0 + f->h + body.max_row_norm();
        if (f->has_active) {
            Vector mu = f->cod.solve(target);
            if (mu.cwiseAbs().maxCoeff() > 1.0 + 1e-9) return std::numeric_limits<double>::quiet_NaN();
            if ((f->active_cols * mu - target).norm() > 1e-9 * scale)
                return std::numeric_limits<double>::quiet_NaN();
        } else if (target.norm() > 1e-9 * scale) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return static_cast<double>(body.count()) * std::abs(c) / f->h;
    }

  private:
    std::vector<Facet> facets_;
    std::size_t capacity_;
    std::size_t next_ = 0;
};

inline Facet facet_from_certificate(const EmpiricalCentroidBody& body, const DualCertificate& cert) {
    Facet f;
    const double zn = cert.z.norm();
    f.u = cert.z / zn;
    f.h = cert.dual_value / zn;
    f.z_f = body.points().transpose() * cert.sigma;
    const Eigen::Index ka = static_cast<Eigen::Index>(cert.active.size());
    if (ka > 0) {
        f.active_cols.resize(body.dim(), ka);
        for (Eigen::Index j = 0; j < ka; ++j)
            f.active_cols.col(j) = body.points().row(cert.active[static_cast<std::size_t>(j)]).transpose();
        f.cod.compute(f.active_cols);
        f.has_active = true;
    }
    return f;
}

}  // namespace detail

/**
 * Gauge of every query row against one body: exact (every value certified),
 * deterministic for any thread count.
 */
inline Vector gauge_batch(const EmpiricalCentroidBody& body, const RowMatrix& queries,
                          const GaugeBatchOptions& opts = {}) {
    const Eigen::Index m = queries.rows();
    Vector out(m);
    if (m == 0) return out;
    if (queries.cols() != body.dim()) throw Error(ErrorCode::invalid_input, "gauge query dimension mismatch");
    body.span_basis();  // force shared lazy init before threads start

    const bool small = body.count() <= 256 && opts.engine != GaugeEngine::dual_walk;
    const int chunk_count = std::max(1, std::min<int>(opts.chunks, static_cast<int>(m)));

    // Warm-start ladder: strided subsamples at ratio 3 give successively
    // better vertices for nearly no cost, so the expensive full-body walk
    // starts close to its destination.
    std::unique_ptr<EmpiricalCentroidBody> sub_body;
    if (!small && body.count() > 4096) {
        const Eigen::Index sub_rows = std::max<Eigen::Index>(1024, body.count() / 8);
        const Eigen::Index stride = body.count() / sub_rows;
        RowMatrix sub(sub_rows, body.dim());
        for (Eigen::Index i = 0; i < sub_rows; ++i) sub.row(i) = body.points().row(i * stride);
        sub_body = std::make_unique<EmpiricalCentroidBody>(SampleMatrix(std::move(sub)));
        sub_body->points_transposed();
        sub_body->span_basis();
    }
    std::atomic<int> next_chunk{0};
    std::atomic<bool> failed{false};
    std::string fail_msg;
    std::mutex fail_mutex;

    // Process queries in coarse direction order: rays through the same facet
    // land in the same chunk, which makes the facet cache effective.  The
    // order is a pure function of the data, so results stay deterministic.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
    if (!small && m > 64) {
        const int kd = static_cast<int>(std::min<Eigen::Index>(3, queries.cols()));
        std::vector<std::array<int, 3>> key(static_cast<std::size_t>(m), {0, 0, 0});
        for (Eigen::Index i = 0; i < m; ++i) {
            const double norm = queries.row(i).norm();
            if (norm > 0.0)
                for (int k = 0; k < kd; ++k)
                    key[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        static_cast<int>(std::floor(queries(i, k) / norm * 20.0));
        }
        std::sort(order.begin(), order.end(), [&key](Eigen::Index a, Eigen::Index b) {
            const auto& ka = key[static_cast<std::size_t>(a)];
            const auto& kb = key[static_cast<std::size_t>(b)];
            if (ka != kb) return ka < kb;
            return a < b;
        });
    }

    const bool use_cache = body.dim() <= 4;  // facets rarely repeat in high dimension
    auto worker = [&] {
        detail::FacetCache cache(use_cache ? opts.cache_capacity : 1);
        detail::GaugeDualWalk walk(body);
        walk.multiplier_slack = opts.multiplier_slack;
        std::unique_ptr<detail::GaugeDualWalk> sub_walk;
        if (sub_body) {
            sub_walk = std::make_unique<detail::GaugeDualWalk>(*sub_body);
            sub_walk->multiplier_slack = std::max(opts.multiplier_slack, 1e-8);
        }
        for (;;) {
            const int chunk = next_chunk.fetch_add(1);
            if (chunk >= chunk_count || failed.load()) return;
            const Eigen::Index begin = m * chunk / chunk_count;
            const Eigen::Index end = m * (chunk + 1) / chunk_count;
            detail::FacetCache fresh(opts.cache_capacity);
            cache = std::move(fresh);  // chunk-local cache: deterministic results
            for (Eigen::Index pos = begin; pos < end; ++pos) {
                const Eigen::Index i = order[static_cast<std::size_t>(pos)];
                try {
                    Vector q = queries.row(i).transpose();
                    const double q_norm = q.norm();
                    if (q_norm == 0.0) {
                        out[i] = 0.0;
                        continue;
                    }
                    if (!body.in_span(q)) {
                        out[i] = std::numeric_limits<double>::infinity();
                        continue;
                    }
                    if (small) {
                        out[i] = 1.0 / detail::gauge_lp_primal(body, q).objective;
                        continue;
                    }
                    if (use_cache) {
                        const double cached = cache.try_certify(body, q);
                        if (std::isfinite(cached)) {
                            out[i] = cached;
                            continue;
                        }
                    }
                    Vector qhat = q / q_norm;
                    Vector z0;
                    const Vector* z0_ptr = nullptr;
                    double c = 0.0;
                    if (use_cache) {
                        if (const detail::Facet* warm = cache.best_for(qhat, &c)) {
                            // only a directionally close facet makes a sane start
                            if (std::abs(c) > 0.2) {
                                z0 = warm->u / c;
                                z0_ptr = &z0;
                            }
                        }
                    }
                    if (!z0_ptr && sub_walk) {
                        detail::DualCertificate sub = sub_walk->solve(qhat, nullptr);
                        if (sub.ok && sub.dual_value > 0.0) {
                            z0 = sub.z;
                            z0_ptr = &z0;
                        }
                    }
                    detail::DualCertificate cert = walk.solve(qhat, z0_ptr);
                    if (!cert.ok && z0_ptr) cert = walk.solve(qhat, nullptr);
                    if ((!cert.ok || cert.stall_accepted) && body.count() <= 6000) {
                        out[i] = 1.0 / detail::gauge_lp_primal(body, q).objective;
                        continue;
                    }
                    if (!cert.ok) throw Error(ErrorCode::solver_failure, "gauge dual walk did not converge");
                    out[i] = static_cast<double>(body.count()) * q_norm / cert.dual_value;
                    if (use_cache) cache.insert(detail::facet_from_certificate(body, cert));
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(fail_mutex);
                    failed.store(true);
                    fail_msg = e.what();
                    return;
                }
            }
        }
    };

    int threads = opts.threads > 0 ? opts.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, chunk_count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw Error(ErrorCode::solver_failure, "gauge batch failed: " + fail_msg);
    return out;
}

// ---------------------------------------------------------------------------
// Sample-size bound calculators (advisory; callers supply their own N).
// ---------------------------------------------------------------------------

/**
 * Smallest N with N >= (8M/eps)^(1/2 + 1/gamma) and tail(N) <= delta, where
 * tail(N) = 8M/(eps^2 N^(gamma/3)).  delta = 1 makes the tail requirement
 * vacuous, since it bounds a probability.
 */
inline long long chebyshev_sample_bound(double m, double gamma, double epsilon, double delta) {
    if (!(m >= 1.0)) throw Error(ErrorCode::invalid_parameter, "chebyshev_sample_bound: M must be >= 1");
    if (!(gamma > 0.0 && gamma < 1.0))
        throw Error(ErrorCode::invalid_parameter, "chebyshev_sample_bound: gamma must be in (0,1)");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "chebyshev_sample_bound: epsilon must be in (0,1]");
    if (!(delta > 0.0 && delta <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "chebyshev_sample_bound: delta must be in (0,1]");
    double n = std::ceil(std::pow(8.0 * m / epsilon, 0.5 + 1.0 / gamma));
    if (delta < 1.0) n = std::max(n, std::ceil(std::pow(8.0 * m / (epsilon * epsilon * delta), 3.0 / gamma)));
    return static_cast<long long>(n);
}

/** Smallest N with N >= (16 M n^4 / (eps'^2 delta'))^(1/2 + 3/gamma). */
inline long long inner_ball_bound(double m, double gamma, double epsilon_prime, double delta_prime,
                                  Eigen::Index n) {
    if (!(m >= 1.0)) throw Error(ErrorCode::invalid_parameter, "inner_ball_bound: M must be >= 1");
    if (!(gamma > 0.0)) throw Error(ErrorCode::invalid_parameter, "inner_ball_bound: gamma must be > 0");
    if (!(epsilon_prime > 0.0 && epsilon_prime <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "inner_ball_bound: epsilon' must be in (0,1]");
    if (!(delta_prime > 0.0 && delta_prime <= 1.0))
        throw Error(ErrorCode::invalid_parameter, "inner_ball_bound: delta' must be in (0,1]");
    if (n < 1) throw Error(ErrorCode::invalid_parameter, "inner_ball_bound: n must be >= 1");
    const double dim = static_cast<double>(n);
    const double base = 16.0 * m * dim * dim * dim * dim / (epsilon_prime * epsilon_prime * delta_prime);
    return static_cast<long long>(std::ceil(std::pow(base, 0.5 + 3.0 / gamma)));
}

}  // namespace htica

#endif  // HTICA_CENTROID_HPP_
