#ifndef HTICA_LP_SIMPLEX_HPP_
#define HTICA_LP_SIMPLEX_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "htica/errors.hpp"
#include "htica/types.hpp"

namespace htica {

struct SimplexResult {
    enum class Status { optimal, unbounded, infeasible, iteration_limit };
    Status status = Status::optimal;
    double objective = 0.0;
    Vector solution;  // structural variables
    long iterations = 0;
};

/**
 * Dense two-phase primal simplex for bounded variables:
 *
 *   maximize c'z   subject to  A z = b,  lower <= z <= upper.
 *
 * Nonbasic variables rest at a finite bound; artificial variables seed the
 * basis for phase 1.  Entering variable by Dantzig rule, switching to Bland's
 * rule after `bland_after` iterations so cycling cannot occur.  Basic values
 * are recomputed from a fresh LU factorization every iteration; with the
 * small row counts used here (n <= ~20 equality rows) that costs nothing and
 * avoids drift.
 */
class BoundedSimplex {
  public:
    BoundedSimplex(Matrix a, Vector b, Vector c, Vector lower, Vector upper)
        : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), lower_(std::move(lower)), upper_(std::move(upper)) {
        m_ = a_.rows();
        ns_ = a_.cols();
        for (Eigen::Index j = 0; j < ns_; ++j) {
            if (!std::isfinite(lower_[j]) && !std::isfinite(upper_[j]))
                throw Error(ErrorCode::invalid_parameter, "simplex requires one finite bound per variable");
            if (lower_[j] > upper_[j])
                throw Error(ErrorCode::invalid_parameter, "simplex bounds crossed");
        }
    }

    SimplexResult solve(long bland_after, long hard_cap) {
        const Eigen::Index total = ns_ + m_;
        status_.assign(static_cast<std::size_t>(total), VarStatus::at_lower);
        value_.assign(static_cast<std::size_t>(total), 0.0);
        lo_.resize(total);
        up_.resize(total);
        cols_ = Matrix::Zero(m_, total);
        cols_.leftCols(ns_) = a_;

        for (Eigen::Index j = 0; j < ns_; ++j) {
            lo_[j] = lower_[j];
            up_[j] = upper_[j];
            if (std::isfinite(lo_[j]) && (!std::isfinite(up_[j]) || std::abs(lo_[j]) <= std::abs(up_[j]))) {
                status_[j] = VarStatus::at_lower;
                value_[j] = lo_[j];
            } else {
                status_[j] = VarStatus::at_upper;
                value_[j] = up_[j];
            }
        }

        Vector residual = b_;
        for (Eigen::Index j = 0; j < ns_; ++j)
            if (value_[j] != 0.0) residual -= cols_.col(j) * value_[j];

        basis_.resize(m_);
        for (Eigen::Index r = 0; r < m_; ++r) {
            const Eigen::Index var = ns_ + r;
            cols_(r, var) = residual[r] >= 0.0 ? 1.0 : -1.0;
            lo_[var] = 0.0;
            up_[var] = std::numeric_limits<double>::infinity();
            status_[static_cast<std::size_t>(var)] = VarStatus::basic;
            basis_[r] = var;
        }

        SimplexResult res;
        const double feas_tol = 1e-8 * (1.0 + b_.cwiseAbs().maxCoeff());

        bool artificials_needed = residual.cwiseAbs().maxCoeff() > 0.0;
        if (artificials_needed) {
            Vector phase1 = Vector::Zero(total);
            for (Eigen::Index r = 0; r < m_; ++r) phase1[ns_ + r] = -1.0;
            Status st = run(phase1, bland_after, hard_cap, res.iterations);
            if (st == Status::iteration_limit) {
                res.status = SimplexResult::Status::iteration_limit;
                return res;
            }
            double infeas = 0.0;
            for (Eigen::Index r = 0; r < m_; ++r) infeas += value_[static_cast<std::size_t>(ns_ + r)];
            if (infeas > feas_tol) {
                res.status = SimplexResult::Status::infeasible;
                return res;
            }
        }
        // pin artificials for phase 2
        for (Eigen::Index r = 0; r < m_; ++r) up_[ns_ + r] = 0.0;

        Vector phase2 = Vector::Zero(total);
        phase2.head(ns_) = c_;
        Status st = run(phase2, bland_after, hard_cap, res.iterations);
        if (st == Status::iteration_limit) {
            res.status = SimplexResult::Status::iteration_limit;
            return res;
        }
        if (st == Status::unbounded) {
            res.status = SimplexResult::Status::unbounded;
            return res;
        }

        res.status = SimplexResult::Status::optimal;
        res.solution.resize(ns_);
        for (Eigen::Index j = 0; j < ns_; ++j) res.solution[j] = value_[static_cast<std::size_t>(j)];
        res.objective = c_.dot(res.solution);
        return res;
    }

  private:
    enum class VarStatus { basic, at_lower, at_upper };
    enum class Status { optimal, unbounded, iteration_limit };

    // One simplex run with the given objective; shared variable state.
    Status run(const Vector& c, long bland_after, long hard_cap, long& iters) {
        const Eigen::Index total = ns_ + m_;
        const double dtol = 1e-9 * (1.0 + c.cwiseAbs().maxCoeff());

        for (;;) {
            if (iters >= hard_cap) return Status::iteration_limit;
            Matrix basis_mat(m_, m_);
            for (Eigen::Index r = 0; r < m_; ++r) basis_mat.col(r) = cols_.col(basis_[r]);
            Eigen::PartialPivLU<Matrix> lu(basis_mat);

            // basic values from the bound values of nonbasic variables
            Vector rhs = b_;
            for (Eigen::Index j = 0; j < total; ++j) {
                if (status_[static_cast<std::size_t>(j)] == VarStatus::basic) continue;
                const double v = value_[static_cast<std::size_t>(j)];
                if (v != 0.0) rhs -= cols_.col(j) * v;
            }
            Vector xb = lu.solve(rhs);
            for (Eigen::Index r = 0; r < m_; ++r) value_[static_cast<std::size_t>(basis_[r])] = xb[r];

            Vector cb(m_);
            for (Eigen::Index r = 0; r < m_; ++r) cb[r] = c[basis_[r]];
            Vector y = lu.transpose().solve(cb);

            // entering variable
            const bool bland = iters >= bland_after;
            Eigen::Index enter = -1;
            double best = dtol;
            for (Eigen::Index j = 0; j < total; ++j) {
                const VarStatus stj = status_[static_cast<std::size_t>(j)];
                if (stj == VarStatus::basic) continue;
                if (lo_[j] == up_[j]) continue;  // pinned
                const double d = c[j] - y.dot(cols_.col(j));
                const bool eligible = (stj == VarStatus::at_lower && d > dtol) || (stj == VarStatus::at_upper && d < -dtol);
                if (!eligible) continue;
                if (bland) {
                    enter = j;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    enter = j;
                }
            }
            if (enter < 0) return Status::optimal;

            const double dir = status_[static_cast<std::size_t>(enter)] == VarStatus::at_lower ? 1.0 : -1.0;
            Vector w = lu.solve(cols_.col(enter));
            const double ptol = 1e-11 * std::max(1.0, w.cwiseAbs().maxCoeff());

            const double t_flip = up_[enter] - lo_[enter];  // bound flip distance (may be inf)
            const double tie = 1e-12;
            double t_basic = std::numeric_limits<double>::infinity();
            Eigen::Index leave_row = -1;
            bool leave_to_upper = false;
            for (Eigen::Index r = 0; r < m_; ++r) {
                const double delta = -dir * w[r];  // change of basic r per unit step
                const Eigen::Index var = basis_[r];
                double t;
                bool to_upper;
                if (delta > ptol) {
                    if (!std::isfinite(up_[var])) continue;
                    t = (up_[var] - value_[static_cast<std::size_t>(var)]) / delta;
                    to_upper = true;
                } else if (delta < -ptol) {
                    if (!std::isfinite(lo_[var])) continue;
                    t = (value_[static_cast<std::size_t>(var)] - lo_[var]) / (-delta);
                    to_upper = false;
                } else {
                    continue;
                }
                if (t < 0.0) t = 0.0;
                if (t < t_basic - tie) {
                    t_basic = t;
                    leave_row = r;
                    leave_to_upper = to_upper;
                } else if (t <= t_basic + tie && leave_row >= 0 && var < basis_[leave_row]) {
                    t_basic = std::min(t_basic, t);
                    leave_row = r;
                    leave_to_upper = to_upper;
                }
            }

            if (!std::isfinite(t_basic) && !std::isfinite(t_flip)) return Status::unbounded;

            ++iters;
            if (leave_row < 0 || t_flip < t_basic) {
                // entering variable travels to its opposite bound
                status_[static_cast<std::size_t>(enter)] =
                    dir > 0.0 ? VarStatus::at_upper : VarStatus::at_lower;
                value_[static_cast<std::size_t>(enter)] = dir > 0.0 ? up_[enter] : lo_[enter];
            } else {
                const double t_best = t_basic;
                const Eigen::Index leave_var = basis_[leave_row];
                status_[static_cast<std::size_t>(leave_var)] = leave_to_upper ? VarStatus::at_upper : VarStatus::at_lower;
                value_[static_cast<std::size_t>(leave_var)] = leave_to_upper ? up_[leave_var] : lo_[leave_var];
                status_[static_cast<std::size_t>(enter)] = VarStatus::basic;
                value_[static_cast<std::size_t>(enter)] =
                    (dir > 0.0 ? lo_[enter] : up_[enter]) + dir * t_best;
                basis_[leave_row] = enter;
            }
        }
    }

    Matrix a_;
    Vector b_, c_, lower_, upper_;
    Eigen::Index m_ = 0, ns_ = 0;

    Matrix cols_;
    std::vector<VarStatus> status_;
    std::vector<double> value_;
    Vector lo_, up_;
    std::vector<Eigen::Index> basis_;
};

}  // namespace htica

#endif  // HTICA_LP_SIMPLEX_HPP_
