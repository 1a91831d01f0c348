#pragma once

// Revised simplex (two phases, Bland's anti-cycling rule) over x >= 0.
//
// Duals follow the minimisation convention: y_i >= 0 on ">=" rows, y_i <= 0
// on "<=" rows, free on "=" rows, with c - A^T y >= 0 at an optimum. For a
// maximisation problem the reported y certifies max c.x <= b.y instead.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exwb/error.hpp"

namespace exwb {

enum class RowSense { LessEqual, GreaterEqual, Equal };

struct LinearProgram {
    struct Row {
        std::vector<std::pair<std::size_t, double>> coeffs;
        RowSense sense = RowSense::LessEqual;
        double rhs = 0.0;
    };

    std::size_t num_vars = 0;
    std::vector<double> objective;  // size num_vars
    bool maximize = false;
    std::vector<Row> rows;

    LinearProgram() = default;
    explicit LinearProgram(std::size_t n, bool maximise = false)
        : num_vars(n), objective(n, 0.0), maximize(maximise) {}

    void add_row(std::vector<std::pair<std::size_t, double>> coeffs, RowSense sense, double rhs) {
        rows.push_back({std::move(coeffs), sense, rhs});
    }
    void add_dense_row(const std::vector<double>& coeffs, RowSense sense, double rhs) {
        std::vector<std::pair<std::size_t, double>> sparse;
        for (std::size_t j = 0; j < coeffs.size(); ++j)
            if (coeffs[j] != 0.0) sparse.emplace_back(j, coeffs[j]);
        add_row(std::move(sparse), sense, rhs);
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
    }
    return "?";
}

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    std::vector<double> x;
    std::vector<double> dual;    // at optimum
    double dual_value = 0.0;     // b.y
    std::vector<double> farkas;  // when infeasible: f with sign(f) per row, A^T f >= 0, b.f < 0
    std::vector<double> ray;     // when unbounded: feasible direction improving the objective
    std::size_t iterations = 0;
};

namespace detail {

class RevisedSimplex {
public:
    static constexpr double tol = 1e-9;

    explicit RevisedSimplex(const LinearProgram& lp) : lp_(lp) {
        m_ = lp.rows.size();
        n_ = lp.num_vars;
        // Columns: structural [0,n), slacks [n, n+m), artificials [n+m, n+2m).
        const std::size_t cols = n_ + 2 * m_;
        a_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(cols));
        b_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
        sign_.assign(m_, 1.0);
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& row = lp.rows[i];
            sign_[i] = row.rhs < 0 ? -1.0 : 1.0;
            const auto r = static_cast<Eigen::Index>(i);
            for (auto [j, v] : row.coeffs) {
                if (j >= n_) throw Error("LP row references variable " + std::to_string(j) + " out of range");
                if (!std::isfinite(v)) throw Error("LP coefficients must be finite");
                a_(r, static_cast<Eigen::Index>(j)) += sign_[i] * v;
            }
            if (row.sense == RowSense::LessEqual) a_(r, static_cast<Eigen::Index>(n_ + i)) = sign_[i];
            if (row.sense == RowSense::GreaterEqual) a_(r, static_cast<Eigen::Index>(n_ + i)) = -sign_[i];
            a_(r, static_cast<Eigen::Index>(n_ + m_ + i)) = 1.0;
            b_(r) = sign_[i] * row.rhs;
        }
        cols_ = cols;
    }

    LpSolution solve() {
        LpSolution sol;
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) basis_[i] = n_ + m_ + i;
        binv_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        xb_ = b_;

        // Phase I
        Eigen::VectorXd c1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols_));
        for (std::size_t i = 0; i < m_; ++i) c1(static_cast<Eigen::Index>(n_ + m_ + i)) = 1.0;
        run(c1, true, sol);
        const double infeas = c1.dot(primal());
        if (infeas > tol * (1.0 + b_.lpNorm<Eigen::Infinity>())) {
            const Eigen::VectorXd y = duals(c1);
            sol.status = LpStatus::Infeasible;
            sol.farkas.resize(m_);
            for (std::size_t i = 0; i < m_; ++i) sol.farkas[i] = -sign_[i] * y(static_cast<Eigen::Index>(i));
            return sol;
        }

        // Phase II
        Eigen::VectorXd c2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols_));
        const double s = lp_.maximize ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n_; ++j)
            c2(static_cast<Eigen::Index>(j)) = s * (j < lp_.objective.size() ? lp_.objective[j] : 0.0);
        if (!run(c2, false, sol)) {
            sol.status = LpStatus::Unbounded;
            return sol;
        }
        const Eigen::VectorXd x = primal();
        sol.status = LpStatus::Optimal;
        sol.x.assign(x.data(), x.data() + n_);
        sol.value = 0.0;
        for (std::size_t j = 0; j < n_ && j < lp_.objective.size(); ++j) sol.value += lp_.objective[j] * sol.x[j];
        const Eigen::VectorXd y = duals(c2);
        sol.dual.resize(m_);
        sol.dual_value = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            sol.dual[i] = s * sign_[i] * y(static_cast<Eigen::Index>(i));
            sol.dual_value += sol.dual[i] * lp_.rows[i].rhs;
        }
        return sol;
    }

private:
    Eigen::VectorXd primal() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols_));
        for (std::size_t i = 0; i < m_; ++i) x(static_cast<Eigen::Index>(basis_[i])) = xb_(static_cast<Eigen::Index>(i));
        return x;
    }

    Eigen::VectorXd duals(const Eigen::VectorXd& c) const {
        Eigen::VectorXd cb(static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) cb(static_cast<Eigen::Index>(i)) = c(static_cast<Eigen::Index>(basis_[i]));
        return binv_.transpose() * cb;
    }

    bool is_artificial(std::size_t j) const { return j >= n_ + m_; }

    void refactor() {
        Eigen::MatrixXd bm(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(m_));
        for (std::size_t i = 0; i < m_; ++i) bm.col(static_cast<Eigen::Index>(i)) = a_.col(static_cast<Eigen::Index>(basis_[i]));
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(bm);
        binv_ = lu.inverse();
        xb_ = binv_ * b_;
    }

    // Returns false if the objective is unbounded below.
    bool run(const Eigen::VectorXd& c, bool phase_one, LpSolution& sol) {
        std::vector<bool> in_basis(cols_, false);
        for (auto j : basis_) in_basis[j] = true;
        std::size_t since_refactor = 0;
        const std::size_t max_iter = 50000 + 100 * (cols_ + m_);
        for (std::size_t it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd y = duals(c);
            // Bland: lowest-index improving column.
            std::size_t enter = cols_;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (in_basis[j] || (!phase_one && is_artificial(j))) continue;
                const double d = c(static_cast<Eigen::Index>(j)) - y.dot(a_.col(static_cast<Eigen::Index>(j)));
                if (d < -tol) {
                    enter = j;
                    break;
                }
            }
            if (enter == cols_) return true;

            const Eigen::VectorXd alpha = binv_ * a_.col(static_cast<Eigen::Index>(enter));
            std::size_t leave = m_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double ai = alpha(static_cast<Eigen::Index>(i));
                double ratio;
                if (!phase_one && is_artificial(basis_[i]) && std::abs(ai) > tol)
                    ratio = 0.0;  // artificial must stay at zero
                else if (ai > tol)
                    ratio = std::max(0.0, xb_(static_cast<Eigen::Index>(i))) / ai;
                else
                    continue;
                if (leave == m_ || ratio < best - tol * (1.0 + best)) {
                    best = ratio;
                    leave = i;
                } else if (std::abs(ratio - best) <= tol * (1.0 + best) && basis_[i] < basis_[leave]) {
                    best = std::min(best, ratio);
                    leave = i;
                }
            }
            if (leave == m_) {
                sol.ray.assign(n_, 0.0);
                if (enter < n_) sol.ray[enter] = 1.0;
                for (std::size_t i = 0; i < m_; ++i)
                    if (basis_[i] < n_) sol.ray[basis_[i]] = -alpha(static_cast<Eigen::Index>(i));
                return false;
            }

            // Pivot.
            const auto l = static_cast<Eigen::Index>(leave);
            const double piv = alpha(l);
            const double step = xb_(l) / piv;
            xb_ -= step * alpha;
            xb_(l) = step;
            const Eigen::RowVectorXd prow = binv_.row(l) / piv;
            for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m_); ++i)
                if (i != l) binv_.row(i) -= alpha(i) * prow;
            binv_.row(l) = prow;
            in_basis[basis_[leave]] = false;
            in_basis[enter] = true;
            basis_[leave] = enter;
            ++sol.iterations;
            if (++since_refactor >= 50) {
                refactor();
                since_refactor = 0;
            }
        }
        throw Error("simplex iteration limit reached");
    }

    const LinearProgram& lp_;
    std::size_t m_ = 0, n_ = 0, cols_ = 0;
    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    std::vector<double> sign_;
    std::vector<std::size_t> basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
};

} // namespace detail

inline LpSolution solve_lp(const LinearProgram& lp) {
    if (!lp.objective.empty() && lp.objective.size() != lp.num_vars)
        throw Error("objective has " + std::to_string(lp.objective.size()) + " coefficients for " +
                    std::to_string(lp.num_vars) + " variables");
    for (double c : lp.objective)
        if (!std::isfinite(c)) throw Error("LP objective must be finite");
    return detail::RevisedSimplex(lp).solve();
}

// ---- independent re-checks ----------------------------------------------

/// Max violation of the rows and of x >= 0 at point x.
inline double lp_primal_residual(const LinearProgram& lp, const std::vector<double>& x) {
    double worst = 0.0;
    for (double v : x) worst = std::max(worst, -v);
    for (const auto& row : lp.rows) {
        double ax = 0.0;
        for (auto [j, v] : row.coeffs) ax += v * x.at(j);
        const double d = ax - row.rhs;
        if (row.sense == RowSense::LessEqual) worst = std::max(worst, d);
        if (row.sense == RowSense::GreaterEqual) worst = std::max(worst, -d);
        if (row.sense == RowSense::Equal) worst = std::max(worst, std::abs(d));
    }
    return worst;
}

/// Margin by which `f` proves infeasibility (positive = proof, up to `slack`
/// violations of the sign/column conditions, which are charged against it).
inline double farkas_margin(const LinearProgram& lp, const std::vector<double>& f) {
    if (f.size() != lp.rows.size()) return -std::numeric_limits<double>::infinity();
    double sign_violation = 0.0;
    std::vector<double> col(lp.num_vars, 0.0);
    double fb = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto& row = lp.rows[i];
        if (row.sense == RowSense::LessEqual) sign_violation = std::max(sign_violation, -f[i]);
        if (row.sense == RowSense::GreaterEqual) sign_violation = std::max(sign_violation, f[i]);
        for (auto [j, v] : row.coeffs) col[j] += f[i] * v;
        fb += f[i] * row.rhs;
        scale = std::max(scale, std::abs(f[i]));
    }
    if (scale == 0.0) return -std::numeric_limits<double>::infinity();
    double col_violation = 0.0;
    for (double c : col) col_violation = std::max(col_violation, -c);
    return (-fb - (sign_violation + col_violation) * static_cast<double>(lp.num_vars + lp.rows.size())) / scale;
}

} // namespace exwb
