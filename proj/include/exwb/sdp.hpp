#pragma once

// Small dense semidefinite programming.
//
// Standard form over a block-diagonal variable X = diag(X_1, ..., X_p, x_lp)
// with dense symmetric blocks X_b >= 0 and a nonnegative vector x_lp:
//   (P) min <C, X>  s.t. <A_i, X> = b_i,  X >= 0
//   (D) max b.y     s.t. Z = C - sum_i y_i A_i >= 0
// solved by an infeasible primal-dual interior point method (HKM direction,
// Mehrotra predictor-corrector). Feasibility questions go through phase-I
// programs that are strictly feasible by construction, so every negative
// answer comes with a certificate whose margin is recomputed from scratch.
//
// Two front ends share the engine: SemidefiniteProgram (constraints on X) and
// LinearMatrixInequality (F0 + sum_k y_k F_k >= 0 over a box |y_k| <= R).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "exwb/error.hpp"

namespace exwb {

inline constexpr std::size_t sdp_order_cap = 512;
inline constexpr double sdp_feasibility_tolerance = 1e-7;
inline constexpr double sdp_gap_tolerance = 1e-6;

/// Marks an entry of the nonnegative vector part of the variable.
inline constexpr std::size_t lp_block = static_cast<std::size_t>(-1);

/// Sparse block-diagonal symmetric matrix given entry by entry. Off-diagonal
/// dense entries must be listed at both (row, col) and (col, row); repeated
/// entries add up. For lp_block entries `row` indexes the vector part.
struct SdpMatrix {
    struct Entry {
        std::size_t block, row, col;
        double value;
    };
    std::vector<Entry> entries;

    void add(std::size_t block, std::size_t row, std::size_t col, double v) { entries.push_back({block, row, col, v}); }
    void add_sym(std::size_t block, std::size_t row, std::size_t col, double v) {
        add(block, row, col, v);
        if (row != col) add(block, col, row, v);
    }
    void add_lp(std::size_t i, double v) { entries.push_back({lp_block, i, 0, v}); }
};

struct BlockMatrix {
    std::vector<Eigen::MatrixXd> dense;
    Eigen::VectorXd lp;
};

struct SemidefiniteProgram {
    std::vector<std::size_t> blocks;  // orders of the dense blocks
    std::size_t lp_size = 0;
    std::vector<SdpMatrix> constraints;
    std::vector<double> rhs;
    std::optional<SdpMatrix> objective;  // maximise <C, X> when present
    // Known bound on trace(X) over the feasible set; lets an infeasibility
    // certificate absorb a slightly negative eigenvalue.
    std::optional<double> trace_bound;
};

enum class SdpStatus { Optimal, Feasible, Infeasible, Inconclusive };

inline const char* to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Feasible: return "feasible";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct SdpSolution {
    SdpStatus status = SdpStatus::Inconclusive;
    double value = 0.0;             // optimisation mode: <C, X>
    BlockMatrix X;                  // primal point (feasible / optimal)
    std::vector<double> y;          // dual multipliers (optimisation mode)
    double gap = 0.0;               // relative primal-dual gap
    double primal_residual = 0.0;   // max |<A_i, X> - b_i|
    double min_eigenvalue = 0.0;    // over the blocks of X
    std::vector<double> certificate;  // infeasible: y with sum y_i A_i >= 0, b.y < 0
    double certificate_margin = 0.0;
    std::size_t iterations = 0;
    bool used_fallback = false;
};

struct SdpOptions {
    std::size_t max_iterations = 120;
    double tolerance = 1e-9;  // engine stopping rule (relative residuals and gap)
    double feasibility_tolerance = sdp_feasibility_tolerance;
    std::ostream* log = nullptr;  // per-iteration dump when set
};

namespace detail {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Entries grouped per block with duplicates merged; symmetric by validation.
struct CompiledMatrix {
    std::vector<std::vector<std::tuple<std::size_t, std::size_t, double>>> dense;
    std::vector<std::pair<std::size_t, double>> lp;
    double norm2 = 0.0;
};

struct Shape {
    std::vector<std::size_t> blocks;
    std::size_t lp = 0;

    std::size_t order() const {
        std::size_t n = lp;
        for (auto b : blocks) n += b;
        return n;
    }
    BlockMatrix zero() const {
        BlockMatrix m;
        for (auto b : blocks) m.dense.push_back(Mat::Zero(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)));
        m.lp = Vec::Zero(static_cast<Eigen::Index>(lp));
        return m;
    }
    BlockMatrix identity(double s) const {
        BlockMatrix m = zero();
        for (auto& d : m.dense) d.diagonal().setConstant(s);
        m.lp.setConstant(s);
        return m;
    }
};

inline CompiledMatrix compile(const SdpMatrix& a, const Shape& shape, const std::string& what) {
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> acc;
    std::map<std::size_t, double> lp;
    for (const auto& e : a.entries) {
        if (!std::isfinite(e.value)) throw Error(what + ": non-finite coefficient");
        if (e.block == lp_block) {
            if (e.row >= shape.lp) throw Error(what + ": vector index out of range");
            lp[e.row] += e.value;
            continue;
        }
        if (e.block >= shape.blocks.size() || e.row >= shape.blocks[e.block] || e.col >= shape.blocks[e.block])
            throw Error(what + ": entry out of range");
        acc[{e.block, e.row, e.col}] += e.value;
    }
    CompiledMatrix out;
    out.dense.resize(shape.blocks.size());
    for (const auto& [key, v] : acc) {
        const auto [b, r, c] = key;
        const auto it = acc.find({b, c, r});
        const double partner = it == acc.end() ? 0.0 : it->second;
        if (std::abs(partner - v) > 1e-14 * std::max(1.0, std::abs(v))) throw Error(what + " is not symmetric");
        if (v != 0.0) {
            out.dense[b].emplace_back(r, c, v);
            out.norm2 += v * v;
        }
    }
    for (const auto& [i, v] : lp)
        if (v != 0.0) {
            out.lp.emplace_back(i, v);
            out.norm2 += v * v;
        }
    return out;
}

inline double inner(const CompiledMatrix& a, const BlockMatrix& x) {
    double s = 0.0;
    for (std::size_t b = 0; b < a.dense.size(); ++b)
        for (const auto& [r, c, v] : a.dense[b]) s += v * x.dense[b](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (const auto& [i, v] : a.lp) s += v * x.lp(static_cast<Eigen::Index>(i));
    return s;
}

inline void add_scaled(BlockMatrix& out, const CompiledMatrix& a, double s) {
    if (s == 0.0) return;
    for (std::size_t b = 0; b < a.dense.size(); ++b)
        for (const auto& [r, c, v] : a.dense[b]) out.dense[b](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += s * v;
    for (const auto& [i, v] : a.lp) out.lp(static_cast<Eigen::Index>(i)) += s * v;
}

inline double inner(const BlockMatrix& a, const BlockMatrix& b) {
    double s = a.lp.dot(b.lp);
    for (std::size_t k = 0; k < a.dense.size(); ++k) s += (a.dense[k].array() * b.dense[k].array()).sum();
    return s;
}

inline double norm(const BlockMatrix& a) { return std::sqrt(inner(a, a)); }

inline void axpy(BlockMatrix& y, double s, const BlockMatrix& x) {
    for (std::size_t k = 0; k < y.dense.size(); ++k) y.dense[k] += s * x.dense[k];
    y.lp += s * x.lp;
}

inline double min_eigenvalue(const BlockMatrix& a) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& d : a.dense)
        if (d.rows() > 0) m = std::min(m, Eigen::SelfAdjointEigenSolver<Mat>(d, Eigen::EigenvaluesOnly).eigenvalues()(0));
    if (a.lp.size() > 0) m = std::min(m, a.lp.minCoeff());
    return m;
}

// Largest alpha with x + alpha dx >= 0 (infinity if unrestricted).
inline double max_step(const BlockMatrix& x, const BlockMatrix& dx) {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.dense.size(); ++k) {
        if (x.dense[k].rows() == 0) continue;
        Eigen::LLT<Mat> llt(x.dense[k]);
        if (llt.info() != Eigen::Success) return 0.0;
        const Mat l = llt.matrixL();
        Mat t = l.triangularView<Eigen::Lower>().solve(dx.dense[k]);
        t = l.triangularView<Eigen::Lower>().solve(t.transpose().eval()).transpose().eval();
        const Mat sym = 0.5 * (t + t.transpose());
        const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(sym, Eigen::EigenvaluesOnly).eigenvalues()(0);
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
    }
    for (Eigen::Index i = 0; i < x.lp.size(); ++i)
        if (dx.lp(i) < 0.0) alpha = std::min(alpha, -x.lp(i) / dx.lp(i));
    return alpha;
}

struct StandardForm {
    Shape shape;
    std::vector<CompiledMatrix> a;
    Vec b;
    CompiledMatrix c;
};

struct EngineResult {
    bool converged = false;
    BlockMatrix x, z;
    Vec y;
    double primal_value = 0.0, dual_value = 0.0;
    double primal_infeasibility = 0.0, dual_infeasibility = 0.0, gap = 0.0;
    std::size_t iterations = 0;
};

// min <C,X> s.t. <A_i,X> = b_i, X >= 0, from X = Z = scaled identity.
inline EngineResult interior_point(const StandardForm& p, const SdpOptions& opt) {
    const auto& shape = p.shape;
    const std::size_t m = p.a.size();
    const double n_total = static_cast<double>(std::max<std::size_t>(1, shape.order()));
    BlockMatrix cmat = shape.zero();
    add_scaled(cmat, p.c, 1.0);
    const double cnorm = norm(cmat), bnorm = p.b.size() ? p.b.norm() : 0.0;

    double xi = std::max(10.0, std::sqrt(n_total)), eta = std::max(10.0, std::sqrt(n_total));
    for (std::size_t i = 0; i < m; ++i) {
        const double an = std::sqrt(p.a[i].norm2);
        xi = std::max(xi, n_total * (1.0 + std::abs(p.b(static_cast<Eigen::Index>(i)))) / (1.0 + an));
        eta = std::max(eta, an);
    }
    eta = std::max(eta, cnorm);

    // Gram matrix of the constraints, used to remove the residual of A(dX) = rp
    // left by the increasingly ill-conditioned Schur complement.
    std::vector<BlockMatrix> adense;
    for (std::size_t i = 0; i < m; ++i) {
        adense.push_back(shape.zero());
        add_scaled(adense.back(), p.a[i], 1.0);
    }
    Mat gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j)
            gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                inner(adense[i], adense[j]);
    const Eigen::CompleteOrthogonalDecomposition<Mat> gram_solve(gram);

    EngineResult r;
    r.x = shape.identity(xi);
    r.z = shape.identity(eta);
    r.y = Vec::Zero(static_cast<Eigen::Index>(m));

    auto aty = [&](const Vec& y) {
        BlockMatrix out = shape.zero();
        for (std::size_t i = 0; i < m; ++i) add_scaled(out, p.a[i], y(static_cast<Eigen::Index>(i)));
        return out;
    };
    auto a_of = [&](const BlockMatrix& x) {
        Vec out(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) out(static_cast<Eigen::Index>(i)) = inner(p.a[i], x);
        return out;
    };

    for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
        const Vec rp = p.b - a_of(r.x);
        BlockMatrix rd = cmat;
        axpy(rd, -1.0, aty(r.y));
        axpy(rd, -1.0, r.z);
        r.primal_value = inner(cmat, r.x);
        r.dual_value = p.b.dot(r.y);
        r.primal_infeasibility = (m ? rp.norm() : 0.0) / (1.0 + bnorm);
        r.dual_infeasibility = norm(rd) / (1.0 + cnorm);
        r.gap = std::abs(r.primal_value - r.dual_value) / (1.0 + std::abs(r.primal_value) + std::abs(r.dual_value));
        const double mu = inner(r.x, r.z) / n_total;
        if (opt.log)
            *opt.log << "ipm " << r.iterations << " pobj " << r.primal_value << " dobj " << r.dual_value << " pinf "
                     << r.primal_infeasibility << " dinf " << r.dual_infeasibility << " mu " << mu << "\n";
        if (r.primal_infeasibility <= opt.tolerance && r.dual_infeasibility <= opt.tolerance && r.gap <= opt.tolerance) {
            r.converged = true;
            return r;
        }

        // Schur complement M_ij = <A_i, X A_j Z^{-1}>, plus the blocks of Z^{-1}.
        std::vector<Mat> zinv(shape.blocks.size());
        bool ok = true;
        for (std::size_t k = 0; k < shape.blocks.size(); ++k) {
            Eigen::LLT<Mat> llt(r.z.dense[k]);
            if (llt.info() != Eigen::Success) ok = false;
            zinv[k] = llt.solve(Mat::Identity(r.z.dense[k].rows(), r.z.dense[k].cols()));
            zinv[k] = 0.5 * (zinv[k] + zinv[k].transpose().eval());
        }
        if (!ok) return r;
        const Vec xz = r.x.lp.cwiseQuotient(r.z.lp);
        Mat schur = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < shape.blocks.size(); ++k) {
                if (p.a[j].dense[k].empty()) continue;
                const auto nk = static_cast<Eigen::Index>(shape.blocks[k]);
                Mat xa = Mat::Zero(nk, nk);
                for (const auto& [rr, cc, v] : p.a[j].dense[k])
                    xa.col(static_cast<Eigen::Index>(cc)) += v * r.x.dense[k].col(static_cast<Eigen::Index>(rr));
                const Mat g = xa * zinv[k];
                for (std::size_t i = 0; i < m; ++i)
                    for (const auto& [rr, cc, v] : p.a[i].dense[k])
                        schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +=
                            v * g(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(cc));
            }
            if (!p.a[j].lp.empty()) {
                Vec col = Vec::Zero(r.x.lp.size());
                for (const auto& [l, v] : p.a[j].lp) col(static_cast<Eigen::Index>(l)) = v * xz(static_cast<Eigen::Index>(l));
                for (std::size_t i = 0; i < m; ++i)
                    for (const auto& [l, v] : p.a[i].lp)
                        schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += v * col(static_cast<Eigen::Index>(l));
            }
        }
        schur = 0.5 * (schur + schur.transpose().eval());
        Eigen::LLT<Mat> mfac(schur);
        Eigen::LDLT<Mat> mldlt;
        const bool use_llt = mfac.info() == Eigen::Success;
        if (!use_llt) {
            const double reg = 1e-13 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
            mldlt.compute(schur + reg * Mat::Identity(schur.rows(), schur.cols()));
        }
        auto solve_m = [&](const Vec& v) -> Vec { return use_llt ? Vec(mfac.solve(v)) : Vec(mldlt.solve(v)); };

        // Direction for complementarity target R (dense: sigma mu I - XZ - dXa dZa).
        // R Z^{-1} is passed in directly to avoid forming XZ.
        auto direction = [&](const std::vector<Mat>& rzinv, const Vec& rlp, BlockMatrix& dx, BlockMatrix& dz, Vec& dy) {
            BlockMatrix t = shape.zero();  // R Z^{-1} - X Rd Z^{-1}
            for (std::size_t k = 0; k < shape.blocks.size(); ++k)
                t.dense[k] = rzinv[k] - r.x.dense[k] * rd.dense[k] * zinv[k];
            t.lp = (rlp - r.x.lp.cwiseProduct(rd.lp)).cwiseQuotient(r.z.lp);
            BlockMatrix tsym = t;
            for (auto& d : tsym.dense) d = 0.5 * (d + d.transpose().eval());
            dy = solve_m(rp - a_of(tsym));
            dz = rd;
            axpy(dz, -1.0, aty(dy));
            dx = shape.zero();
            for (std::size_t k = 0; k < shape.blocks.size(); ++k) {
                Mat d = t.dense[k] + r.x.dense[k] * (rd.dense[k] - dz.dense[k]) * zinv[k];
                dx.dense[k] = 0.5 * (d + d.transpose());
            }
            dx.lp = (rlp - r.x.lp.cwiseProduct(dz.lp)).cwiseQuotient(r.z.lp);
            if (m > 0) {
                const Vec lam = gram_solve.solve(rp - a_of(dx));
                for (std::size_t i = 0; i < m; ++i) axpy(dx, lam(static_cast<Eigen::Index>(i)), adense[i]);
            }
        };

        // Predictor.
        std::vector<Mat> rz(shape.blocks.size());
        for (std::size_t k = 0; k < shape.blocks.size(); ++k) rz[k] = -r.x.dense[k];
        BlockMatrix dxa, dza;
        Vec dya;
        direction(rz, -r.x.lp.cwiseProduct(r.z.lp), dxa, dza, dya);
        const double ap = std::min(1.0, max_step(r.x, dxa)), ad = std::min(1.0, max_step(r.z, dza));
        BlockMatrix xa = r.x, za = r.z;
        axpy(xa, ap, dxa);
        axpy(za, ad, dza);
        const double ratio = std::clamp(inner(xa, za) / (mu * n_total), 0.0, 1.0);
        const double sigma = std::pow(ratio, 3.0);

        // Corrector.
        for (std::size_t k = 0; k < shape.blocks.size(); ++k)
            rz[k] = sigma * mu * zinv[k] - r.x.dense[k] - dxa.dense[k] * dza.dense[k] * zinv[k];
        const Vec rlp = Vec::Constant(r.x.lp.size(), sigma * mu) - r.x.lp.cwiseProduct(r.z.lp) - dxa.lp.cwiseProduct(dza.lp);
        BlockMatrix dx, dz;
        Vec dy;
        direction(rz, rlp, dx, dz, dy);
        const double gamma = 0.9 + 0.09 * std::min(ap, ad);
        const double sp = std::min(1.0, gamma * max_step(r.x, dx)), sd = std::min(1.0, gamma * max_step(r.z, dz));
        if (sp < 1e-12 && sd < 1e-12) return r;
        axpy(r.x, sp, dx);
        axpy(r.z, sd, dz);
        r.y += sd * dy;
    }
    return r;
}

// PSD part of a symmetric matrix (negative eigenvalues clipped).
inline Mat psd_part(const Mat& a) {
    if (a.rows() == 0) return a;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
    const Vec l = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

// Rounding allowance when reading an eigenvalue of a computed matrix as >= 0.
inline double eigen_allowance(const BlockMatrix& a) { return 1e-12 * (1.0 + norm(a)); }

} // namespace detail

// ---- standard form --------------------------------------------------------

namespace detail {

inline StandardForm compile_program(const SemidefiniteProgram& sdp) {
    StandardForm f;
    f.shape.blocks = sdp.blocks;
    f.shape.lp = sdp.lp_size;
    if (f.shape.order() > sdp_order_cap)
        throw CapExceeded("semidefinite program order exceeds " + std::to_string(sdp_order_cap), f.shape.order());
    if (sdp.constraints.size() != sdp.rhs.size()) throw Error("constraint count and right-hand side size differ");
    for (std::size_t i = 0; i < sdp.constraints.size(); ++i)
        f.a.push_back(compile(sdp.constraints[i], f.shape, "constraint " + std::to_string(i)));
    f.b = Vec(static_cast<Eigen::Index>(sdp.rhs.size()));
    for (std::size_t i = 0; i < sdp.rhs.size(); ++i) {
        if (!std::isfinite(sdp.rhs[i])) throw Error("non-finite right-hand side");
        f.b(static_cast<Eigen::Index>(i)) = sdp.rhs[i];
    }
    if (sdp.objective) f.c = compile(*sdp.objective, f.shape, "objective");
    else f.c.dense.resize(f.shape.blocks.size());
    return f;
}

inline double primal_residual(const StandardForm& f, const BlockMatrix& x) {
    double worst = 0.0;
    for (std::size_t i = 0; i < f.a.size(); ++i)
        worst = std::max(worst, std::abs(inner(f.a[i], x) - f.b(static_cast<Eigen::Index>(i))));
    return worst;
}

// Dykstra alternating projections between {A(X) = b} and the PSD cone.
inline std::optional<BlockMatrix> dykstra(const StandardForm& f, const BlockMatrix& start, double tol,
                                          std::size_t iterations = 5000) {
    const std::size_t m = f.a.size();
    Mat gram(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<BlockMatrix> as;
    for (std::size_t i = 0; i < m; ++i) {
        as.push_back(f.shape.zero());
        add_scaled(as.back(), f.a[i], 1.0);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = inner(as[i], as[j]);
    const Eigen::CompleteOrthogonalDecomposition<Mat> gsolve(gram);
    auto project_affine = [&](BlockMatrix x) {
        Vec res(static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) res(static_cast<Eigen::Index>(i)) = inner(f.a[i], x) - f.b(static_cast<Eigen::Index>(i));
        const Vec lam = gsolve.solve(res);
        for (std::size_t i = 0; i < m; ++i) axpy(x, -lam(static_cast<Eigen::Index>(i)), as[i]);
        return x;
    };
    auto project_psd = [&](BlockMatrix x) {
        for (auto& d : x.dense) d = psd_part(d);
        x.lp = x.lp.cwiseMax(0.0);
        return x;
    };
    BlockMatrix x = start, p = f.shape.zero(), q = f.shape.zero();
    for (std::size_t it = 0; it < iterations; ++it) {
        BlockMatrix t = x;
        axpy(t, 1.0, p);
        BlockMatrix yv = project_affine(t);
        p = t;
        axpy(p, -1.0, yv);
        BlockMatrix u = yv;
        axpy(u, 1.0, q);
        x = project_psd(u);
        q = u;
        axpy(q, -1.0, x);
        if (primal_residual(f, x) <= tol) return x;
    }
    return std::nullopt;
}

} // namespace detail

/// Feasibility mode (no objective): a PSD point satisfying the constraints to
/// 1e-7, or a certificate y with sum y_i A_i >= 0 and b.y < 0, normalised to
/// |y| = 1, accepted when its margin -b.y exceeds the feasibility tolerance.
/// Optimisation mode: max <C, X> with relative gap <= 1e-6. Anything else is
/// reported as inconclusive.
inline SdpSolution solve_sdp(const SemidefiniteProgram& sdp, const SdpOptions& opt = {}) {
    using namespace detail;
    const StandardForm f = compile_program(sdp);
    const std::size_t m = f.a.size();
    SdpSolution out;

    if (sdp.objective) {
        StandardForm neg = f;
        for (auto& blk : neg.c.dense)
            for (auto& [r, c, v] : blk) v = -v;
        for (auto& [i, v] : neg.c.lp) v = -v;
        const auto e = interior_point(neg, opt);
        out.iterations = e.iterations;
        out.X = e.x;
        out.y.assign(e.y.data(), e.y.data() + e.y.size());
        for (auto& v : out.y) v = -v;
        out.value = -e.primal_value;
        out.gap = e.gap;
        out.primal_residual = primal_residual(f, e.x);
        out.min_eigenvalue = min_eigenvalue(e.x);
        const bool ok = e.converged || (e.gap <= sdp_gap_tolerance && out.primal_residual <= opt.feasibility_tolerance &&
                                        e.dual_infeasibility <= opt.feasibility_tolerance);
        out.status = ok && out.min_eigenvalue >= -opt.feasibility_tolerance ? SdpStatus::Optimal : SdpStatus::Inconclusive;
        return out;
    }

    // Phase I: min tau s.t. A(X) + tau r = b, X >= 0, tau >= 0 with r = b - A(I),
    // so (I, 1) is strictly feasible. tau sits at the end of the vector part.
    StandardForm ph = f;
    ph.shape.lp += 1;
    const std::size_t tau = ph.shape.lp - 1;
    const BlockMatrix id = f.shape.identity(1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double ri = f.b(static_cast<Eigen::Index>(i)) - inner(f.a[i], id);
        if (ri != 0.0) {
            ph.a[i].lp.emplace_back(tau, ri);
            ph.a[i].norm2 += ri * ri;
        }
    }
    ph.c = CompiledMatrix{};
    ph.c.dense.resize(ph.shape.blocks.size());
    ph.c.lp.emplace_back(tau, 1.0);
    ph.c.norm2 = 1.0;
    const auto e = interior_point(ph, opt);
    out.iterations = e.iterations;

    auto strip = [&](const BlockMatrix& x) {
        BlockMatrix s = x;
        s.lp = x.lp.head(static_cast<Eigen::Index>(f.shape.lp));
        return s;
    };
    BlockMatrix x = strip(e.x);
    out.X = x;
    out.primal_residual = primal_residual(f, x);
    out.min_eigenvalue = min_eigenvalue(x);
    if (out.primal_residual <= opt.feasibility_tolerance && out.min_eigenvalue >= -opt.feasibility_tolerance) {
        out.status = SdpStatus::Feasible;
        return out;
    }

    // Farkas candidate from the phase-I dual: -A^T y >= 0 with b.y = tau* > 0.
    if (m > 0 && e.y.norm() > 0.0) {
        Vec cert = -e.y / e.y.norm();
        BlockMatrix s = f.shape.zero();
        for (std::size_t i = 0; i < m; ++i) add_scaled(s, f.a[i], cert(static_cast<Eigen::Index>(i)));
        const double lmin = min_eigenvalue(s);
        const double deficit = std::max(0.0, -lmin - eigen_allowance(s));
        double margin = -f.b.dot(cert);
        if (deficit > 0.0) margin = sdp.trace_bound ? margin - deficit * *sdp.trace_bound : -std::numeric_limits<double>::infinity();
        if (margin > opt.feasibility_tolerance) {
            out.status = SdpStatus::Infeasible;
            out.certificate.assign(cert.data(), cert.data() + cert.size());
            out.certificate_margin = margin;
            return out;
        }
    }

    if (auto fx = dykstra(f, x, opt.feasibility_tolerance * 0.5)) {
        if (min_eigenvalue(*fx) >= -opt.feasibility_tolerance) {
            out.X = *fx;
            out.primal_residual = primal_residual(f, *fx);
            out.min_eigenvalue = min_eigenvalue(*fx);
            out.used_fallback = true;
            out.status = SdpStatus::Feasible;
            return out;
        }
    }
    out.status = SdpStatus::Inconclusive;
    return out;
}

/// Independent re-check of an infeasibility certificate: sum y_i A_i >= 0 up to
/// rounding (or absorbed by trace_bound) and the resulting margin -b.y.
inline double sdp_certificate_margin(const SemidefiniteProgram& sdp, const std::vector<double>& y) {
    using namespace detail;
    const StandardForm f = compile_program(sdp);
    if (y.size() != f.a.size()) throw Error("certificate size differs from constraint count");
    BlockMatrix s = f.shape.zero();
    double by = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        add_scaled(s, f.a[i], y[i]);
        by += y[i] * f.b(static_cast<Eigen::Index>(i));
    }
    const double deficit = std::max(0.0, -min_eigenvalue(s) - eigen_allowance(s));
    if (deficit > 0.0)
        return sdp.trace_bound ? -by - deficit * *sdp.trace_bound : -std::numeric_limits<double>::infinity();
    return -by;
}

// ---- linear matrix inequalities -------------------------------------------

/// F(y) = F0 + sum_k y_k F_k >= 0 over the box |y_k| <= bound. The box must be
/// implied by the model (or be a valid extra restriction of it) because
/// infeasibility is only certified within it. Only dense blocks are used.
struct LinearMatrixInequality {
    std::vector<std::size_t> blocks;
    SdpMatrix f0;
    std::vector<SdpMatrix> f;
    double bound = 1.0;
};

struct LmiResult {
    SdpStatus status = SdpStatus::Inconclusive;
    std::vector<double> y;
    double min_eigenvalue = 0.0;  // of F(y)
    double value = 0.0;           // optimisation: c.y
    double upper_bound = 0.0;     // optimisation: dual bound on c.y
    double gap = 0.0;
    // Infeasible: trace-one PSD W (dense blocks) with <F0,W> + bound sum_k |<F_k,W>| < 0.
    std::vector<Eigen::MatrixXd> certificate;
    double certificate_margin = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

struct CompiledLmi {
    Shape shape;  // dense blocks only
    CompiledMatrix f0;
    std::vector<CompiledMatrix> f;
};

inline CompiledLmi compile_lmi(const LinearMatrixInequality& lmi) {
    CompiledLmi c;
    c.shape.blocks = lmi.blocks;
    if (c.shape.order() > sdp_order_cap)
        throw CapExceeded("matrix inequality order exceeds " + std::to_string(sdp_order_cap), c.shape.order());
    if (!(lmi.bound > 0.0) || !std::isfinite(lmi.bound)) throw Error("variable bound must be positive and finite");
    c.f0 = compile(lmi.f0, c.shape, "F0");
    for (std::size_t k = 0; k < lmi.f.size(); ++k) {
        c.f.push_back(compile(lmi.f[k], c.shape, "F" + std::to_string(k + 1)));
        if (!c.f.back().lp.empty()) throw Error("matrix inequality terms must use dense blocks");
    }
    return c;
}

inline BlockMatrix lmi_value(const CompiledLmi& c, const std::vector<double>& y) {
    BlockMatrix s = c.shape.zero();
    add_scaled(s, c.f0, 1.0);
    for (std::size_t k = 0; k < c.f.size(); ++k) add_scaled(s, c.f[k], y[k]);
    return s;
}

// Dual-form program: max b.(y, extra) s.t. C - sum y_k A_k >= 0 where the
// dense part of C - sum A is F(y) (minus t I when `shift`), followed by the
// box rows bound - y_k >= 0 and bound + y_k >= 0.
inline StandardForm lmi_standard_form(const CompiledLmi& c, double bound, bool shift) {
    const std::size_t k = c.f.size();
    StandardForm s;
    s.shape = c.shape;
    s.shape.lp = 2 * k;
    s.c = c.f0;
    for (std::size_t j = 0; j < 2 * k; ++j) {
        s.c.lp.emplace_back(j, bound);
        s.c.norm2 += bound * bound;
    }
    for (std::size_t j = 0; j < k; ++j) {
        CompiledMatrix a = c.f[j];
        for (auto& blk : a.dense)
            for (auto& [r, cc, v] : blk) v = -v;
        a.lp = {{j, 1.0}, {k + j, -1.0}};
        a.norm2 += 2.0;
        s.a.push_back(std::move(a));
    }
    if (shift) {
        CompiledMatrix t;
        t.dense.resize(c.shape.blocks.size());
        for (std::size_t b = 0; b < c.shape.blocks.size(); ++b)
            for (std::size_t i = 0; i < c.shape.blocks[b]; ++i) t.dense[b].emplace_back(i, i, 1.0);
        t.norm2 = static_cast<double>(c.shape.order());
        s.a.push_back(std::move(t));
    }
    s.b = Vec::Zero(static_cast<Eigen::Index>(s.a.size()));
    return s;
}

} // namespace detail

/// Phase I: max t s.t. F(y) - t I >= 0 inside the box. Feasible when the
/// recomputed lambda_min(F(y)) >= -1e-7; infeasible when the phase-I primal,
/// clipped to PSD and scaled to trace one, certifies a margin above 1e-7.
inline LmiResult lmi_feasibility(const LinearMatrixInequality& lmi, const SdpOptions& opt = {}) {
    using namespace detail;
    const auto c = compile_lmi(lmi);
    const std::size_t k = c.f.size();
    auto s = lmi_standard_form(c, lmi.bound, true);
    s.b(static_cast<Eigen::Index>(k)) = 1.0;
    const auto e = interior_point(s, opt);

    LmiResult out;
    out.iterations = e.iterations;
    out.y.resize(k);
    for (std::size_t j = 0; j < k; ++j) out.y[j] = std::clamp(e.y(static_cast<Eigen::Index>(j)), -lmi.bound, lmi.bound);
    out.min_eigenvalue = c.shape.order() ? min_eigenvalue(lmi_value(c, out.y)) : 0.0;
    if (out.min_eigenvalue >= -opt.feasibility_tolerance) {
        out.status = SdpStatus::Feasible;
        return out;
    }
    std::vector<Mat> w;
    double tr = 0.0;
    for (const auto& d : e.x.dense) {
        w.push_back(psd_part(d));
        tr += w.back().trace();
    }
    if (tr > 0.0) {
        for (auto& d : w) d /= tr;
        BlockMatrix wb = c.shape.zero();
        wb.dense = w;
        double margin = -inner(c.f0, wb);
        for (const auto& fk : c.f) margin -= lmi.bound * std::abs(inner(fk, wb));
        if (margin > opt.feasibility_tolerance) {
            out.status = SdpStatus::Infeasible;
            out.certificate = std::move(w);
            out.certificate_margin = margin;
            return out;
        }
    }
    out.status = SdpStatus::Inconclusive;
    return out;
}

/// Independent margin of an LMI infeasibility certificate (negative or -inf
/// when it does not certify anything).
inline double lmi_certificate_margin(const LinearMatrixInequality& lmi, const std::vector<Eigen::MatrixXd>& w) {
    using namespace detail;
    const auto c = compile_lmi(lmi);
    if (w.size() != c.shape.blocks.size()) return -std::numeric_limits<double>::infinity();
    BlockMatrix wb = c.shape.zero();
    double tr = 0.0;
    for (std::size_t b = 0; b < w.size(); ++b) {
        if (w[b].rows() != static_cast<Eigen::Index>(c.shape.blocks[b]) || w[b].cols() != w[b].rows())
            return -std::numeric_limits<double>::infinity();
        wb.dense[b] = 0.5 * (w[b] + w[b].transpose());
        tr += wb.dense[b].trace();
    }
    if (min_eigenvalue(wb) < 0.0 || !(tr > 0.0)) return -std::numeric_limits<double>::infinity();
    double margin = -inner(c.f0, wb);
    for (const auto& fk : c.f) margin -= lmi.bound * std::abs(inner(fk, wb));
    return margin / tr;
}

/// max c.y s.t. F(y) >= 0 inside the box. Reports the attained value, the dual
/// upper bound and their relative gap (Optimal when the gap is <= 1e-6).
inline LmiResult lmi_maximize(const LinearMatrixInequality& lmi, const std::vector<double>& objective,
                              const SdpOptions& opt = {}) {
    using namespace detail;
    const auto c = compile_lmi(lmi);
    if (objective.size() != c.f.size()) throw Error("objective size differs from variable count");
    auto s = lmi_standard_form(c, lmi.bound, false);
    for (std::size_t j = 0; j < objective.size(); ++j) {
        if (!std::isfinite(objective[j])) throw Error("non-finite objective");
        s.b(static_cast<Eigen::Index>(j)) = objective[j];
    }
    const auto e = interior_point(s, opt);
    LmiResult out;
    out.iterations = e.iterations;
    out.y.assign(e.y.data(), e.y.data() + e.y.size());
    out.min_eigenvalue = c.shape.order() ? min_eigenvalue(lmi_value(c, out.y)) : 0.0;
    for (std::size_t j = 0; j < objective.size(); ++j) out.value += objective[j] * out.y[j];
    out.upper_bound = e.primal_value;
    out.gap = std::abs(out.upper_bound - out.value) / (1.0 + std::abs(out.value));
    bool in_box = true;
    for (auto v : out.y) in_box &= std::abs(v) <= lmi.bound * (1.0 + 1e-9);
    out.status = out.gap <= sdp_gap_tolerance && in_box && out.min_eigenvalue >= -opt.feasibility_tolerance
                     ? SdpStatus::Optimal
                     : SdpStatus::Inconclusive;
    return out;
}

} // namespace exwb
