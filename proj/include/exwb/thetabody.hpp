#pragma once

// The theta body TH(G) of an exclusivity graph: weightings w for which a unit
// handle psi and unit vectors x_i exist with x_i orthogonal to x_j on every
// edge and w_i = |<x_i, psi>|^2. Decided through the Gram matrix M of order
// |V|+1 (M_00 = 1, M_ii = M_0i = w_i, M_ij = 0 on edges, M >= 0).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "exwb/clique.hpp"
#include "exwb/graph.hpp"
#include "exwb/isomorphism.hpp"
#include "exwb/polytope.hpp"
#include "exwb/sdp.hpp"

namespace exwb {

inline constexpr double theta_vector_tolerance = 1e-6;

struct ThetaCertificate {
    Eigen::MatrixXd gram;                 // order |V|+1
    Eigen::VectorXd handle;               // |psi>
    std::vector<Eigen::VectorXd> vectors; // one unit vector per vertex
};

struct ThetaResiduals {
    double gram_min_eigenvalue = 0.0;
    double gram_structure = 0.0;   // max deviation of the fixed Gram entries
    double handle_norm = 0.0;      // | |psi| - 1 |
    double vector_norm = 0.0;      // max | |x_i| - 1 |
    double orthogonality = 0.0;    // max |<x_i, x_j>| over edges
    double weights = 0.0;          // max | |<x_i,psi>|^2 - w_i |
};

struct ThetaVerdict {
    SdpStatus status = SdpStatus::Inconclusive;  // Feasible = member, Infeasible = non-member
    std::optional<ThetaCertificate> certificate;
    std::optional<ThetaResiduals> residuals;
    std::vector<Eigen::MatrixXd> dual;  // non-member: trace-one W of order |V|+1
    double dual_margin = 0.0;
    double min_eigenvalue = 0.0;
    std::size_t iterations = 0;

    bool member() const { return status == SdpStatus::Feasible; }
};

namespace detail {

// Free Gram entries: pairs i < j of distinct non-adjacent vertices. With
// weights given, a zero-weight vertex has a zero Gram row in every PSD
// completion, so its pairs are not free.
inline std::vector<std::pair<std::size_t, std::size_t>> theta_free_pairs(const ExclusivityGraph& g,
                                                                          const VertexWeights* w = nullptr) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            if (!g.adjacent(i, j) && (!w || ((*w)[i] > 0.0 && (*w)[j] > 0.0))) out.emplace_back(i, j);
    return out;
}

inline void check_theta_cap(const ExclusivityGraph& g) {
    if (g.size() + 1 > sdp_order_cap)
        throw CapExceeded("theta body Gram matrix order exceeds " + std::to_string(sdp_order_cap), g.size() + 1);
}

// Membership LMI for fixed w: y = free entries.
inline LinearMatrixInequality theta_membership_lmi(const ExclusivityGraph& g, const VertexWeights& w) {
    LinearMatrixInequality lmi;
    lmi.blocks = {g.size() + 1};
    lmi.f0.add(0, 0, 0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        lmi.f0.add(0, i + 1, i + 1, w[i]);
        lmi.f0.add_sym(0, 0, i + 1, w[i]);
    }
    for (auto [i, j] : theta_free_pairs(g, &w)) {
        SdpMatrix f;
        f.add_sym(0, i + 1, j + 1, 1.0);
        lmi.f.push_back(std::move(f));
    }
    lmi.bound = 1.0;
    return lmi;
}

// Optimisation LMI: y = (w_0..w_{n-1}, free entries).
inline LinearMatrixInequality theta_body_lmi(const ExclusivityGraph& g) {
    LinearMatrixInequality lmi;
    lmi.blocks = {g.size() + 1};
    lmi.f0.add(0, 0, 0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        SdpMatrix f;
        f.add(0, i + 1, i + 1, 1.0);
        f.add_sym(0, 0, i + 1, 1.0);
        lmi.f.push_back(std::move(f));
    }
    for (auto [i, j] : theta_free_pairs(g)) {
        SdpMatrix f;
        f.add_sym(0, i + 1, j + 1, 1.0);
        lmi.f.push_back(std::move(f));
    }
    lmi.bound = 1.0;
    return lmi;
}

inline Eigen::MatrixXd theta_gram(const ExclusivityGraph& g, const VertexWeights& w, const std::vector<double>& free) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    m(0, 0) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) m(i + 1, i + 1) = m(0, i + 1) = m(i + 1, 0) = w[static_cast<std::size_t>(i)];
    const auto pairs = theta_free_pairs(g, &w);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(pairs[k].first) + 1, j = static_cast<Eigen::Index>(pairs[k].second) + 1;
        m(i, j) = m(j, i) = free[k];
    }
    return m;
}

} // namespace detail

/// Factor a Gram matrix into handle and unit vertex vectors. Vertices with a
/// zero diagonal entry get fresh basis directions orthogonal to everything
/// else (their factor columns are rounding noise).
inline ThetaCertificate extract_theta_vectors(const Eigen::MatrixXd& gram) {
    const auto order = gram.rows();
    const auto n = order - 1;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd v = root.asDiagonal() * es.eigenvectors().transpose();  // columns are Gram vectors
    Eigen::Index zeros = 0;
    for (Eigen::Index i = 1; i < order; ++i)
        if (gram(i, i) == 0.0) ++zeros;
    const Eigen::Index dim = order + zeros;
    ThetaCertificate c;
    c.gram = gram;
    c.handle = Eigen::VectorXd::Zero(dim);
    c.handle.head(order) = v.col(0);
    Eigen::Index extra = order;
    for (Eigen::Index i = 1; i <= n; ++i) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
        if (gram(i, i) == 0.0) x(extra++) = 1.0;
        else x.head(order) = v.col(i) / v.col(i).norm();
        c.vectors.push_back(std::move(x));
    }
    return c;
}

/// Recompute every invariant of a theta certificate from its parts.
inline ThetaResiduals check_theta_certificate(const ExclusivityGraph& g, const VertexWeights& w,
                                              const ThetaCertificate& c) {
    ThetaResiduals r;
    const auto n = static_cast<Eigen::Index>(g.size());
    if (c.gram.rows() != n + 1 || c.gram.cols() != n + 1 || c.vectors.size() != g.size())
        throw Error("theta certificate has the wrong size");
    r.gram_min_eigenvalue =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (c.gram + c.gram.transpose()), Eigen::EigenvaluesOnly)
            .eigenvalues()(0);
    r.gram_structure = std::abs(c.gram(0, 0) - 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double wi = w[static_cast<std::size_t>(i)];
        r.gram_structure = std::max({r.gram_structure, std::abs(c.gram(i + 1, i + 1) - wi), std::abs(c.gram(0, i + 1) - wi),
                                     std::abs(c.gram(i + 1, 0) - wi)});
    }
    for (auto [i, j] : g.edges())
        r.gram_structure = std::max(r.gram_structure, std::abs(c.gram(static_cast<Eigen::Index>(i) + 1, static_cast<Eigen::Index>(j) + 1)));
    r.handle_norm = std::abs(c.handle.norm() - 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        r.vector_norm = std::max(r.vector_norm, std::abs(c.vectors[i].norm() - 1.0));
        const double overlap = c.vectors[i].dot(c.handle);
        r.weights = std::max(r.weights, std::abs(overlap * overlap - w[i]));
    }
    for (auto [i, j] : g.edges()) r.orthogonality = std::max(r.orthogonality, std::abs(c.vectors[i].dot(c.vectors[j])));
    return r;
}

inline bool residuals_pass(const ThetaResiduals& r, double tol = theta_vector_tolerance) {
    return r.gram_min_eigenvalue >= -sdp_feasibility_tolerance && r.gram_structure <= tol && r.handle_norm <= tol &&
           r.vector_norm <= tol && r.orthogonality <= tol && r.weights <= tol;
}

/// Membership in TH(g). Member: Gram matrix and vectors, re-checked. Non-member:
/// a PSD W of trace one with <F0,W> + sum |<F_k,W>| < 0 (see lmi_feasibility).
/// Points within the solver tolerance of the boundary may be inconclusive.
inline ThetaVerdict in_theta_body(const ExclusivityGraph& g, const VertexWeights& w, const SdpOptions& opt = {}) {
    validate_weights(g, w);
    detail::check_theta_cap(g);
    const auto lmi = detail::theta_membership_lmi(g, w);
    const auto res = lmi_feasibility(lmi, opt);
    ThetaVerdict out;
    out.iterations = res.iterations;
    out.min_eigenvalue = res.min_eigenvalue;
    if (res.status == SdpStatus::Feasible) {
        auto cert = extract_theta_vectors(detail::theta_gram(g, w, res.y));
        auto r = check_theta_certificate(g, w, cert);
        out.status = residuals_pass(r) ? SdpStatus::Feasible : SdpStatus::Inconclusive;
        out.certificate = std::move(cert);
        out.residuals = r;
        return out;
    }
    out.status = res.status;
    out.dual = res.certificate;
    out.dual_margin = res.certificate_margin;
    return out;
}

/// Independent margin of a non-membership certificate.
inline double theta_dual_margin(const ExclusivityGraph& g, const VertexWeights& w, const std::vector<Eigen::MatrixXd>& dual) {
    return lmi_certificate_margin(detail::theta_membership_lmi(g, w), dual);
}

struct ThetaMax {
    SdpStatus status = SdpStatus::Inconclusive;  // Optimal when the gap is within 1e-6
    double value = 0.0;
    double upper_bound = 0.0;
    VertexWeights point;
};

/// max c.w over w in TH(g), c >= 0.
inline ThetaMax max_linear_over_theta(const ExclusivityGraph& g, const VertexWeights& c, const SdpOptions& opt = {}) {
    if (c.size() != g.size()) throw Error("direction size differs from vertex count");
    for (double x : c)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("direction must be nonnegative and finite");
    detail::check_theta_cap(g);
    ThetaMax out;
    if (g.size() == 0) {
        out.status = SdpStatus::Optimal;
        return out;
    }
    const auto lmi = detail::theta_body_lmi(g);
    std::vector<double> obj(lmi.f.size(), 0.0);
    std::copy(c.begin(), c.end(), obj.begin());
    const auto res = lmi_maximize(lmi, obj, opt);
    out.status = res.status;
    out.value = res.value;
    out.upper_bound = res.upper_bound;
    out.point.assign(res.y.begin(), res.y.begin() + static_cast<std::ptrdiff_t>(g.size()));
    for (auto& x : out.point) x = std::clamp(x, 0.0, 1.0);
    return out;
}

/// Largest s with s * d in TH(g), for a direction d >= 0 with max d_i = 1.
inline ThetaMax theta_boundary_scale(const ExclusivityGraph& g, const VertexWeights& d, const SdpOptions& opt = {}) {
    if (d.size() != g.size()) throw Error("direction size differs from vertex count");
    detail::check_theta_cap(g);
    LinearMatrixInequality lmi;
    lmi.blocks = {g.size() + 1};
    lmi.f0.add(0, 0, 0, 1.0);
    SdpMatrix fs;
    for (std::size_t i = 0; i < g.size(); ++i) {
        fs.add(0, i + 1, i + 1, d[i]);
        fs.add_sym(0, 0, i + 1, d[i]);
    }
    lmi.f.push_back(std::move(fs));
    for (auto [i, j] : detail::theta_free_pairs(g)) {
        SdpMatrix f;
        f.add_sym(0, i + 1, j + 1, 1.0);
        lmi.f.push_back(std::move(f));
    }
    lmi.bound = 1.0;
    std::vector<double> obj(lmi.f.size(), 0.0);
    obj[0] = 1.0;
    const auto res = lmi_maximize(lmi, obj, opt);
    ThetaMax out;
    out.status = res.status;
    out.value = res.value;
    out.upper_bound = res.upper_bound;
    out.point = d;
    for (auto& x : out.point) x *= res.value;
    return out;
}

// ---- antiblocker duality for self-complementary graphs --------------------

struct DualitySample {
    VertexWeights q;       // boundary point of TH(complement(g)), as a direction on g
    double max_value = 0.0;  // max over TH(g) of p.q
    bool within = false;     // max_value <= 1 + tol
    SdpStatus status = SdpStatus::Inconclusive;
};

struct DualityReport {
    std::vector<std::size_t> self_complement_map;  // g -> complement(g)
    std::vector<DualitySample> samples;
    bool all_within = true;
};

/// For self-complementary g with witness sigma, p in TH(g) maps to q with
/// q_{sigma(i)} = p_i in TH(complement(g)) = abl(TH(g)). Samples seeded random
/// directions, scales them to the boundary of TH(g), maps them through sigma
/// and checks max_{p in TH(g)} p.q <= 1 + tol.
inline DualityReport antiblocker_duality_check(const ExclusivityGraph& g, std::size_t samples, std::uint64_t seed,
                                               double tol = 1e-4, const SdpOptions& opt = {}) {
    const auto sc = is_self_complementary(g);
    if (!sc.self_complementary) throw Error("antiblocker duality check needs a self-complementary graph");
    DualityReport out;
    out.self_complement_map = sc.witness;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (std::size_t s = 0; s < samples; ++s) {
        VertexWeights d(g.size());
        for (auto& x : d) x = U(rng);
        const double top = *std::max_element(d.begin(), d.end());
        for (auto& x : d) x /= top;
        const auto boundary = theta_boundary_scale(g, d, opt);
        VertexWeights q(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) q[sc.witness[i]] = boundary.point[i];
        const auto mx = max_linear_over_theta(g, q, opt);
        DualitySample ds{q, mx.value, mx.value <= 1.0 + tol, mx.status};
        if (boundary.status != SdpStatus::Optimal) ds.status = boundary.status;
        out.all_within = out.all_within && ds.within && ds.status == SdpStatus::Optimal;
        out.samples.push_back(std::move(ds));
    }
    return out;
}

// ---- E^n -> TH sandwich on the uniform ray --------------------------------

struct SandwichRow {
    int n = 1;
    std::size_t clique_number = 0;  // omega(G^{*n})
    double upper = 0.0;             // u_n = omega^{-1/n}
};

struct SandwichReport {
    std::vector<SandwichRow> rows;
    double theta_uniform = 0.0;  // t
    double lower = 0.0;          // l_1 = largest uniform weight in STAB(g) = abl(QSTAB(complement(g)))
    std::size_t independence_number = 0;
    bool self_complementary = false;
    bool chain_holds = false;        // l_1 <= t <= u_n for every n
    bool upper_nonincreasing = false;
    SdpStatus theta_status = SdpStatus::Inconclusive;
};

/// Largest uniform weights of STAB, TH and E^n for a vertex-transitive graph.
inline SandwichReport sandwich_report(const ExclusivityGraph& g, int n_max, double tol = 1e-9,
                                      std::size_t cap = default_vertex_cap, const SdpOptions& opt = {}) {
    if (n_max < 1) throw Error("n_max must be at least 1");
    if (g.size() == 0) throw Error("sandwich report needs a nonempty graph");
    if (!is_vertex_transitive(g)) throw Error("sandwich report needs a vertex-transitive graph");
    SandwichReport out;
    out.self_complementary = is_self_complementary(g).self_complementary;
    for (int n = 1; n <= n_max; ++n) {
        const auto p = or_power(g, n, cap);
        const std::size_t w = clique_number(p);
        out.rows.push_back({n, w, std::pow(static_cast<double>(w), -1.0 / n)});
    }
    const auto t = theta_boundary_scale(g, VertexWeights(g.size(), 1.0), opt);
    out.theta_uniform = t.value;
    out.theta_status = t.status;
    // Uniform c is in STAB(g) iff c <= 1/chi_f(g); chi_f = |V|/alpha on vertex-transitive graphs.
    out.independence_number = independence_number(g);
    const auto cover = detail::fractional_cover(g, VertexWeights(g.size(), 1.0));
    if (!cover) throw Error("fractional colouring LP failed");
    double chi = 0.0;
    for (const auto& [set, y] : *cover) chi += y;
    out.lower = 1.0 / chi;
    out.chain_holds = true;
    out.upper_nonincreasing = true;
    for (std::size_t k = 0; k < out.rows.size(); ++k) {
        out.chain_holds = out.chain_holds && out.lower <= out.theta_uniform + 1e-6 && out.theta_uniform <= out.rows[k].upper + 1e-6;
        if (k > 0) out.upper_nonincreasing = out.upper_nonincreasing && out.rows[k].upper <= out.rows[k - 1].upper + tol;
    }
    return out;
}

} // namespace exwb
