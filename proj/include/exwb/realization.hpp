#pragma once

// Projective quantum realizations of a scenario: a unit state and one
// orthogonal resolution of the identity per measurement, with compatible
// measurements commuting. Probabilities are squared norms of projected states,
// so zero-probability branches need no renormalisation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "exwb/error.hpp"
#include "exwb/scenario.hpp"

namespace exwb {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double realization_tolerance = 1e-8;
inline constexpr double state_norm_tolerance = 1e-10;
inline constexpr int coarse_graining_outcome_cap = 8;

struct Realization {
    std::size_t dimension = 0;
    CVector state;
    std::map<std::string, std::vector<CMatrix>> projectors;  // measurement id -> one per outcome

    const CMatrix& projector(const std::string& id, int outcome) const {
        auto it = projectors.find(id);
        if (it == projectors.end()) throw Error("realization has no projectors for '" + id + "'");
        if (outcome < 0 || static_cast<std::size_t>(outcome) >= it->second.size())
            throw Error("realization has no projector for outcome " + std::to_string(outcome) + " of '" + id + "'");
        return it->second[static_cast<std::size_t>(outcome)];
    }
};

struct RealizationReport {
    double state_norm = 0.0;     // |<psi|psi> - 1|
    double hermiticity = 0.0;    // max ||E - E^dagger||
    double idempotence = 0.0;    // max ||E E - E||
    double orthogonality = 0.0;  // max ||E_j E_k|| over j != k
    double completeness = 0.0;   // max ||sum_k E_k - 1||
    double commutation = 0.0;    // max ||[E, F]|| over compatible measurements
    bool pass = false;
};

struct CoarseGrainingPartition {
    std::string source;
    std::vector<std::vector<int>> blocks;
};

namespace detail {

inline double opnorm(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<CMatrix>(m).singularValues()(0);
}

// Measurement layout a realization is checked against: outcome counts and
// compatible pairs (by id).
struct Layout {
    std::map<std::string, int> outcomes;
    std::vector<std::pair<std::string, std::string>> compatible;
};

inline Layout layout_of(const Scenario& s) {
    Layout l;
    for (const auto& m : s.measurements()) l.outcomes[m.id] = m.outcomes;
    l.compatible = s.compatible_pairs();
    return l;
}

inline void check_shapes(const Realization& r, const Layout& l) {
    const auto d = static_cast<Eigen::Index>(r.dimension);
    if (r.dimension == 0) throw Error("realization dimension must be positive");
    if (r.state.size() != d)
        throw Error("state has length " + std::to_string(r.state.size()) + ", dimension is " +
                    std::to_string(r.dimension));
    for (const auto& [id, count] : l.outcomes) {
        auto it = r.projectors.find(id);
        if (it == r.projectors.end()) throw Error("realization has no projectors for '" + id + "'");
        if (it->second.size() != static_cast<std::size_t>(count))
            throw Error("measurement '" + id + "' has " + std::to_string(count) + " outcomes, realization gives " +
                        std::to_string(it->second.size()) + " projectors");
        for (const auto& e : it->second)
            if (e.rows() != d || e.cols() != d) throw Error("projector of '" + id + "' has the wrong dimension");
    }
}

inline RealizationReport validate_layout(const Realization& r, const Layout& l) {
    check_shapes(r, l);
    RealizationReport rep;
    const auto d = static_cast<Eigen::Index>(r.dimension);
    const CMatrix id = CMatrix::Identity(d, d);
    rep.state_norm = std::abs(r.state.squaredNorm() - 1.0);
    for (const auto& [name, count] : l.outcomes) {
        const auto& es = r.projectors.at(name);
        CMatrix sum = CMatrix::Zero(d, d);
        for (std::size_t j = 0; j < es.size(); ++j) {
            sum += es[j];
            rep.hermiticity = std::max(rep.hermiticity, opnorm(es[j] - es[j].adjoint()));
            rep.idempotence = std::max(rep.idempotence, opnorm(es[j] * es[j] - es[j]));
            for (std::size_t k = 0; k < es.size(); ++k)
                if (k != j) rep.orthogonality = std::max(rep.orthogonality, opnorm(es[j] * es[k]));
        }
        rep.completeness = std::max(rep.completeness, opnorm(sum - id));
    }
    for (const auto& [a, b] : l.compatible)
        for (const auto& e : r.projectors.at(a))
            for (const auto& f : r.projectors.at(b)) rep.commutation = std::max(rep.commutation, opnorm(e * f - f * e));
    rep.pass = rep.state_norm <= state_norm_tolerance && rep.hermiticity <= realization_tolerance &&
               rep.idempotence <= realization_tolerance && rep.orthogonality <= realization_tolerance &&
               rep.completeness <= realization_tolerance && rep.commutation <= realization_tolerance;
    return rep;
}

inline void check_partition(const CoarseGrainingPartition& p, int outcomes) {
    if (p.blocks.empty()) throw Error("coarse-graining of '" + p.source + "' needs at least one block");
    std::vector<int> seen(static_cast<std::size_t>(outcomes), 0);
    for (const auto& blk : p.blocks) {
        if (blk.empty()) throw Error("coarse-graining of '" + p.source + "' has an empty block");
        for (int a : blk) {
            if (a < 0 || a >= outcomes)
                throw Error("coarse-graining of '" + p.source + "' names outcome " + std::to_string(a) +
                            " out of range");
            if (seen[static_cast<std::size_t>(a)]++) throw Error("coarse-graining blocks of '" + p.source + "' overlap");
        }
    }
    for (int a = 0; a < outcomes; ++a)
        if (!seen[static_cast<std::size_t>(a)])
            throw Error("coarse-graining of '" + p.source + "' misses outcome " + std::to_string(a));
}

inline std::vector<CMatrix> merged(const std::vector<CMatrix>& es, const std::vector<std::vector<int>>& blocks) {
    std::vector<CMatrix> out;
    for (const auto& blk : blocks) {
        CMatrix e = CMatrix::Zero(es.front().rows(), es.front().cols());
        for (int a : blk) e += es[static_cast<std::size_t>(a)];
        out.push_back(std::move(e));
    }
    return out;
}

// All set partitions of {0..n-1} by restricted growth strings.
inline std::vector<std::vector<std::vector<int>>> set_partitions(int n) {
    std::vector<std::vector<std::vector<int>>> out;
    std::vector<int> rgs(static_cast<std::size_t>(n), 0);
    auto rec = [&](auto&& self, int i, int blocks) -> void {
        if (i == n) {
            std::vector<std::vector<int>> p(static_cast<std::size_t>(blocks));
            for (int a = 0; a < n; ++a) p[static_cast<std::size_t>(rgs[static_cast<std::size_t>(a)])].push_back(a);
            out.push_back(std::move(p));
            return;
        }
        for (int b = 0; b <= blocks; ++b) {
            rgs[static_cast<std::size_t>(i)] = b;
            self(self, i + 1, std::max(blocks, b + 1));
        }
    };
    rec(rec, 0, 0);
    return out;
}

} // namespace detail

inline RealizationReport validate_realization(const Realization& r, const Scenario& s) {
    return detail::validate_layout(r, detail::layout_of(s));
}

/// One table per maximal context: ||E_{a_1} ... E_{a_m} psi||^2 with the
/// context's projectors applied in member order.
inline Behaviour behaviour_from_realization(const Realization& r, const Scenario& s) {
    const auto rep = validate_realization(r, s);
    if (!rep.pass) throw Error("realization fails validation");
    std::vector<ProbabilityTable> tables;
    for (const auto& c : s.maximal_contexts()) {
        ProbabilityTable t(s.table_size(c));
        for (std::size_t idx = 0; idx < t.size(); ++idx) {
            const auto outs = s.joint_outcomes(c, idx);
            CVector v = r.state;
            for (std::size_t k = c.members.size(); k-- > 0;)
                v = r.projector(s.measurement(c.members[k]).id, outs[k]) * v;
            t[idx] = v.squaredNorm();
        }
        tables.push_back(std::move(t));
    }
    return Behaviour(s, std::move(tables));
}

/// Replaces the source measurement's projectors by E_c = sum_{a in A_c} E_a;
/// the merged measurement keeps its id and gets outcomes 0..blocks-1.
inline Realization coarse_grain_projectors(const Realization& r, const CoarseGrainingPartition& p) {
    auto it = r.projectors.find(p.source);
    if (it == r.projectors.end()) throw Error("realization has no projectors for '" + p.source + "'");
    detail::check_partition(p, static_cast<int>(it->second.size()));
    Realization out = r;
    out.projectors[p.source] = detail::merged(it->second, p.blocks);
    return out;
}

/// The scenario with the source measurement's outcomes merged per the
/// partition. A scenario measurement needs at least two outcomes, so a
/// partition with a single block is rejected here.
inline Scenario coarse_grain_scenario(const Scenario& s, const CoarseGrainingPartition& p) {
    const auto src = s.index_of(p.source);
    detail::check_partition(p, s.outcomes(src));
    auto ms = s.measurements();
    ms[src].outcomes = static_cast<int>(p.blocks.size());
    std::optional<std::vector<std::vector<std::string>>> contexts;
    if (s.has_explicit_contexts()) {
        contexts.emplace();
        for (const auto& c : s.maximal_contexts()) {
            std::vector<std::string> ids;
            for (auto m : c.members) ids.push_back(s.measurement(m).id);
            contexts->push_back(std::move(ids));
        }
    }
    return Scenario(std::move(ms), s.compatible_pairs(), std::move(contexts));
}

/// Merges outcome probabilities per the partition: P(z = c) = sum_{a in A_c} P(x = a).
inline Behaviour coarse_grain_behaviour(const Behaviour& b, const CoarseGrainingPartition& p) {
    const auto& s = b.scenario();
    const auto s2 = coarse_grain_scenario(s, p);
    const auto src = s.index_of(p.source);
    std::vector<int> block_of(static_cast<std::size_t>(s.outcomes(src)));
    for (std::size_t c = 0; c < p.blocks.size(); ++c)
        for (int a : p.blocks[c]) block_of[static_cast<std::size_t>(a)] = static_cast<int>(c);
    std::vector<ProbabilityTable> tables;
    for (std::size_t k = 0; k < s.maximal_contexts().size(); ++k) {
        const auto& c = s.maximal_contexts()[k];
        ProbabilityTable t(s2.table_size(c), 0.0);
        for (std::size_t idx = 0; idx < b.table(k).size(); ++idx) {
            auto outs = s.joint_outcomes(c, idx);
            for (std::size_t m = 0; m < c.members.size(); ++m)
                if (c.members[m] == src) outs[m] = block_of[static_cast<std::size_t>(outs[m])];
            t[s2.joint_index(c, outs)] += b.table(k)[idx];
        }
        tables.push_back(std::move(t));
    }
    return Behaviour(s2, std::move(tables));
}

struct IdealReport {
    double repeatability = 0.0;     // (i): max over projectors and states of the repeat-failure
    double nondisturbance = 0.0;    // (ii): max change of joint statistics under reordering
    std::size_t coarse_grainings = 0;  // partitions checked in (iii), identity included
    double coarse_repeatability = 0.0;
    double coarse_nondisturbance = 0.0;
    std::string worst;  // description of the worst offender, empty on pass
    bool pass = false;
};

namespace detail {

// (i) for one measurement: operator residual ||E E - E|| (repeatability on
// every state) and, on the given state, 1 - P(a again | a) when P(a) > 0.
inline double repeat_failure(const std::vector<CMatrix>& es, const CVector& psi) {
    double worst = 0.0;
    for (const auto& e : es) {
        worst = std::max(worst, opnorm(e * e - e));
        const CVector post = e * psi;
        const double p = post.squaredNorm();
        if (p > 1e-12) worst = std::max(worst, std::abs(1.0 - (e * post).squaredNorm() / p));
    }
    return worst;
}

// (ii) for a compatible pair: joint statistics of "first then second" against
// "second then first", and the first's marginal with or without the second.
inline double order_failure(const std::vector<CMatrix>& es, const std::vector<CMatrix>& fs, const CVector& psi) {
    double worst = 0.0;
    for (const auto& e : es) {
        double marginal = 0.0;
        for (const auto& f : fs) {
            const double ef = (f * (e * psi)).squaredNorm(), fe = (e * (f * psi)).squaredNorm();
            worst = std::max(worst, std::abs(ef - fe));
            marginal += fe;
        }
        worst = std::max(worst, std::abs(marginal - (e * psi).squaredNorm()));
    }
    return worst;
}

} // namespace detail

/// Checks the ideal-measurement conditions on the realization's state and
/// operators: repeatability, order independence for compatible pairs, and
/// both again for every coarse-graining of every measurement (at most 8
/// outcomes each). Reports residuals instead of requiring validation, so
/// broken realizations show which condition fails.
inline IdealReport check_ideal(const Realization& r, const Scenario& s) {
    const auto layout = detail::layout_of(s);
    detail::check_shapes(r, layout);
    for (const auto& m : s.measurements())
        if (m.outcomes > coarse_graining_outcome_cap)
            throw CapExceeded("coarse-graining enumeration is limited to " +
                                  std::to_string(coarse_graining_outcome_cap) + " outcomes ('" + m.id + "')",
                              static_cast<std::size_t>(m.outcomes));
    IdealReport rep;
    auto note = [&](double& slot, double v, const std::string& what) {
        if (v > slot) {
            slot = v;
            if (v > realization_tolerance) rep.worst = what;
        }
    };
    for (const auto& m : s.measurements())
        note(rep.repeatability, detail::repeat_failure(r.projectors.at(m.id), r.state), "repeatability of '" + m.id + "'");
    for (const auto& [a, b] : layout.compatible)
        note(rep.nondisturbance, detail::order_failure(r.projectors.at(a), r.projectors.at(b), r.state),
             "order of '" + a + "' and '" + b + "'");
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& id = s.measurement(i).id;
        for (const auto& blocks : detail::set_partitions(s.outcomes(i))) {
            ++rep.coarse_grainings;
            const auto es = detail::merged(r.projectors.at(id), blocks);
            note(rep.coarse_repeatability, detail::repeat_failure(es, r.state), "coarse-graining of '" + id + "'");
            for (std::size_t j = 0; j < s.size(); ++j)
                if (s.compatible(i, j))
                    note(rep.coarse_nondisturbance,
                         detail::order_failure(es, r.projectors.at(s.measurement(j).id), r.state),
                         "coarse-graining of '" + id + "' against '" + s.measurement(j).id + "'");
        }
    }
    rep.pass = std::max({rep.repeatability, rep.nondisturbance, rep.coarse_repeatability, rep.coarse_nondisturbance}) <=
               realization_tolerance;
    if (rep.pass) rep.worst.clear();
    return rep;
}

/// Independent composition: ids prefixed "1." and "2." as in tensor_scenarios,
/// operators E (x) 1 and 1 (x) F, product state.
inline Realization tensor_realizations(const Realization& a, const Realization& b) {
    Realization out;
    out.dimension = a.dimension * b.dimension;
    out.state = CVector(static_cast<Eigen::Index>(out.dimension));
    for (Eigen::Index i = 0; i < a.state.size(); ++i)
        out.state.segment(i * b.state.size(), b.state.size()) = a.state(i) * b.state;
    auto kron = [](const CMatrix& x, const CMatrix& y) {
        CMatrix k(x.rows() * y.rows(), x.cols() * y.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) k.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        return k;
    };
    const CMatrix ia = CMatrix::Identity(static_cast<Eigen::Index>(a.dimension), static_cast<Eigen::Index>(a.dimension));
    const CMatrix ib = CMatrix::Identity(static_cast<Eigen::Index>(b.dimension), static_cast<Eigen::Index>(b.dimension));
    for (const auto& [id, es] : a.projectors)
        for (const auto& e : es) out.projectors[detail::prefixed(1, id)].push_back(kron(e, ib));
    for (const auto& [id, es] : b.projectors)
        for (const auto& e : es) out.projectors[detail::prefixed(2, id)].push_back(kron(ia, e));
    return out;
}

/// Dimension-4 realization reaching the CHSH value 2 sqrt(2): A0 = Z, A1 = X,
/// B0 = (Z + X)/sqrt(2), B1 = (Z - X)/sqrt(2) on |Phi+>, outcome 0 for +1.
inline Realization tsirelson_realization() {
    const double h = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2cd z, x, i2 = Eigen::Matrix2cd::Identity();
    z << 1, 0, 0, -1;
    x << 0, 1, 1, 0;
    auto kron = [](const Eigen::Matrix2cd& p, const Eigen::Matrix2cd& q) {
        CMatrix k(4, 4);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) k.block(2 * i, 2 * j, 2, 2) = p(i, j) * q;
        return k;
    };
    auto split = [&](const Eigen::Matrix2cd& obs, bool alice) {
        std::vector<CMatrix> out;
        for (double sign : {1.0, -1.0}) {
            const Eigen::Matrix2cd e = 0.5 * (i2 + sign * obs);
            out.push_back(alice ? kron(e, i2) : kron(i2, e));
        }
        return out;
    };
    Realization r;
    r.dimension = 4;
    r.state = CVector::Zero(4);
    r.state(0) = r.state(3) = h;
    r.projectors["x0"] = split(z, true);
    r.projectors["x1"] = split(x, true);
    r.projectors["y0"] = split(h * (z + x), false);
    r.projectors["y1"] = split(h * (z - x), false);
    return r;
}

} // namespace exwb
