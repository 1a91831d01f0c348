#pragma once

// Membership in the combinatorial sets of an exclusivity graph: QSTAB(G)
// (single-copy exclusivity), E^n(G) (n-copy exclusivity via OR powers),
// STAB(G) and the local polytope of a behaviour, plus linear optimisation over
// QSTAB/STAB for antiblocker queries. Every verdict carries a certificate that
// the `verify_*` functions re-check without the solver.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <memory>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "exwb/clique.hpp"
#include "exwb/graph.hpp"
#include "exwb/lp.hpp"
#include "exwb/scenario.hpp"

namespace exwb {

inline constexpr double ep_tolerance = 1e-9;

enum class CertificateKind { None, CliqueViolation, Mixture, SeparatingInequality };

inline const char* to_string(CertificateKind k) {
    switch (k) {
        case CertificateKind::None: return "none";
        case CertificateKind::CliqueViolation: return "clique-violation";
        case CertificateKind::Mixture: return "mixture";
        case CertificateKind::SeparatingInequality: return "separating-inequality";
    }
    return "?";
}

/// Point of a mixture: a set of vertices (independent set) or a deterministic
/// assignment (one outcome per measurement), with its coefficient.
struct MixtureTerm {
    std::vector<std::size_t> support;
    double coefficient = 0.0;
};

/// coefficients . x <= bound holds on the whole set; `value` is the left side at
/// the tested point (value > bound proves non-membership).
struct SeparatingInequality {
    std::string name;
    std::vector<double> coefficients;
    double bound = 0.0;
    double value = 0.0;
};

struct MembershipVerdict {
    bool member = false;
    std::string set;
    int copies = 1;
    double value = 0.0;  // clique weight for exclusivity sets, see satisfies_ep
    bool value_exact = true;
    CertificateKind kind = CertificateKind::None;
    CliqueWitness clique;                   // in or_power(g, copies) indexing
    std::vector<std::vector<std::size_t>> clique_coordinates;  // per clique vertex, one g-vertex per copy
    std::vector<MixtureTerm> mixture;
    std::optional<SeparatingInequality> inequality;
};

// ---- exclusivity principle over n copies ---------------------------------

namespace detail {

inline constexpr std::size_t product_bound_row_cap = 64;
inline constexpr std::size_t product_bound_column_cap = 40;

// Node bound for cliques of rows * cols (OR product, index i * |cols| + s).
// With y a cover of the column weights by independent sets of `cols`
// (sum over I containing s of y_I >= u_s), the rows of a clique meeting one
// I are pairwise distinct and adjacent, hence
//   weight(K) <= sum_I y_I * omega(rows restricted to the rows K meets in I).
// With `transposed` the roles swap: the cover is over rows (label / cols) and
// the inner clique problem over columns; this needs rows and columns to be
// the same graph, as in an OR square.
class ProductBound : public ExtraBound {
public:
    ProductBound(const ExclusivityGraph& rows, VertexWeights row_w, std::size_t cols,
                 std::vector<std::pair<std::vector<std::size_t>, double>> cover, bool transposed = false)
        : rows_(rows), row_w_(std::move(row_w)), cols_(cols), cover_(std::move(cover)), transposed_(transposed) {}

    void bind(const std::vector<std::size_t>& rank_to_label) override {
        row_of_.resize(rank_to_label.size());
        auto inner = [&](std::size_t label) { return transposed_ ? label % cols_ : label / cols_; };
        auto outer = [&](std::size_t label) { return transposed_ ? label / cols_ : label % cols_; };
        for (std::size_t r = 0; r < rank_to_label.size(); ++r) row_of_[r] = inner(rank_to_label[r]);
        masks_.assign(cover_.size(), Bitset(rank_to_label.size()));
        for (std::size_t k = 0; k < cover_.size(); ++k) {
            std::vector<bool> in(cols_, false);
            for (auto s : cover_[k].first) in[s] = true;
            for (std::size_t r = 0; r < rank_to_label.size(); ++r)
                if (in[outer(rank_to_label[r])]) masks_[k].set(r);
        }
    }

    double operator()(const Bitset& cand) override {
        double total = 0.0;
        const auto& cw = cand.words();
        for (std::size_t k = 0; k < cover_.size(); ++k) {
            const auto& mw = masks_[k].words();
            std::uint64_t hit = 0;
            for (std::size_t j = 0; j < cw.size(); ++j) {
                std::uint64_t x = cw[j] & mw[j];
                while (x) {
                    hit |= std::uint64_t{1} << row_of_[(j << 6) + static_cast<std::size_t>(std::countr_zero(x))];
                    x &= x - 1;
                }
            }
            if (hit) total += cover_[k].second * row_omega(hit);
        }
        return total;
    }

private:
    double row_omega(std::uint64_t set) {
        if (auto it = memo_.find(set); it != memo_.end()) return it->second;
        std::vector<std::size_t> vs;
        for (std::uint64_t x = set; x; x &= x - 1) vs.push_back(static_cast<std::size_t>(std::countr_zero(x)));
        std::vector<Bitset> adj(vs.size(), Bitset(vs.size()));
        std::vector<double> w(vs.size());
        for (std::size_t a = 0; a < vs.size(); ++a) {
            w[a] = row_w_[vs[a]];
            for (std::size_t b = 0; b < vs.size(); ++b)
                if (a != b && rows_.adjacent(vs[a], vs[b])) adj[a].set(b);
        }
        const double v = WeightedCliqueSearch(adj, w).optimum();
        memo_.emplace(set, v);
        return v;
    }

    const ExclusivityGraph& rows_;
    VertexWeights row_w_;
    std::size_t cols_;
    std::vector<std::pair<std::vector<std::size_t>, double>> cover_;
    bool transposed_ = false;
    std::vector<std::size_t> row_of_;
    std::vector<Bitset> masks_;
    std::unordered_map<std::uint64_t, double> memo_;
};

// The smaller of several node bounds.
class MinBound : public ExtraBound {
public:
    explicit MinBound(std::vector<std::unique_ptr<ExtraBound>> parts) : parts_(std::move(parts)) {}

    void bind(const std::vector<std::size_t>& rank_to_label) override {
        for (auto& p : parts_) p->bind(rank_to_label);
    }

    double operator()(const Bitset& cand) override {
        double b = std::numeric_limits<double>::infinity();
        for (auto& p : parts_) b = std::min(b, (*p)(cand));
        return b;
    }

private:
    std::vector<std::unique_ptr<ExtraBound>> parts_;
};

// Minimum fractional cover of `u` by maximal independent sets of `h`,
// rescaled after the solve so the covering inequalities hold as computed.
inline std::optional<std::vector<std::pair<std::vector<std::size_t>, double>>> fractional_cover(
    const ExclusivityGraph& h, const VertexWeights& u) {
    const auto sets = maximal_cliques(complement(h));
    LinearProgram lp(sets.size());
    std::fill(lp.objective.begin(), lp.objective.end(), 1.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(h.size());
    for (std::size_t k = 0; k < sets.size(); ++k)
        for (auto s : sets[k]) rows[s].emplace_back(k, 1.0);
    for (std::size_t s = 0; s < h.size(); ++s) lp.add_row(std::move(rows[s]), RowSense::GreaterEqual, u[s]);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) return std::nullopt;

    std::vector<double> y(sets.size());
    for (std::size_t k = 0; k < sets.size(); ++k) y[k] = std::max(0.0, sol.x[k]);
    std::vector<double> cover(h.size(), 0.0);
    for (std::size_t k = 0; k < sets.size(); ++k)
        for (auto s : sets[k]) cover[s] += y[k];
    double scale = 1.0;
    for (std::size_t s = 0; s < h.size(); ++s) {
        if (cover[s] <= 0.0) return std::nullopt;
        scale = std::max(scale, u[s] / cover[s]);
    }
    scale *= 1.0 + 1e-12;
    std::vector<std::pair<std::vector<std::size_t>, double>> out;
    for (std::size_t k = 0; k < sets.size(); ++k)
        if (y[k] > 0.0) out.emplace_back(sets[k], y[k] * scale);
    return out;
}

} // namespace detail

/// Exclusivity over n copies: is the maximum weight of a clique of
/// or_power(g, n) under w^{(x)n} at most 1 + tol? Zero-weight vertices are
/// dropped first. For n = 1 the maximum is computed exactly and reported in
/// `value`. For n >= 2 a violation found at one copy is lifted to its n-fold
/// product; otherwise a decision search looks for a clique above 1 + tol.
/// `value` is then the weight of the certificate clique, or for members the
/// best lower bound known (the n-th power of the single-copy maximum), with
/// `value_exact` false.
inline MembershipVerdict satisfies_ep(const ExclusivityGraph& g, const VertexWeights& w, int n,
                                      double tol = ep_tolerance, std::size_t cap = default_vertex_cap) {
    validate_weights(g, w);
    if (n < 1) throw Error("number of copies must be at least 1");
    std::vector<std::size_t> keep;
    for (std::size_t v = 0; v < g.size(); ++v)
        if (w[v] > 0.0) keep.push_back(v);
    MembershipVerdict out;
    out.set = n == 1 ? "qstab" : "E" + std::to_string(n);
    out.copies = n;
    out.member = true;
    if (keep.empty()) return out;

    const auto sub = induced_subgraph(g, keep);
    VertexWeights wk;
    for (auto v : keep) wk.push_back(w[v]);
    const std::size_t k = keep.size();
    const auto single = max_weight_clique(sub, wk);
    const double lifted = std::pow(single.weight_sum, n);

    // Reduced product indices (mixed radix over keep, first copy most significant).
    std::vector<std::size_t> found;
    double found_weight = 0.0;
    if (n == 1 || single.weight_sum > 1.0 + tol) {
        out.value = lifted;
        out.value_exact = n == 1;
        if (single.weight_sum <= 1.0 + tol) return out;
        std::vector<std::size_t> digits(static_cast<std::size_t>(n), 0);
        const std::size_t m = single.vertices.size();
        while (true) {
            std::size_t idx = 0;
            for (auto d : digits) idx = idx * k + single.vertices[d];
            found.push_back(idx);
            std::size_t c = digits.size();
            while (c > 0 && ++digits[c - 1] == m) digits[--c] = 0;
            if (c == 0) break;
        }
        found_weight = lifted;
    } else {
        const auto power = or_power(sub, n, cap);
        const auto pw = tensor_power(wk, n);
        std::vector<detail::Bitset> adj(power.size());
        for (std::size_t v = 0; v < power.size(); ++v) adj[v] = power.neighbours(v);
        std::unique_ptr<detail::ExtraBound> extra;
        std::optional<ExclusivityGraph> rows;
        if (k <= detail::product_bound_column_cap && power.size() / k <= detail::product_bound_row_cap) {
            if (auto cover = detail::fractional_cover(sub, wk)) {
                rows = n == 2 ? sub : or_power(sub, n - 1, cap);
                if (n == 2) {
                    // An OR square is symmetric in its factors: bound from both sides.
                    std::vector<std::unique_ptr<detail::ExtraBound>> parts;
                    parts.push_back(std::make_unique<detail::ProductBound>(*rows, wk, k, *cover));
                    parts.push_back(std::make_unique<detail::ProductBound>(*rows, wk, k, std::move(*cover), true));
                    extra = std::make_unique<detail::MinBound>(std::move(parts));
                } else {
                    extra = std::make_unique<detail::ProductBound>(*rows, tensor_power(wk, n - 1), k, std::move(*cover));
                }
            }
        }
        detail::WeightedCliqueSearch search(adj, pw, extra.get());
        found = search.exceeding(1.0 + tol);
        for (auto a : found) found_weight += pw[a];
        out.value = found.empty() ? lifted : found_weight;
        out.value_exact = false;
        if (found.empty()) return out;
    }

    out.member = false;
    out.kind = CertificateKind::CliqueViolation;
    std::sort(found.begin(), found.end());
    // Ordering by reduced index and by full index agree (keep is increasing).
    for (auto a : found) {
        std::vector<std::size_t> coords(static_cast<std::size_t>(n));
        for (int c = n; c-- > 0;) {
            coords[static_cast<std::size_t>(c)] = keep[a % k];
            a /= k;
        }
        std::size_t idx = 0;
        for (auto v : coords) idx = idx * g.size() + v;
        out.clique.vertices.push_back(idx);
        out.clique_coordinates.push_back(std::move(coords));
    }
    out.clique.weight_sum = found_weight;
    return out;
}

/// Independent re-check of a clique certificate: pairwise OR-adjacency decided
/// from `g` coordinate by coordinate, weight recomputed as a product. Returns
/// the recomputed weight sum, or nullopt if the vertices are not a clique.
inline std::optional<double> verify_clique_certificate(const ExclusivityGraph& g, const VertexWeights& w,
                                                       const std::vector<std::vector<std::size_t>>& coords) {
    double total = 0.0;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        double p = 1.0;
        for (auto v : coords[a]) {
            if (v >= g.size()) return std::nullopt;
            p *= w[v];
        }
        total += p;
        for (std::size_t b = a + 1; b < coords.size(); ++b) {
            if (coords[a].size() != coords[b].size()) return std::nullopt;
            bool exclusive = false;
            for (std::size_t c = 0; c < coords[a].size(); ++c)
                exclusive |= g.adjacent(coords[a][c], coords[b][c]);
            if (!exclusive) return std::nullopt;
        }
    }
    return total;
}

inline MembershipVerdict in_qstab(const ExclusivityGraph& g, const VertexWeights& w, double tol = ep_tolerance) {
    return satisfies_ep(g, w, 1, tol);
}

inline MembershipVerdict in_E_n(const ExclusivityGraph& g, const VertexWeights& w, int n, double tol = ep_tolerance,
                                std::size_t cap = default_vertex_cap) {
    return satisfies_ep(g, w, n, tol, cap);
}

// ---- STAB(G) ---------------------------------------------------------------

namespace detail {

inline double dot_on_set(const std::vector<double>& a, const std::vector<std::size_t>& set) {
    double s = 0.0;
    for (auto v : set) s += a[v];
    return s;
}

} // namespace detail

/// Convex-combination test over characteristic vectors of independent sets
/// (the empty set absorbs slack). Certificate: the mixture, or an inequality
/// a.x <= beta valid on every independent set with a.w > beta.
inline MembershipVerdict in_stab(const ExclusivityGraph& g, const VertexWeights& w,
                                 std::size_t cap = independent_set_vertex_cap) {
    validate_weights(g, w);
    const auto sets = enumerate_independent_sets(g, cap);
    LinearProgram lp(sets.size());
    {
        std::vector<std::pair<std::size_t, double>> ones;
        for (std::size_t k = 0; k < sets.size(); ++k) ones.emplace_back(k, 1.0);
        lp.add_row(std::move(ones), RowSense::Equal, 1.0);
    }
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(g.size());
    for (std::size_t k = 0; k < sets.size(); ++k)
        for (auto v : sets[k]) rows[v].emplace_back(k, 1.0);
    for (std::size_t v = 0; v < g.size(); ++v) lp.add_row(std::move(rows[v]), RowSense::Equal, w[v]);

    const auto sol = solve_lp(lp);
    MembershipVerdict out;
    out.set = "stab";
    if (sol.status == LpStatus::Optimal) {
        out.member = true;
        out.kind = CertificateKind::Mixture;
        for (std::size_t k = 0; k < sets.size(); ++k)
            if (sol.x[k] > 1e-15) out.mixture.push_back({sets[k], sol.x[k]});
        return out;
    }
    // f0 + sum_{v in S} f_v >= 0 for every S and f0 + f.w < 0  =>  (-f).x <= f0 separates.
    SeparatingInequality ineq;
    ineq.name = "lp-dual";
    ineq.coefficients.resize(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) ineq.coefficients[v] = -sol.farkas[v + 1];
    ineq.bound = 0.0;
    for (const auto& s : sets) ineq.bound = std::max(ineq.bound, detail::dot_on_set(ineq.coefficients, s));
    for (std::size_t v = 0; v < g.size(); ++v) ineq.value += ineq.coefficients[v] * w[v];
    out.member = false;
    out.kind = CertificateKind::SeparatingInequality;
    out.inequality = std::move(ineq);
    return out;
}

/// Re-check of a STAB mixture: independent supports, nonnegative coefficients
/// summing to 1, reproducing w. Returns the max reproduction error (inf if invalid).
inline double verify_stab_mixture(const ExclusivityGraph& g, const VertexWeights& w,
                                  const std::vector<MixtureTerm>& mixture) {
    std::vector<double> x(g.size(), 0.0);
    double total = 0.0;
    for (const auto& t : mixture) {
        if (t.coefficient < 0.0 || !is_independent(g, t.support)) return INFINITY;
        total += t.coefficient;
        for (auto v : t.support) x[v] += t.coefficient;
    }
    double err = std::abs(total - 1.0);
    for (std::size_t v = 0; v < g.size(); ++v) err = std::max(err, std::abs(x[v] - w[v]));
    return err;
}

/// Margin by which an inequality separates w from STAB(g), recomputing the
/// bound by enumerating independent sets.
inline double verify_stab_separation(const ExclusivityGraph& g, const VertexWeights& w,
                                     const SeparatingInequality& ineq) {
    double bound = 0.0, value = 0.0;
    for (const auto& s : enumerate_independent_sets(g)) bound = std::max(bound, detail::dot_on_set(ineq.coefficients, s));
    for (std::size_t v = 0; v < g.size(); ++v) value += ineq.coefficients[v] * w[v];
    return value - bound;
}

// ---- local polytope ------------------------------------------------------

inline constexpr std::size_t local_assignment_cap = 1000000;

namespace detail {

inline std::size_t count_assignments(const Scenario& s, std::size_t cap) {
    std::size_t total = 1;
    for (std::size_t m = 0; m < s.size(); ++m) {
        const auto k = static_cast<std::size_t>(s.outcomes(m));
        if (total > cap / k) {
            double need = 1.0;
            for (std::size_t j = 0; j < s.size(); ++j) need *= s.outcomes(j);
            throw CapExceeded("local polytope needs more deterministic assignments than the cap",
                              need > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(need));
        }
        total *= k;
    }
    return total;
}

// Outcome of every measurement for assignment number `idx` (first measurement most significant).
inline std::vector<int> assignment(const Scenario& s, std::size_t idx) {
    std::vector<int> out(s.size());
    for (std::size_t m = s.size(); m-- > 0;) {
        const auto k = static_cast<std::size_t>(s.outcomes(m));
        out[m] = static_cast<int>(idx % k);
        idx /= k;
    }
    return out;
}

// Position in the stacked vector hit by a deterministic assignment, per maximal context.
inline std::vector<std::size_t> stacked_hits(const Scenario& s, const std::vector<int>& a) {
    std::vector<std::size_t> hits;
    std::size_t offset = 0;
    for (const auto& c : s.maximal_contexts()) {
        std::vector<int> outs;
        for (auto m : c.members) outs.push_back(a[m]);
        hits.push_back(offset + s.joint_index(c, outs));
        offset += s.table_size(c);
    }
    return hits;
}

inline double max_over_assignments(const Scenario& s, const std::vector<double>& coeffs, std::size_t cap) {
    const std::size_t count = count_assignments(s, cap);
    double best = -INFINITY;
    for (std::size_t idx = 0; idx < count; ++idx) {
        double v = 0.0;
        for (auto h : stacked_hits(s, assignment(s, idx))) v += coeffs[h];
        best = std::max(best, v);
    }
    return best;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Two parties with two binary measurements each: returns the ids {a0,a1,b0,b1}.
inline std::optional<std::array<std::size_t, 4>> chsh_shape(const Scenario& s) {
    if (s.size() != 4 || s.maximal_contexts().size() != 4) return std::nullopt;
    for (std::size_t m = 0; m < 4; ++m)
        if (s.outcomes(m) != 2) return std::nullopt;
    for (const auto& c : s.maximal_contexts())
        if (c.members.size() != 2) return std::nullopt;
    // Measurement 0's partners are the other party.
    std::vector<std::size_t> other, same = {0};
    for (std::size_t m = 1; m < 4; ++m) (s.compatible(0, m) ? other : same).push_back(m);
    if (other.size() != 2 || same.size() != 2) return std::nullopt;
    if (s.compatible(same[0], same[1]) || s.compatible(other[0], other[1])) return std::nullopt;
    for (auto a : same)
        for (auto b : other)
            if (!s.compatible(a, b)) return std::nullopt;
    return std::array<std::size_t, 4>{same[0], same[1], other[0], other[1]};
}

// The eight CHSH variants sum_xy (+/-) E_xy with one minus sign, in both
// overall signs, written as coefficients on the stacked vector.
inline std::vector<SeparatingInequality> chsh_variants(const Scenario& s, const std::array<std::size_t, 4>& ids) {
    std::vector<SeparatingInequality> out;
    std::size_t total = 0;
    for (const auto& c : s.maximal_contexts()) total += s.table_size(c);
    for (int sign : {1, -1})
        for (int minus = 0; minus < 4; ++minus) {
            SeparatingInequality q;
            q.coefficients.assign(total, 0.0);
            std::size_t offset = 0;
            for (const auto& c : s.maximal_contexts()) {
                const int x = c.members[0] == ids[1] || c.members[1] == ids[1];
                const int y = c.members[0] == ids[3] || c.members[1] == ids[3];
                const double e = sign * ((x * 2 + y) == minus ? -1.0 : 1.0);
                // E = P(equal) - P(different); table order is by member index, parity is symmetric.
                for (std::size_t k = 0; k < 4; ++k) q.coefficients[offset + k] = (k == 0 || k == 3) ? e : -e;
                offset += s.table_size(c);
            }
            q.name = std::string(sign > 0 ? "" : "-") + "CHSH[minus on " + s.measurement(ids[minus >> 1]).id + "," +
                     s.measurement(ids[2 + (minus & 1)]).id + "]";
            out.push_back(std::move(q));
        }
    return out;
}

} // namespace detail

/// Convex-combination test over deterministic assignments of all measurements.
/// Non-members of CHSH-shaped scenarios get the most violated CHSH inequality
/// when one is violated; otherwise the LP's Farkas inequality is reported.
inline MembershipVerdict in_local_polytope(const Behaviour& b, std::size_t cap = local_assignment_cap,
                                           double tol = ep_tolerance) {
    const auto& s = b.scenario();
    const std::size_t count = detail::count_assignments(s, cap);
    const auto p = b.stacked();
    LinearProgram lp(count);
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(p.size());
    for (std::size_t idx = 0; idx < count; ++idx)
        for (auto h : detail::stacked_hits(s, detail::assignment(s, idx))) rows[h].emplace_back(idx, 1.0);
    for (std::size_t r = 0; r < p.size(); ++r) lp.add_row(std::move(rows[r]), RowSense::Equal, p[r]);
    {
        std::vector<std::pair<std::size_t, double>> ones;
        for (std::size_t idx = 0; idx < count; ++idx) ones.emplace_back(idx, 1.0);
        lp.add_row(std::move(ones), RowSense::Equal, 1.0);
    }
    const auto sol = solve_lp(lp);
    MembershipVerdict out;
    out.set = "local";
    if (sol.status == LpStatus::Optimal) {
        out.member = true;
        out.kind = CertificateKind::Mixture;
        for (std::size_t idx = 0; idx < count; ++idx)
            if (sol.x[idx] > 1e-15) {
                const auto a = detail::assignment(s, idx);
                out.mixture.push_back({std::vector<std::size_t>(a.begin(), a.end()), sol.x[idx]});
            }
        return out;
    }
    out.member = false;
    out.kind = CertificateKind::SeparatingInequality;
    if (auto ids = detail::chsh_shape(s)) {
        std::optional<SeparatingInequality> best;
        for (auto& q : detail::chsh_variants(s, *ids)) {
            q.bound = detail::max_over_assignments(s, q.coefficients, cap);
            q.value = detail::dot(q.coefficients, p);
            if (q.value > q.bound + tol && (!best || q.value - q.bound > best->value - best->bound)) best = q;
        }
        if (best) {
            out.inequality = std::move(best);
            return out;
        }
    }
    // Farkas: sum_r f_r [a hits r] + f_norm >= 0 for all a, f.p + f_norm < 0.
    SeparatingInequality q;
    q.name = "lp-dual";
    for (std::size_t r = 0; r < p.size(); ++r) q.coefficients.push_back(-sol.farkas[r]);
    q.bound = detail::max_over_assignments(s, q.coefficients, cap);
    q.value = detail::dot(q.coefficients, p);
    out.inequality = std::move(q);
    return out;
}

/// value - bound of an inequality on the stacked vector, with the bound
/// recomputed over all deterministic assignments.
inline double verify_local_separation(const Behaviour& b, const SeparatingInequality& ineq,
                                      std::size_t cap = local_assignment_cap) {
    const auto p = b.stacked();
    if (ineq.coefficients.size() != p.size()) return -INFINITY;
    return detail::dot(ineq.coefficients, p) - detail::max_over_assignments(b.scenario(), ineq.coefficients, cap);
}

/// Max reproduction error of a deterministic-assignment mixture (inf if invalid).
inline double verify_local_mixture(const Behaviour& b, const std::vector<MixtureTerm>& mixture) {
    const auto& s = b.scenario();
    const auto p = b.stacked();
    std::vector<double> x(p.size(), 0.0);
    double total = 0.0;
    for (const auto& t : mixture) {
        if (t.coefficient < 0.0 || t.support.size() != s.size()) return INFINITY;
        std::vector<int> a;
        for (std::size_t m = 0; m < s.size(); ++m) {
            if (t.support[m] >= static_cast<std::size_t>(s.outcomes(m))) return INFINITY;
            a.push_back(static_cast<int>(t.support[m]));
        }
        total += t.coefficient;
        for (auto h : detail::stacked_hits(s, a)) x[h] += t.coefficient;
    }
    double err = std::abs(total - 1.0);
    for (std::size_t r = 0; r < p.size(); ++r) err = std::max(err, std::abs(x[r] - p[r]));
    return err;
}

// ---- antiblocker queries -------------------------------------------------

enum class PolytopeKind { QSTAB, STAB };

struct LinearMax {
    double value = 0.0;
    std::vector<double> point;
};

/// max q.p over QSTAB(g) (clique constraints on every maximal clique) or STAB(g)
/// (LP over independent-set vertices). q lies in the antiblocker iff value <= 1.
inline LinearMax antiblocker_max(PolytopeKind kind, const ExclusivityGraph& g, const std::vector<double>& q) {
    if (q.size() != g.size()) throw Error("direction has the wrong length");
    for (double x : q)
        if (!(x >= 0.0) || !std::isfinite(x)) throw Error("antiblocker directions must be nonnegative");
    LinearMax out;
    if (kind == PolytopeKind::QSTAB) {
        LinearProgram lp(g.size(), true);
        lp.objective = q;
        for (const auto& c : maximal_cliques(g)) {
            std::vector<std::pair<std::size_t, double>> row;
            for (auto v : c) row.emplace_back(v, 1.0);
            lp.add_row(std::move(row), RowSense::LessEqual, 1.0);
        }
        const auto sol = solve_lp(lp);
        if (sol.status != LpStatus::Optimal) throw Error("QSTAB linear program did not solve");
        out.value = sol.value;
        out.point = sol.x;
        return out;
    }
    const auto sets = enumerate_independent_sets(g);
    LinearProgram lp(sets.size(), true);
    std::vector<std::pair<std::size_t, double>> ones;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        lp.objective[k] = detail::dot_on_set(q, sets[k]);
        ones.emplace_back(k, 1.0);
    }
    lp.add_row(std::move(ones), RowSense::Equal, 1.0);
    const auto sol = solve_lp(lp);
    if (sol.status != LpStatus::Optimal) throw Error("STAB linear program did not solve");
    out.value = sol.value;
    out.point.assign(g.size(), 0.0);
    for (std::size_t k = 0; k < sets.size(); ++k)
        for (auto v : sets[k]) out.point[v] += sol.x[k];
    return out;
}

} // namespace exwb
