#pragma once

// Bell / Kochen-Specker scenarios, contexts, events and behaviours.
//
// Measurements are kept sorted by id, so a context is a sorted vector of
// measurement indices and its key (ids joined by ",") is canonical. Maximal
// contexts default to the maximal cliques of the compatibility graph; they can
// be listed explicitly for measurements that are pairwise but not jointly
// compatible (Specker's triangle has three 2-element contexts). A
// behaviour stores one joint probability table per maximal context; tables
// are indexed lexicographically over the members' outcomes, first member
// most significant. Everything on sub-contexts is derived by marginalization.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exwb/error.hpp"

namespace exwb {

struct Measurement {
    std::string id;
    int outcomes = 2;
};

struct Context {
    std::vector<std::size_t> members;  // sorted measurement indices

    friend bool operator==(const Context&, const Context&) = default;
    friend auto operator<=>(const Context&, const Context&) = default;
};

/// One joint outcome on a context. `outcomes[k]` belongs to `context.members[k]`.
struct Event {
    Context context;
    std::vector<int> outcomes;

    friend bool operator==(const Event&, const Event&) = default;
};

class Scenario {
public:
    Scenario() = default;

    Scenario(std::vector<Measurement> measurements,
             const std::vector<std::pair<std::string, std::string>>& compatible,
             std::optional<std::vector<std::vector<std::string>>> contexts = std::nullopt)
        : measurements_(std::move(measurements)) {
        std::sort(measurements_.begin(), measurements_.end(),
                  [](const Measurement& a, const Measurement& b) { return a.id < b.id; });
        for (std::size_t i = 0; i < measurements_.size(); ++i) {
            if (measurements_[i].id.empty()) throw Error("measurement id must be nonempty");
            if (measurements_[i].outcomes < 2)
                throw Error("measurement '" + measurements_[i].id + "' needs at least 2 outcomes");
            if (i > 0 && measurements_[i].id == measurements_[i - 1].id)
                throw Error("duplicate measurement id '" + measurements_[i].id + "'");
        }
        const std::size_t n = measurements_.size();
        compat_.assign(n, std::vector<bool>(n, false));
        for (const auto& [a, b] : compatible) {
            const std::size_t i = index_of(a), j = index_of(b);
            if (i == j) throw Error("measurement '" + a + "' cannot be compatible with itself");
            compat_[i][j] = compat_[j][i] = true;
        }
        if (contexts)
            set_explicit_contexts(*contexts);
        else
            build_maximal_contexts();
    }

    std::size_t size() const { return measurements_.size(); }
    const std::vector<Measurement>& measurements() const { return measurements_; }
    const Measurement& measurement(std::size_t i) const { return measurements_.at(i); }
    int outcomes(std::size_t i) const { return measurements_.at(i).outcomes; }
    bool compatible(std::size_t i, std::size_t j) const { return compat_.at(i).at(j); }

    std::size_t index_of(const std::string& id) const {
        auto it = std::lower_bound(measurements_.begin(), measurements_.end(), id,
                                   [](const Measurement& m, const std::string& v) { return m.id < v; });
        if (it == measurements_.end() || it->id != id) throw Error("unknown measurement id '" + id + "'");
        return static_cast<std::size_t>(it - measurements_.begin());
    }

    std::vector<std::pair<std::string, std::string>> compatible_pairs() const {
        std::vector<std::pair<std::string, std::string>> out;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                if (compat_[i][j]) out.emplace_back(measurements_[i].id, measurements_[j].id);
        return out;
    }

    /// Nonempty, sorted, and contained in some maximal context.
    bool is_context(const Context& c) const {
        if (c.members.empty()) return false;
        for (std::size_t k = 0; k < c.members.size(); ++k) {
            if (c.members[k] >= size()) return false;
            if (k > 0 && c.members[k] <= c.members[k - 1]) return false;
        }
        for (const auto& m : maximal_)
            if (std::includes(m.members.begin(), m.members.end(), c.members.begin(), c.members.end())) return true;
        return false;
    }

    const std::vector<Context>& maximal_contexts() const { return maximal_; }
    bool has_explicit_contexts() const { return explicit_; }

    std::string key(const Context& c) const {
        std::string out;
        for (std::size_t k = 0; k < c.members.size(); ++k) {
            if (k) out += ',';
            out += measurements_.at(c.members[k]).id;
        }
        return out;
    }

    Context context_from_key(const std::string& key) const {
        Context c;
        std::size_t start = 0;
        while (start <= key.size()) {
            const std::size_t comma = key.find(',', start);
            const std::string id = key.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            c.members.push_back(index_of(id));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        std::sort(c.members.begin(), c.members.end());
        if (!is_context(c)) throw Error("'" + key + "' is not a context of the scenario");
        return c;
    }

    /// Number of joint outcomes of a context.
    std::size_t table_size(const Context& c) const {
        std::size_t n = 1;
        for (auto m : c.members) n *= static_cast<std::size_t>(outcomes(m));
        return n;
    }

    std::size_t joint_index(const Context& c, const std::vector<int>& outcomes) const {
        std::size_t idx = 0;
        for (std::size_t k = 0; k < c.members.size(); ++k)
            idx = idx * static_cast<std::size_t>(this->outcomes(c.members[k])) + static_cast<std::size_t>(outcomes[k]);
        return idx;
    }

    std::vector<int> joint_outcomes(const Context& c, std::size_t idx) const {
        std::vector<int> out(c.members.size());
        for (std::size_t k = c.members.size(); k-- > 0;) {
            const auto n = static_cast<std::size_t>(outcomes(c.members[k]));
            out[k] = static_cast<int>(idx % n);
            idx /= n;
        }
        return out;
    }

    /// "(01|x0,y0)" style rendering.
    std::string event_string(const Event& e) const {
        std::string out = "(";
        for (auto o : e.outcomes) out += std::to_string(o) + (e.outcomes.size() > 1 && outcomes_wide(e) ? " " : "");
        if (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "|" + key(e.context) + ")";
    }

    friend bool operator==(const Scenario& a, const Scenario& b) {
        return a.compat_ == b.compat_ && a.maximal_ == b.maximal_ && a.measurements_.size() == b.measurements_.size() &&
               std::equal(a.measurements_.begin(), a.measurements_.end(), b.measurements_.begin(),
                          [](const Measurement& x, const Measurement& y) {
                              return x.id == y.id && x.outcomes == y.outcomes;
                          });
    }

private:
    bool outcomes_wide(const Event& e) const {
        for (auto m : e.context.members)
            if (outcomes(m) > 10) return true;
        return false;
    }

    void set_explicit_contexts(const std::vector<std::vector<std::string>>& contexts) {
        explicit_ = true;
        for (const auto& ids : contexts) {
            Context c;
            for (const auto& id : ids) c.members.push_back(index_of(id));
            std::sort(c.members.begin(), c.members.end());
            if (c.members.empty()) throw Error("contexts must be nonempty");
            if (std::adjacent_find(c.members.begin(), c.members.end()) != c.members.end())
                throw Error("context lists a measurement twice");
            for (std::size_t k = 0; k < c.members.size(); ++k)
                for (std::size_t l = 0; l < k; ++l)
                    if (!compat_[c.members[l]][c.members[k]])
                        throw Error("context '" + key(c) + "' contains incompatible measurements");
            maximal_.push_back(std::move(c));
        }
        std::sort(maximal_.begin(), maximal_.end());
        maximal_.erase(std::unique(maximal_.begin(), maximal_.end()), maximal_.end());
        for (const auto& a : maximal_)
            for (const auto& b : maximal_)
                if (!(a == b) && std::includes(b.members.begin(), b.members.end(), a.members.begin(), a.members.end()))
                    throw Error("context '" + key(a) + "' is contained in '" + key(b) + "'; list maximal contexts only");
        // Every measurement and every compatible pair must occur in some context.
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i; j < size(); ++j) {
                if (i != j && !compat_[i][j]) continue;
                Context pair{i == j ? std::vector<std::size_t>{i} : std::vector<std::size_t>{i, j}};
                if (!is_context(pair))
                    throw Error("no listed context contains '" + key(pair) + "'");
            }
    }

    // Bron-Kerbosch with pivoting; results sorted lexicographically.
    void build_maximal_contexts() {
        maximal_.clear();
        std::vector<std::size_t> r, p(size()), x;
        std::iota(p.begin(), p.end(), 0);
        bron_kerbosch(r, p, x);
        for (auto& c : maximal_) std::sort(c.members.begin(), c.members.end());
        std::sort(maximal_.begin(), maximal_.end());
    }

    void bron_kerbosch(std::vector<std::size_t>& r, std::vector<std::size_t> p, std::vector<std::size_t> x) {
        if (p.empty() && x.empty()) {
            if (!r.empty()) maximal_.push_back(Context{r});
            return;
        }
        std::size_t pivot = !p.empty() ? p.front() : x.front();
        std::size_t best = 0;
        for (auto src : {&p, &x})
            for (auto u : *src) {
                std::size_t cnt = 0;
                for (auto v : p) cnt += compat_[u][v];
                if (cnt > best) best = cnt, pivot = u;
            }
        const std::vector<std::size_t> candidates = [&] {
            std::vector<std::size_t> out;
            for (auto v : p)
                if (!compat_[pivot][v]) out.push_back(v);
            return out;
        }();
        for (auto v : candidates) {
            std::vector<std::size_t> p2, x2;
            for (auto u : p)
                if (compat_[v][u]) p2.push_back(u);
            for (auto u : x)
                if (compat_[v][u]) x2.push_back(u);
            r.push_back(v);
            bron_kerbosch(r, p2, x2);
            r.pop_back();
            p.erase(std::find(p.begin(), p.end(), v));
            x.push_back(v);
        }
    }

    std::vector<Measurement> measurements_;
    std::vector<std::vector<bool>> compat_;
    std::vector<Context> maximal_;
    bool explicit_ = false;
};

/// All contexts (nonempty subsets of maximal contexts), or only the maximal
/// ones, in lexicographic order of their sorted member ids.
inline std::vector<Context> enumerate_contexts(const Scenario& s, bool maximal_only) {
    if (maximal_only) return s.maximal_contexts();
    std::vector<Context> out;
    std::vector<std::size_t> cur;
    // Depth-first in increasing index order yields lexicographic order directly.
    auto rec = [&](auto&& self, std::size_t from) -> void {
        for (std::size_t v = from; v < s.size(); ++v) {
            cur.push_back(v);
            if (s.is_context(Context{cur})) {
                out.push_back(Context{cur});
                self(self, v + 1);
            }
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

using ProbabilityTable = std::vector<double>;

class Behaviour {
public:
    Behaviour() = default;

    /// `tables[k]` belongs to `scenario.maximal_contexts()[k]`.
    Behaviour(Scenario scenario, std::vector<ProbabilityTable> tables)
        : scenario_(std::move(scenario)), tables_(std::move(tables)) {
        const auto& ctx = scenario_.maximal_contexts();
        if (tables_.size() != ctx.size())
            throw Error("behaviour needs one table per maximal context (" + std::to_string(ctx.size()) +
                        "), got " + std::to_string(tables_.size()));
        for (std::size_t k = 0; k < ctx.size(); ++k) {
            if (tables_[k].size() != scenario_.table_size(ctx[k]))
                throw Error("table for context '" + scenario_.key(ctx[k]) + "' has " +
                            std::to_string(tables_[k].size()) + " entries, expected " +
                            std::to_string(scenario_.table_size(ctx[k])));
            for (double p : tables_[k])
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw Error("table for context '" + scenario_.key(ctx[k]) + "' has a negative or non-finite entry");
        }
    }

    /// Build from tables keyed by context key.
    static Behaviour from_keyed(Scenario scenario, const std::map<std::string, ProbabilityTable>& keyed) {
        std::vector<ProbabilityTable> tables;
        for (const auto& c : scenario.maximal_contexts()) {
            auto it = keyed.find(scenario.key(c));
            if (it == keyed.end()) throw Error("missing table for context '" + scenario.key(c) + "'");
            tables.push_back(it->second);
        }
        if (keyed.size() != tables.size()) throw Error("tables given for contexts that are not maximal");
        return Behaviour(std::move(scenario), std::move(tables));
    }

    const Scenario& scenario() const { return scenario_; }
    const std::vector<ProbabilityTable>& tables() const { return tables_; }
    const ProbabilityTable& table(std::size_t k) const { return tables_.at(k); }

    std::optional<std::size_t> maximal_index(const Context& c) const {
        const auto& ctx = scenario_.maximal_contexts();
        auto it = std::lower_bound(ctx.begin(), ctx.end(), c);
        if (it != ctx.end() && *it == c) return static_cast<std::size_t>(it - ctx.begin());
        return std::nullopt;
    }

    /// Concatenation of all maximal-context tables.
    std::vector<double> stacked() const {
        std::vector<double> out;
        for (const auto& t : tables_) out.insert(out.end(), t.begin(), t.end());
        return out;
    }

    /// Exact expressions for catalog entries (documentation only); empty otherwise.
    const std::vector<std::vector<std::string>>& annotations() const { return annotations_; }
    void set_annotations(std::vector<std::vector<std::string>> a) { annotations_ = std::move(a); }

private:
    Scenario scenario_;
    std::vector<ProbabilityTable> tables_;
    std::vector<std::vector<std::string>> annotations_;
};

namespace detail {

// Marginal of `table` (over context `c`) onto `subset`; subset members must be in c.
inline ProbabilityTable marginal_of(const Scenario& s, const Context& c, const ProbabilityTable& table,
                                    const Context& subset) {
    std::vector<std::size_t> pos;
    for (auto m : subset.members) {
        auto it = std::find(c.members.begin(), c.members.end(), m);
        if (it == c.members.end())
            throw Error("context '" + s.key(subset) + "' is not contained in '" + s.key(c) + "'");
        pos.push_back(static_cast<std::size_t>(it - c.members.begin()));
    }
    ProbabilityTable out(s.table_size(subset), 0.0);
    std::vector<int> sub(subset.members.size());
    for (std::size_t idx = 0; idx < table.size(); ++idx) {
        const auto full = s.joint_outcomes(c, idx);
        for (std::size_t k = 0; k < pos.size(); ++k) sub[k] = full[pos[k]];
        out[s.joint_index(subset, sub)] += table[idx];
    }
    return out;
}

} // namespace detail

/// Table of any context of the behaviour's scenario. Non-maximal contexts are
/// marginalized from the first maximal context containing them.
inline ProbabilityTable context_table(const Behaviour& b, const Context& c) {
    const auto& s = b.scenario();
    if (!s.is_context(c)) throw Error("not a context of the scenario");
    if (auto k = b.maximal_index(c)) return b.table(*k);
    const auto& ctx = s.maximal_contexts();
    for (std::size_t k = 0; k < ctx.size(); ++k)
        if (std::includes(ctx[k].members.begin(), ctx[k].members.end(), c.members.begin(), c.members.end()))
            return detail::marginal_of(s, ctx[k], b.table(k), c);
    throw Error("context '" + s.key(c) + "' is not contained in any maximal context");
}

/// Sum of the table of `c` over the outcomes of measurements outside `subset`.
inline ProbabilityTable marginalize(const Behaviour& b, const Context& c, const Context& subset) {
    const auto& s = b.scenario();
    if (!s.is_context(c)) throw Error("'" + s.key(c) + "' is not a context of the scenario");
    if (!std::includes(c.members.begin(), c.members.end(), subset.members.begin(), subset.members.end()) ||
        subset.members.empty())
        throw Error("subset is not contained in context '" + s.key(c) + "'");
    return detail::marginal_of(s, c, context_table(b, c), subset);
}

/// Probability of a single event.
inline double event_probability(const Behaviour& b, const Event& e) {
    const auto t = context_table(b, e.context);
    for (std::size_t k = 0; k < e.outcomes.size(); ++k)
        if (e.outcomes[k] < 0 || e.outcomes[k] >= b.scenario().outcomes(e.context.members[k]))
            throw Error("event outcome out of range");
    return t[b.scenario().joint_index(e.context, e.outcomes)];
}

struct NormalizationReport {
    bool pass = true;
    std::size_t worst_context = 0;  // index into maximal contexts
    double worst_sum = 1.0;
    double deviation = 0.0;  // |worst_sum - 1|
};

inline NormalizationReport check_normalization(const Behaviour& b, double tol = 1e-9) {
    NormalizationReport r;
    for (std::size_t k = 0; k < b.tables().size(); ++k) {
        const auto& t = b.table(k);
        const double sum = std::accumulate(t.begin(), t.end(), 0.0);
        if (std::abs(sum - 1.0) > r.deviation) {
            r.deviation = std::abs(sum - 1.0);
            r.worst_sum = sum;
            r.worst_context = k;
        }
    }
    r.pass = r.deviation <= tol;
    return r;
}

struct MarginalWitness {
    Context shared;            // intersection of the two maximal contexts
    std::vector<int> outcomes;  // joint outcome on `shared`
    std::size_t first = 0, second = 0;  // maximal context indices
    double mismatch = 0.0;
};

struct MarginalReport {
    bool pass = true;
    std::size_t pairs_checked = 0;
    double max_mismatch = 0.0;
    std::optional<MarginalWitness> witness;
};

/// Compares, for every pair of maximal contexts with a nonempty intersection,
/// the two marginals on that intersection. Agreement on intersections implies
/// agreement of every single-measurement marginal.
inline MarginalReport check_nondisturbance(const Behaviour& b, double tol = 1e-9) {
    MarginalReport r;
    const auto& s = b.scenario();
    const auto& ctx = s.maximal_contexts();
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        for (std::size_t j = i + 1; j < ctx.size(); ++j) {
            Context shared;
            std::set_intersection(ctx[i].members.begin(), ctx[i].members.end(), ctx[j].members.begin(),
                                  ctx[j].members.end(), std::back_inserter(shared.members));
            if (shared.members.empty()) continue;
            ++r.pairs_checked;
            const auto mi = detail::marginal_of(s, ctx[i], b.table(i), shared);
            const auto mj = detail::marginal_of(s, ctx[j], b.table(j), shared);
            for (std::size_t k = 0; k < mi.size(); ++k) {
                const double d = std::abs(mi[k] - mj[k]);
                if (d > r.max_mismatch) {
                    r.max_mismatch = d;
                    r.witness = MarginalWitness{shared, s.joint_outcomes(shared, k), i, j, d};
                }
            }
        }
    }
    r.pass = r.max_mismatch <= tol;
    if (r.pass) r.witness.reset();
    return r;
}

namespace detail {

inline std::string prefixed(int side, const std::string& id) { return std::to_string(side) + "." + id; }

} // namespace detail

/// Statistically independent composition. Measurement ids are prefixed with
/// "1." and "2."; every measurement of one side is compatible with every
/// measurement of the other.
inline Scenario tensor_scenarios(const Scenario& a, const Scenario& b) {
    std::vector<Measurement> ms;
    std::vector<std::pair<std::string, std::string>> comp;
    for (const auto& m : a.measurements()) ms.push_back({detail::prefixed(1, m.id), m.outcomes});
    for (const auto& m : b.measurements()) ms.push_back({detail::prefixed(2, m.id), m.outcomes});
    for (const auto& [x, y] : a.compatible_pairs()) comp.emplace_back(detail::prefixed(1, x), detail::prefixed(1, y));
    for (const auto& [x, y] : b.compatible_pairs()) comp.emplace_back(detail::prefixed(2, x), detail::prefixed(2, y));
    for (const auto& m : a.measurements())
        for (const auto& n : b.measurements()) comp.emplace_back(detail::prefixed(1, m.id), detail::prefixed(2, n.id));
    // Maximal contexts of the composition are unions of maximal contexts of the parts.
    std::vector<std::vector<std::string>> contexts;
    for (const auto& c1 : a.maximal_contexts())
        for (const auto& c2 : b.maximal_contexts()) {
            std::vector<std::string> ids;
            for (auto m : c1.members) ids.push_back(detail::prefixed(1, a.measurement(m).id));
            for (auto m : c2.members) ids.push_back(detail::prefixed(2, b.measurement(m).id));
            contexts.push_back(std::move(ids));
        }
    return Scenario(std::move(ms), comp, std::move(contexts));
}

inline Behaviour tensor_behaviours(const Behaviour& b1, const Behaviour& b2) {
    Scenario s = tensor_scenarios(b1.scenario(), b2.scenario());
    const std::size_t n1 = b1.scenario().size();
    std::vector<ProbabilityTable> tables;
    for (const auto& c : s.maximal_contexts()) {
        Context c1, c2;
        for (auto m : c.members) {
            if (m < n1)
                c1.members.push_back(m);
            else
                c2.members.push_back(m - n1);
        }
        const auto& t1 = b1.table(*b1.maximal_index(c1));
        const auto& t2 = b2.table(*b2.maximal_index(c2));
        ProbabilityTable t;
        t.reserve(t1.size() * t2.size());
        for (double p : t1)
            for (double q : t2) t.push_back(p * q);
        tables.push_back(std::move(t));
    }
    return Behaviour(std::move(s), std::move(tables));
}

} // namespace exwb
