#pragma once

// Exclusivity graphs: vertices are events, edges mark mutual exclusivity.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exwb/bitset.hpp"
#include "exwb/error.hpp"
#include "exwb/scenario.hpp"

namespace exwb {

/// Vertex label: a scenario event, or an opaque tag (block names, product coordinates).
struct VertexLabel {
    std::optional<Event> event;
    std::string tag;

    friend bool operator==(const VertexLabel&, const VertexLabel&) = default;
};

class ExclusivityGraph {
public:
    ExclusivityGraph() = default;
    explicit ExclusivityGraph(std::size_t n) : n_(n), adj_(n, detail::Bitset(n)) {}

    ExclusivityGraph(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges)
        : ExclusivityGraph(n) {
        for (auto [i, j] : edges) add_edge(i, j);
    }

    std::size_t size() const { return n_; }

    void add_edge(std::size_t i, std::size_t j) {
        if (i >= n_ || j >= n_) throw Error("edge endpoint out of range");
        if (i == j) throw Error("self-loops are not allowed in an exclusivity graph");
        adj_[i].set(j);
        adj_[j].set(i);
    }
    void remove_edge(std::size_t i, std::size_t j) {
        adj_.at(i).reset(j);
        adj_.at(j).reset(i);
    }
    bool adjacent(std::size_t i, std::size_t j) const { return adj_[i].test(j); }
    const detail::Bitset& neighbours(std::size_t i) const { return adj_[i]; }
    std::size_t degree(std::size_t i) const { return adj_[i].count(); }

    std::size_t edge_count() const {
        std::size_t c = 0;
        for (const auto& row : adj_) c += row.count();
        return c / 2;
    }

    /// Edges (i < j) in lexicographic order.
    std::vector<std::pair<std::size_t, std::size_t>> edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = adj_[i].next(i + 1); j < n_; j = adj_[i].next(j + 1)) out.emplace_back(i, j);
        return out;
    }

    bool has_labels() const { return !labels_.empty(); }
    const std::vector<VertexLabel>& labels() const { return labels_; }
    void set_labels(std::vector<VertexLabel> labels) {
        if (!labels.empty() && labels.size() != n_) throw Error("labels must cover every vertex");
        labels_ = std::move(labels);
    }

    /// Only present for graphs derived from a scenario; needed to interpret event labels.
    const std::optional<Scenario>& scenario() const { return scenario_; }
    void set_scenario(Scenario s) { scenario_ = std::move(s); }

    friend bool operator==(const ExclusivityGraph& a, const ExclusivityGraph& b) {
        return a.n_ == b.n_ && a.adj_ == b.adj_;
    }

private:
    std::size_t n_ = 0;
    std::vector<detail::Bitset> adj_;
    std::vector<VertexLabel> labels_;
    std::optional<Scenario> scenario_;
};

using VertexWeights = std::vector<double>;

inline void validate_weights(const ExclusivityGraph& g, const VertexWeights& w) {
    if (w.size() != g.size())
        throw Error("weights have " + std::to_string(w.size()) + " entries for a graph with " +
                    std::to_string(g.size()) + " vertices");
    for (double x : w)
        if (!(x >= 0.0 && x <= 1.0)) throw Error("vertex weights must lie in [0,1]");
}

// ---- named graphs --------------------------------------------------------

inline ExclusivityGraph cycle_graph(std::size_t n) {
    if (n < 3) throw Error("cycle needs at least 3 vertices");
    ExclusivityGraph g(n);
    for (std::size_t i = 0; i < n; ++i) g.add_edge(i, (i + 1) % n);
    return g;
}

inline ExclusivityGraph complete_graph(std::size_t n) {
    ExclusivityGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
}

inline ExclusivityGraph edgeless_graph(std::size_t n) { return ExclusivityGraph(n); }

inline ExclusivityGraph path_graph(std::size_t n) {
    ExclusivityGraph g(n);
    for (std::size_t i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
    return g;
}

// ---- construction from scenarios -----------------------------------------

/// Events of every maximal context (or every context) as vertices; two events
/// are exclusive iff some measurement present in both gets different outcomes.
inline ExclusivityGraph exclusivity_graph(const Scenario& s, bool include_subcontexts = false) {
    std::vector<Event> events;
    for (const auto& c : enumerate_contexts(s, !include_subcontexts))
        for (std::size_t idx = 0; idx < s.table_size(c); ++idx) events.push_back(Event{c, s.joint_outcomes(c, idx)});

    ExclusivityGraph g(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            const auto& a = events[i];
            const auto& b = events[j];
            bool exclusive = false;
            for (std::size_t k = 0; k < a.context.members.size() && !exclusive; ++k)
                for (std::size_t l = 0; l < b.context.members.size(); ++l)
                    if (a.context.members[k] == b.context.members[l] && a.outcomes[k] != b.outcomes[l]) {
                        exclusive = true;
                        break;
                    }
            if (exclusive) g.add_edge(i, j);
        }
    }
    std::vector<VertexLabel> labels;
    for (auto& e : events) {
        std::string tag = s.event_string(e);
        labels.push_back(VertexLabel{std::move(e), std::move(tag)});
    }
    g.set_labels(std::move(labels));
    g.set_scenario(s);
    return g;
}

/// Probability of each vertex's event under `b`.
inline VertexWeights behaviour_to_weights(const Behaviour& b, const ExclusivityGraph& g) {
    if (!g.has_labels()) throw Error("graph has no event labels");
    if (g.scenario() && !(*g.scenario() == b.scenario()))
        throw Error("graph was built from a different scenario than the behaviour");
    VertexWeights w;
    w.reserve(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) {
        const auto& lab = g.labels()[v];
        if (!lab.event) throw Error("vertex " + std::to_string(v) + " carries no event label");
        if (!b.scenario().is_context(lab.event->context))
            throw Error("vertex " + std::to_string(v) + " label is not an event of the behaviour's scenario");
        w.push_back(std::min(1.0, event_probability(b, *lab.event)));
    }
    return w;
}

// ---- graph algebra -------------------------------------------------------

inline ExclusivityGraph complement(const ExclusivityGraph& g) {
    ExclusivityGraph h(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            if (!g.adjacent(i, j)) h.add_edge(i, j);
    if (g.has_labels()) h.set_labels(g.labels());
    if (g.scenario()) h.set_scenario(*g.scenario());
    return h;
}

inline constexpr std::size_t default_vertex_cap = 100000;

/// Disjunctive (OR) product. Vertex (i, i') has index i * |V(h)| + i'.
inline ExclusivityGraph or_product(const ExclusivityGraph& g, const ExclusivityGraph& h,
                                   std::size_t cap = default_vertex_cap) {
    const std::size_t n = g.size(), m = h.size();
    if (n != 0 && m > cap / n) throw CapExceeded("OR product exceeds the vertex cap", n * m);
    ExclusivityGraph p(n * m);
    for (std::size_t a = 0; a < n * m; ++a) {
        const std::size_t i = a / m, ip = a % m;
        for (std::size_t b = a + 1; b < n * m; ++b) {
            const std::size_t j = b / m, jp = b % m;
            if ((i != j && g.adjacent(i, j)) || (ip != jp && h.adjacent(ip, jp))) p.add_edge(a, b);
        }
    }
    if (g.has_labels() || h.has_labels()) {
        std::vector<VertexLabel> labels;
        auto tag = [](const ExclusivityGraph& x, std::size_t v) {
            return x.has_labels() && !x.labels()[v].tag.empty() ? x.labels()[v].tag : std::to_string(v);
        };
        for (std::size_t a = 0; a < n * m; ++a)
            labels.push_back(VertexLabel{std::nullopt, "(" + tag(g, a / m) + "," + tag(h, a % m) + ")"});
        p.set_labels(std::move(labels));
    }
    return p;
}

inline std::size_t checked_power(std::size_t base, int n, std::size_t cap) {
    std::size_t v = 1;
    for (int k = 0; k < n; ++k) {
        if (base != 0 && v > cap / base) {
            // Report the exact size when it fits in size_t.
            std::size_t need = 1;
            for (int j = 0; j < n; ++j) need *= base;
            throw CapExceeded("OR power exceeds the vertex cap", need);
        }
        v *= base;
    }
    return v;
}

/// n-fold OR power, row-major lexicographic vertex order.
inline ExclusivityGraph or_power(const ExclusivityGraph& g, int n, std::size_t cap = default_vertex_cap) {
    if (n < 1) throw Error("OR power needs n >= 1");
    checked_power(g.size(), n, cap);
    ExclusivityGraph p = g;
    for (int k = 1; k < n; ++k) p = or_product(p, g, cap);
    return p;
}

/// w^{(x)n} aligned with or_power vertex order.
inline VertexWeights tensor_power(const VertexWeights& w, int n) {
    VertexWeights out = {1.0};
    for (int k = 0; k < n; ++k) {
        VertexWeights next;
        next.reserve(out.size() * w.size());
        for (double a : out)
            for (double b : w) next.push_back(a * b);
        out = std::move(next);
    }
    return out;
}

/// Induced subgraph on `keep` (in the given order).
inline ExclusivityGraph induced_subgraph(const ExclusivityGraph& g, const std::vector<std::size_t>& keep) {
    ExclusivityGraph h(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a)
        for (std::size_t b = a + 1; b < keep.size(); ++b)
            if (g.adjacent(keep[a], keep[b])) h.add_edge(a, b);
    return h;
}

/// Four blocks G, complement(G), complement(G), G with every vertex of a block
/// joined to every vertex of the next block. Vertex k of block b (1-based) has
/// index (b-1)*n + k.
inline ExclusivityGraph h_embedding(const ExclusivityGraph& g) {
    const std::size_t n = g.size();
    if (n == 0) throw Error("h_embedding needs at least one vertex");
    const ExclusivityGraph gc = complement(g);
    const ExclusivityGraph* blocks[4] = {&g, &gc, &gc, &g};
    ExclusivityGraph h(4 * n);
    for (std::size_t b = 0; b < 4; ++b) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (blocks[b]->adjacent(i, j)) h.add_edge(b * n + i, b * n + j);
        if (b + 1 < 4)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) h.add_edge(b * n + i, (b + 1) * n + j);
    }
    std::vector<VertexLabel> labels;
    static const char* names[4] = {"E", "X", "Y", "Z"};
    for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t k = 0; k < n; ++k)
            labels.push_back(VertexLabel{std::nullopt, std::string("B") + std::to_string(b + 1) + ":" + names[b] +
                                                           std::to_string(k)});
    h.set_labels(std::move(labels));
    return h;
}

/// Block permutation (2,4,1,3) with identity inside blocks: vertex k of block
/// b of complement(h_embedding(g)) maps to vertex k of block perm[b] of
/// h_embedding(g). Returned as a map from h_embedding(g) to its complement.
inline std::vector<std::size_t> h_embedding_self_complement_map(std::size_t n) {
    static const std::size_t perm[4] = {2, 4, 1, 3};
    std::vector<std::size_t> to_complement(4 * n);
    for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t k = 0; k < n; ++k) to_complement[(perm[b] - 1) * n + k] = b * n + k;
    return to_complement;
}

/// Weights realised by the coin construction: block E gets a0*p, block X gets
/// a1*b0*x, block Y gets b1*c0*y, block Z gets c1*z.
struct CoinWeights {
    double a0 = 0.5, a1 = 0.5, b0 = 0.5, b1 = 0.5, c0 = 0.5, c1 = 0.5;
};

inline VertexWeights h_embedding_weights(const VertexWeights& p, const VertexWeights& x, const VertexWeights& y,
                                         const VertexWeights& z, const CoinWeights& coins) {
    const std::size_t n = p.size();
    if (x.size() != n || y.size() != n || z.size() != n) throw Error("block weight vectors must have equal length");
    if (coins.a0 + coins.a1 > 1.0 + 1e-12 || coins.b0 + coins.b1 > 1.0 + 1e-12 || coins.c0 + coins.c1 > 1.0 + 1e-12)
        throw Error("coin probabilities must sum to at most 1");
    VertexWeights w;
    for (double v : p) w.push_back(coins.a0 * v);
    for (double v : x) w.push_back(coins.a1 * coins.b0 * v);
    for (double v : y) w.push_back(coins.b1 * coins.c0 * v);
    for (double v : z) w.push_back(coins.c1 * v);
    return w;
}

/// Graphviz rendering.
inline std::string to_dot(const ExclusivityGraph& g, const std::string& name = "G") {
    std::string out = "graph " + name + " {\n";
    for (std::size_t v = 0; v < g.size(); ++v) {
        out += "  " + std::to_string(v);
        if (g.has_labels() && !g.labels()[v].tag.empty()) {
            std::string tag;
            for (char c : g.labels()[v].tag) {
                if (c == '"' || c == '\\') tag += '\\';
                tag += c;
            }
            out += " [label=\"" + tag + "\"]";
        }
        out += ";\n";
    }
    for (auto [i, j] : g.edges()) out += "  " + std::to_string(i) + " -- " + std::to_string(j) + ";\n";
    return out + "}\n";
}

} // namespace exwb
