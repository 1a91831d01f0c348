#pragma once

// Exact maximum-weight clique by branch and bound with a weighted colouring
// bound, plus clique / independent-set enumeration.

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <vector>

#include "exwb/bitset.hpp"
#include "exwb/graph.hpp"

namespace exwb {

struct CliqueWitness {
    std::vector<std::size_t> vertices;  // sorted
    double weight_sum = 0.0;
};

namespace detail {

// Upper bound on the weight of any clique inside `cand`: greedily split `cand`
// into independent sets and sum each class's maximum weight. Vertices are
// expected in non-increasing weight order, so each class's maximum is its
// first member and light vertices end up in cheap classes.
class ColourBound {
public:
    ColourBound(const std::vector<Bitset>& adj, const std::vector<double>& w) : adj_(adj), w_(w) {}

    // Fills `order` with vertices of cand (colouring order) and `bound[k]` with
    // the bound on cliques using only order[0..k].
    void colour(const Bitset& cand, std::vector<std::size_t>& order, std::vector<double>& bound) const {
        order.clear();
        bound.clear();
        Bitset rest = cand;
        double acc = 0.0;
        while (rest.any()) {
            Bitset avail = rest;
            double cls_max = 0.0;
            for (std::size_t v = avail.first(); v < avail.size(); v = avail.next(v + 1)) {
                order.push_back(v);
                cls_max = std::max(cls_max, w_[v]);
                avail.subtract(adj_[v]);
                rest.reset(v);
            }
            acc += cls_max;
            bound.resize(order.size(), acc);
        }
    }

    double total(const Bitset& cand) const {
        Bitset rest = cand;
        double acc = 0.0;
        while (rest.any()) {
            Bitset avail = rest;
            double cls_max = 0.0;
            for (std::size_t v = avail.first(); v < avail.size(); v = avail.next(v + 1)) {
                cls_max = std::max(cls_max, w_[v]);
                avail.subtract(adj_[v]);
                rest.reset(v);
            }
            acc += cls_max;
        }
        return acc;
    }

private:
    const std::vector<Bitset>& adj_;
    const std::vector<double>& w_;
};

// Optional problem-specific upper bound on the weight of cliques inside a
// candidate set, consulted at every search node. `bind` receives the map from
// search ranks to caller labels before the search starts.
class ExtraBound {
public:
    virtual ~ExtraBound() = default;
    virtual void bind(const std::vector<std::size_t>& rank_to_label) = 0;
    virtual double operator()(const Bitset& cand) = 0;
};

// Branch and bound over a relabelled copy of the graph in which vertex rank 0
// is the heaviest. Results are reported in the caller's labels.
class WeightedCliqueSearch {
public:
    WeightedCliqueSearch(const std::vector<Bitset>& adj, const std::vector<double>& w, ExtraBound* extra = nullptr)
        : n_(w.size()), extra_(extra) {
        to_orig_.resize(n_);
        std::iota(to_orig_.begin(), to_orig_.end(), 0);
        std::stable_sort(to_orig_.begin(), to_orig_.end(), [&](std::size_t a, std::size_t b) {
            if (w[a] != w[b]) return w[a] > w[b];
            return adj[a].count() > adj[b].count();
        });
        to_rank_.resize(n_);
        for (std::size_t r = 0; r < n_; ++r) to_rank_[to_orig_[r]] = r;
        adj_.assign(n_, Bitset(n_));
        w_.resize(n_);
        for (std::size_t r = 0; r < n_; ++r) {
            w_[r] = w[to_orig_[r]];
            adj[to_orig_[r]].for_each([&](std::size_t u) { adj_[r].set(to_rank_[u]); });
        }
        bound_ = std::make_unique<ColourBound>(adj_, w_);
        if (extra_) extra_->bind(to_orig_);
    }

    /// Exact optimum, starting from a known lower bound.
    double optimum(double known = 0.0) {
        best_ = known;
        threshold_mode_ = false;
        expand(all(), 0.0);
        return best_;
    }

    /// Some clique (deterministic) of weight > threshold, or empty.
    std::vector<std::size_t> exceeding(double threshold) {
        best_ = threshold;
        threshold_mode_ = true;
        found_.clear();
        cur_.clear();
        expand(all(), 0.0);
        std::vector<std::size_t> out;
        for (auto r : found_) out.push_back(to_orig_[r]);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Lexicographically first clique (sorted caller labels) whose weight
    /// reaches `target - eps`.
    std::vector<std::size_t> lex_first(double target, double eps) {
        target_ = target - eps;
        found_.clear();
        cur_.clear();
        lex(all(), 0.0, 0);
        std::vector<std::size_t> out = found_;
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    Bitset all() const {
        Bitset b(n_);
        b.set_all();
        return b;
    }

    // Returns true to abort (threshold mode, clique found).
    bool expand(Bitset cand, double weight) {
        if (extra_ && weight + (*extra_)(cand) <= best_) return false;
        std::vector<std::size_t> order;
        std::vector<double> bound;
        bound_->colour(cand, order, bound);
        for (std::size_t k = order.size(); k-- > 0;) {
            if (weight + bound[k] <= best_) return false;
            const std::size_t v = order[k];
            const double wv = weight + w_[v];
            cur_.push_back(v);
            Bitset next = cand & adj_[v];
            if (!next.any()) {
                if (wv > best_) {
                    if (threshold_mode_) {
                        found_ = cur_;
                        return true;
                    }
                    best_ = wv;
                }
            } else if (expand(std::move(next), wv)) {
                return true;
            }
            cur_.pop_back();
            cand.reset(v);
        }
        return false;
    }

    // Depth-first in increasing caller label; `cand` is in rank space.
    bool lex(const Bitset& cand, double weight, std::size_t from) {
        if (!cur_.empty() && weight >= target_) {
            found_ = cur_;
            return true;
        }
        Bitset rest = cand;
        for (std::size_t v = from; v < n_; ++v) {
            const std::size_t r = to_rank_[v];
            if (!rest.test(r)) continue;
            if (weight + bound_->total(rest) < target_) return false;
            cur_.push_back(v);
            if (lex(rest & adj_[r], weight + w_[r], v + 1)) return true;
            cur_.pop_back();
            rest.reset(r);
        }
        return false;
    }

    std::size_t n_;
    std::vector<std::size_t> to_orig_, to_rank_;
    std::vector<Bitset> adj_;
    std::vector<double> w_;
    std::unique_ptr<ColourBound> bound_;
    ExtraBound* extra_ = nullptr;
    double best_ = 0.0;
    double target_ = 0.0;
    bool threshold_mode_ = false;
    std::vector<std::size_t> cur_, found_;
};

} // namespace detail

/// Exact maximum-weight clique. Zero-weight vertices are dropped first. Among
/// optimal cliques the lexicographically smallest sorted vertex list is returned.
inline CliqueWitness max_weight_clique(const ExclusivityGraph& g, const VertexWeights& w) {
    validate_weights(g, w);
    std::vector<std::size_t> keep;
    for (std::size_t v = 0; v < g.size(); ++v)
        if (w[v] > 0.0) keep.push_back(v);
    if (keep.empty()) return {};

    std::vector<detail::Bitset> adj(keep.size(), detail::Bitset(keep.size()));
    std::vector<double> wk(keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        wk[a] = w[keep[a]];
        for (std::size_t b = 0; b < keep.size(); ++b)
            if (a != b && g.adjacent(keep[a], keep[b])) adj[a].set(b);
    }
    detail::WeightedCliqueSearch search(adj, wk);
    const double opt = search.optimum();
    const auto local = search.lex_first(opt, 1e-12 * std::max(1.0, opt));

    CliqueWitness out;
    for (auto a : local) {
        out.vertices.push_back(keep[a]);
        out.weight_sum += wk[a];
    }
    return out;
}

inline std::size_t clique_number(const ExclusivityGraph& g) {
    if (g.size() == 0) return 0;
    return max_weight_clique(g, VertexWeights(g.size(), 1.0)).vertices.size();
}

inline std::size_t independence_number(const ExclusivityGraph& g) { return clique_number(complement(g)); }

inline bool is_clique(const ExclusivityGraph& g, const std::vector<std::size_t>& vs) {
    for (std::size_t a = 0; a < vs.size(); ++a) {
        if (vs[a] >= g.size()) return false;
        for (std::size_t b = a + 1; b < vs.size(); ++b)
            if (vs[a] == vs[b] || !g.adjacent(vs[a], vs[b])) return false;
    }
    return true;
}

inline bool is_independent(const ExclusivityGraph& g, const std::vector<std::size_t>& vs) {
    for (std::size_t a = 0; a < vs.size(); ++a) {
        if (vs[a] >= g.size()) return false;
        for (std::size_t b = a + 1; b < vs.size(); ++b)
            if (vs[a] == vs[b] || g.adjacent(vs[a], vs[b])) return false;
    }
    return true;
}

/// Maximal cliques (Bron-Kerbosch with pivoting), each sorted, list sorted.
inline std::vector<std::vector<std::size_t>> maximal_cliques(const ExclusivityGraph& g) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> r;
    auto rec = [&](auto&& self, detail::Bitset p, detail::Bitset x) -> void {
        if (!p.any() && !x.any()) {
            out.push_back(r);
            return;
        }
        detail::Bitset px = p;
        px |= x;
        std::size_t pivot = px.first(), best = 0;
        px.for_each([&](std::size_t u) {
            const std::size_t c = (p & g.neighbours(u)).count();
            if (c > best) best = c, pivot = u;
        });
        detail::Bitset cand = p;
        cand.subtract(g.neighbours(pivot));
        cand.for_each([&](std::size_t v) {
            r.push_back(v);
            self(self, p & g.neighbours(v), x & g.neighbours(v));
            r.pop_back();
            p.reset(v);
            x.set(v);
        });
    };
    detail::Bitset all(g.size()), none(g.size());
    all.set_all();
    if (g.size() > 0) rec(rec, all, none);
    for (auto& c : out) std::sort(c.begin(), c.end());
    std::sort(out.begin(), out.end());
    return out;
}

inline constexpr std::size_t independent_set_vertex_cap = 32;

/// Every independent set including the empty one, in lexicographic order.
inline std::vector<std::vector<std::size_t>> enumerate_independent_sets(
    const ExclusivityGraph& g, std::size_t cap = independent_set_vertex_cap) {
    if (g.size() > cap)
        throw CapExceeded("independent-set enumeration is limited to " + std::to_string(cap) + " vertices", g.size());
    std::vector<std::vector<std::size_t>> out = {{}};
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, detail::Bitset allowed, std::size_t from) -> void {
        for (std::size_t v = allowed.next(from); v < allowed.size(); v = allowed.next(v + 1)) {
            cur.push_back(v);
            out.push_back(cur);
            detail::Bitset next = allowed;
            next.subtract(g.neighbours(v));
            self(self, next, v + 1);
            cur.pop_back();
        }
    };
    detail::Bitset all(g.size());
    all.set_all();
    rec(rec, all, 0);
    return out;
}

} // namespace exwb
