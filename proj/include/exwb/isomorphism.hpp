#pragma once

// Graph isomorphism by colour refinement plus individualization backtracking.
// Intended for the small graphs of this library (at most 64 vertices); the
// first witness found in the deterministic search order is returned.

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "exwb/graph.hpp"

namespace exwb {

inline constexpr std::size_t isomorphism_vertex_cap = 64;

namespace detail {

using Colouring = std::vector<int>;

// Joint 1-WL refinement of two colourings. Returns false when the colour
// histograms of the two graphs diverge.
inline bool refine_jointly(const ExclusivityGraph& g, const ExclusivityGraph& h, Colouring& cg, Colouring& ch) {
    const std::size_t n = g.size();
    std::size_t classes = 0;
    while (true) {
        using Signature = std::pair<int, std::vector<int>>;
        std::vector<Signature> sg(n), sh(n);
        auto signature = [](const ExclusivityGraph& x, const Colouring& c, std::size_t v) {
            std::vector<int> nb;
            x.neighbours(v).for_each([&](std::size_t u) { nb.push_back(c[u]); });
            std::sort(nb.begin(), nb.end());
            return Signature{c[v], std::move(nb)};
        };
        for (std::size_t v = 0; v < n; ++v) {
            sg[v] = signature(g, cg, v);
            sh[v] = signature(h, ch, v);
        }
        std::map<Signature, int> ids;
        for (const auto& s : sg) ids.emplace(s, 0);
        for (const auto& s : sh) ids.emplace(s, 0);
        int next = 0;
        for (auto& [sig, id] : ids) id = next++;
        std::vector<int> hist(ids.size(), 0);
        for (std::size_t v = 0; v < n; ++v) {
            cg[v] = ids[sg[v]];
            ch[v] = ids[sh[v]];
            ++hist[static_cast<std::size_t>(cg[v])];
            --hist[static_cast<std::size_t>(ch[v])];
        }
        for (int d : hist)
            if (d != 0) return false;
        if (ids.size() == classes) return true;
        classes = ids.size();
    }
}

inline std::optional<std::vector<std::size_t>> iso_search(const ExclusivityGraph& g, const ExclusivityGraph& h,
                                                           Colouring cg, Colouring ch) {
    if (!refine_jointly(g, h, cg, ch)) return std::nullopt;
    const std::size_t n = g.size();
    std::map<int, std::vector<std::size_t>> cls;
    for (std::size_t v = 0; v < n; ++v) cls[cg[v]].push_back(v);
    int target = -1;
    std::size_t best = n + 1;
    for (const auto& [c, members] : cls)
        if (members.size() > 1 && members.size() < best) best = members.size(), target = c;

    if (target < 0) {
        std::vector<std::size_t> map(n);
        std::map<int, std::size_t> where;
        for (std::size_t u = 0; u < n; ++u) where[ch[u]] = u;
        for (std::size_t v = 0; v < n; ++v) map[v] = where[cg[v]];
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (g.adjacent(i, j) != h.adjacent(map[i], map[j])) return std::nullopt;
        return map;
    }

    const std::size_t v = cls[target].front();
    const int fresh = static_cast<int>(cls.size()) + 1;
    for (std::size_t u = 0; u < n; ++u) {
        if (ch[u] != target) continue;
        Colouring cg2 = cg, ch2 = ch;
        cg2[v] = fresh;
        ch2[u] = fresh;
        if (auto m = iso_search(g, h, std::move(cg2), std::move(ch2))) return m;
    }
    return std::nullopt;
}

inline void check_iso_cap(const ExclusivityGraph& g) {
    if (g.size() > isomorphism_vertex_cap)
        throw CapExceeded("isomorphism search is limited to " + std::to_string(isomorphism_vertex_cap) + " vertices",
                          g.size());
}

} // namespace detail

/// Edge-preserving bijection map: V(g) -> V(h), or nullopt. When `fixed` is
/// given, the search is restricted to maps sending fixed->first to fixed->second.
inline std::optional<std::vector<std::size_t>> find_isomorphism(
    const ExclusivityGraph& g, const ExclusivityGraph& h,
    std::optional<std::pair<std::size_t, std::size_t>> fixed = std::nullopt) {
    detail::check_iso_cap(g);
    detail::check_iso_cap(h);
    if (g.size() != h.size() || g.edge_count() != h.edge_count()) return std::nullopt;
    detail::Colouring cg(g.size(), 0), ch(h.size(), 0);
    if (fixed) {
        if (fixed->first >= g.size() || fixed->second >= h.size()) throw Error("fixed vertex out of range");
        cg[fixed->first] = 1;
        ch[fixed->second] = 1;
    }
    return detail::iso_search(g, h, std::move(cg), std::move(ch));
}

inline bool is_isomorphism(const ExclusivityGraph& g, const ExclusivityGraph& h, const std::vector<std::size_t>& map) {
    if (g.size() != h.size() || map.size() != g.size()) return false;
    std::vector<bool> seen(h.size(), false);
    for (auto u : map) {
        if (u >= h.size() || seen[u]) return false;
        seen[u] = true;
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            if (g.adjacent(i, j) != h.adjacent(map[i], map[j])) return false;
    return true;
}

struct SelfComplementarity {
    bool self_complementary = false;
    std::vector<std::size_t> witness;  // g -> complement(g)
};

inline SelfComplementarity is_self_complementary(const ExclusivityGraph& g) {
    detail::check_iso_cap(g);
    const std::size_t n = g.size();
    // Half of all pairs must be edges.
    if (n * (n - 1) / 2 != 2 * g.edge_count() && n > 1) return {};
    auto m = find_isomorphism(g, complement(g));
    if (!m) return {};
    return {true, std::move(*m)};
}

/// True iff the automorphism group acts transitively on the vertices.
inline bool is_vertex_transitive(const ExclusivityGraph& g) {
    detail::check_iso_cap(g);
    for (std::size_t v = 1; v < g.size(); ++v)
        if (!find_isomorphism(g, g, std::make_pair(std::size_t{0}, v))) return false;
    return true;
}

} // namespace exwb
