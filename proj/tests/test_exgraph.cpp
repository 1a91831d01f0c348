#include <gtest/gtest.h>

#include <random>

#include "exwb/catalog.hpp"
#include "exwb/clique.hpp"
#include "exwb/graph.hpp"
#include "exwb/isomorphism.hpp"

using namespace exwb;

namespace {

ExclusivityGraph random_graph(std::mt19937& rng, std::size_t n, double p) {
    std::bernoulli_distribution coin(p);
    ExclusivityGraph g(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (coin(rng)) g.add_edge(i, j);
    return g;
}

// Brute-force clique number by subset enumeration.
std::size_t brute_clique_number(const ExclusivityGraph& g) {
    std::size_t best = 0;
    const std::size_t n = g.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> vs;
        for (std::size_t v = 0; v < n; ++v)
            if (mask >> v & 1) vs.push_back(v);
        if (vs.size() > best && is_clique(g, vs)) best = vs.size();
    }
    return best;
}

} // namespace

TEST(ExclusivityGraph, ChshMatchesSharedMeasurementRule) {
    const auto s = chsh_scenario();
    const auto g = exclusivity_graph(s);
    ASSERT_EQ(g.size(), 16u);
    EXPECT_EQ(g.edge_count(), 56u);
    for (std::size_t v = 0; v < 16; ++v) EXPECT_EQ(g.degree(v), 7u);

    // Oracle: settings (x,y) and outcomes (a,b) decoded from the vertex label's
    // measurement ids; exclusive iff (x=x' and a!=a') or (y=y' and b!=b').
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            if (i == j) continue;
            const auto& ei = *g.labels()[i].event;
            const auto& ej = *g.labels()[j].event;
            const auto xi = s.measurement(ei.context.members[0]).id, yi = s.measurement(ei.context.members[1]).id;
            const auto xj = s.measurement(ej.context.members[0]).id, yj = s.measurement(ej.context.members[1]).id;
            const bool rule = (xi == xj && ei.outcomes[0] != ej.outcomes[0]) || (yi == yj && ei.outcomes[1] != ej.outcomes[1]);
            EXPECT_EQ(g.adjacent(i, j), rule) << i << "," << j;
        }
}

TEST(ExclusivityGraph, SingleBinaryMeasurementIsK2) {
    const Scenario s({{"m", 2}}, {});
    EXPECT_EQ(exclusivity_graph(s), complete_graph(2));
}

TEST(ExclusivityGraph, SpeckerTriangle) {
    const auto s = specker_scenario();
    const auto g = exclusivity_graph(s);
    EXPECT_EQ(g.size(), 12u);
    auto find = [&](const std::string& key, std::vector<int> outs) {
        const Event e{s.context_from_key(key), std::move(outs)};
        for (std::size_t v = 0; v < g.size(); ++v)
            if (*g.labels()[v].event == e) return v;
        ADD_FAILURE() << "event not found";
        return std::size_t{0};
    };
    // (01|12), (01|23), (01|31): in canonical order (x3,x1) -> (x1,x3) = (1,0)
    const auto a = find("x1,x2", {0, 1}), b = find("x2,x3", {0, 1}), c = find("x1,x3", {1, 0});
    EXPECT_TRUE(g.adjacent(a, b));
    EXPECT_TRUE(g.adjacent(b, c));
    EXPECT_TRUE(g.adjacent(a, c));
}

TEST(ExclusivityGraph, SubcontextOption) {
    const auto s = chsh_scenario();
    const auto g = exclusivity_graph(s, true);
    EXPECT_EQ(g.size(), 16u + 8u);
}

TEST(Weights, FromBehaviours) {
    const auto sp = catalog_get("specker_triangle");
    const auto g = exclusivity_graph(sp.scenario());
    const auto w = behaviour_to_weights(sp, g);
    for (std::size_t v = 0; v < g.size(); ++v) {
        const auto& o = g.labels()[v].event->outcomes;
        EXPECT_EQ(w[v], o[0] != o[1] ? 0.5 : 0.0);
    }

    const auto det = catalog_get("deterministic_chsh");
    const auto gc = exclusivity_graph(det.scenario());
    const auto wd = behaviour_to_weights(det, gc);
    EXPECT_EQ(std::count(wd.begin(), wd.end(), 1.0), 4);
    EXPECT_EQ(std::count(wd.begin(), wd.end(), 0.0), 12);

    const auto wp = behaviour_to_weights(catalog_get("pr_box"), gc);
    EXPECT_EQ(std::count(wp.begin(), wp.end(), 0.5), 8);
    EXPECT_EQ(std::count(wp.begin(), wp.end(), 0.0), 8);

    EXPECT_THROW(behaviour_to_weights(sp, gc), Error);
    EXPECT_THROW(behaviour_to_weights(sp, cycle_graph(5)), Error);
}

TEST(Complement, Examples) {
    const auto c5 = cycle_graph(5);
    EXPECT_TRUE(find_isomorphism(c5, complement(c5)).has_value());
    EXPECT_EQ(complement(complete_graph(2)), edgeless_graph(2));
    EXPECT_EQ(complement(cycle_graph(7)).edge_count(), 14u);
}

TEST(Complement, IsInvolution) {
    std::mt19937 rng(1);
    for (int t = 0; t < 30; ++t) {
        const auto g = random_graph(rng, 1 + rng() % 12, 0.4);
        EXPECT_EQ(complement(complement(g)), g);
    }
}

TEST(OrProduct, Examples) {
    const auto k2 = complete_graph(2);
    EXPECT_EQ(or_product(k2, k2), complete_graph(4));
    EXPECT_EQ(or_product(edgeless_graph(2), edgeless_graph(3)), edgeless_graph(6));
    const auto p = or_power(cycle_graph(5), 2);
    EXPECT_EQ(p.size(), 25u);
    EXPECT_EQ(brute_clique_number(p), 5u);
    EXPECT_EQ(clique_number(p), 5u);
}

TEST(OrProduct, MatchesDefinition) {
    std::mt19937 rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_graph(rng, 1 + rng() % 5, 0.5);
        const auto h = random_graph(rng, 1 + rng() % 5, 0.5);
        const auto p = or_product(g, h);
        const std::size_t m = h.size();
        for (std::size_t a = 0; a < p.size(); ++a)
            for (std::size_t b = 0; b < p.size(); ++b) {
                if (a == b) continue;
                const bool e = g.adjacent(a / m, b / m) || h.adjacent(a % m, b % m);
                EXPECT_EQ(p.adjacent(a, b), e);
            }
    }
}

TEST(OrProduct, PowerOneAndAssociativity) {
    std::mt19937 rng(3);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_graph(rng, 2 + rng() % 3, 0.5);
        const auto h = random_graph(rng, 2 + rng() % 3, 0.5);
        const auto k = random_graph(rng, 2 + rng() % 3, 0.5);
        EXPECT_EQ(or_power(g, 1), g);
        // With row-major indices the canonical bijection is the identity.
        EXPECT_EQ(or_product(or_product(g, h), k), or_product(g, or_product(h, k)));
    }
}

TEST(OrProduct, CapExceeded) {
    try {
        or_power(cycle_graph(7), 3, 100);
        FAIL();
    } catch (const CapExceeded& e) {
        EXPECT_EQ(e.required(), 343u);
    }
    EXPECT_THROW(or_power(cycle_graph(5), 0), Error);
}

TEST(OrProduct, TensorPowerAlignment) {
    const VertexWeights w = {0.1, 0.2, 0.3};
    const auto t = tensor_power(w, 2);
    ASSERT_EQ(t.size(), 9u);
    for (std::size_t a = 0; a < 9; ++a) EXPECT_DOUBLE_EQ(t[a], w[a / 3] * w[a % 3]);
}

TEST(Isomorphism, Examples) {
    const auto c5 = cycle_graph(5);
    const auto m = find_isomorphism(c5, complement(c5));
    ASSERT_TRUE(m);
    EXPECT_TRUE(is_isomorphism(c5, complement(c5), *m));
    EXPECT_FALSE(find_isomorphism(complete_graph(3), path_graph(3)));
    const auto id = find_isomorphism(c5, c5);
    ASSERT_TRUE(id);
    EXPECT_EQ(*id, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_THROW(find_isomorphism(cycle_graph(65), cycle_graph(65)), CapExceeded);
}

TEST(Isomorphism, RandomRelabellings) {
    std::mt19937 rng(4);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 1 + rng() % 14;
        const auto g = random_graph(rng, n, 0.45);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        ExclusivityGraph h(n);
        for (auto [i, j] : g.edges()) h.add_edge(perm[i], perm[j]);
        const auto m = find_isomorphism(g, h);
        ASSERT_TRUE(m);
        EXPECT_TRUE(is_isomorphism(g, h, *m));
        // Removing one edge breaks it.
        if (h.edge_count() > 0) {
            auto e = h.edges().front();
            h.remove_edge(e.first, e.second);
            EXPECT_FALSE(find_isomorphism(g, h));
        }
    }
}

TEST(Isomorphism, RegularNonIsomorphicPair) {
    // C6 vs two disjoint triangles: same degree sequence, not isomorphic.
    ExclusivityGraph tt(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
    EXPECT_FALSE(find_isomorphism(cycle_graph(6), tt));
}

TEST(SelfComplementary, Examples) {
    const auto c5 = is_self_complementary(cycle_graph(5));
    EXPECT_TRUE(c5.self_complementary);
    EXPECT_TRUE(is_isomorphism(cycle_graph(5), complement(cycle_graph(5)), c5.witness));
    EXPECT_FALSE(is_self_complementary(cycle_graph(7)).self_complementary);
    const auto h = h_embedding(cycle_graph(7));
    const auto r = is_self_complementary(h);
    EXPECT_TRUE(r.self_complementary);
    EXPECT_TRUE(is_isomorphism(h, complement(h), r.witness));
}

TEST(HEmbedding, C7Counts) {
    const auto h = h_embedding(cycle_graph(7));
    EXPECT_EQ(h.size(), 28u);
    EXPECT_EQ(h.edge_count(), 189u);
    EXPECT_EQ(h.labels()[0].tag, "B1:E0");
    EXPECT_EQ(h.labels()[27].tag, "B4:Z6");
}

TEST(HEmbedding, K1IsP4) {
    const auto h = h_embedding(ExclusivityGraph(1));
    EXPECT_EQ(h, path_graph(4));
    EXPECT_TRUE(is_self_complementary(h).self_complementary);
}

TEST(HEmbedding, BlockStructure) {
    const auto g = cycle_graph(5);
    const auto gc = complement(g);
    const auto h = h_embedding(g);
    const std::size_t n = 5;
    for (std::size_t a = 0; a < 4 * n; ++a)
        for (std::size_t b = 0; b < 4 * n; ++b) {
            if (a == b) continue;
            const std::size_t ba = a / n, bb = b / n;
            bool expect;
            if (ba == bb)
                expect = (ba == 0 || ba == 3) ? g.adjacent(a % n, b % n) : gc.adjacent(a % n, b % n);
            else
                expect = (ba > bb ? ba - bb : bb - ba) == 1;
            EXPECT_EQ(h.adjacent(a, b), expect);
        }
}

TEST(HEmbedding, SelfComplementaryForRandomGraphs) {
    std::mt19937 rng(5);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng() % 10;
        const auto g = random_graph(rng, n, 0.5);
        const auto h = h_embedding(g);
        EXPECT_EQ(h.edge_count(), 4 * n * n - n);
        EXPECT_EQ(2 * h.edge_count(), (4 * n) * (4 * n - 1) / 2);
        EXPECT_TRUE(is_isomorphism(h, complement(h), h_embedding_self_complement_map(n)));
        if (n <= 8) {
            const auto r = is_self_complementary(h);
            ASSERT_TRUE(r.self_complementary);
            EXPECT_TRUE(is_isomorphism(h, complement(h), r.witness));
        }
    }
}

TEST(HEmbedding, CoinWeights) {
    const VertexWeights p = {0.5, 0.5}, x = {1, 0}, y = {0, 1}, z = {0.2, 0.4};
    const CoinWeights coins{0.6, 0.4, 0.5, 0.5, 0.3, 0.7};
    const auto w = h_embedding_weights(p, x, y, z, coins);
    const VertexWeights expect = {0.3, 0.3, 0.2, 0.0, 0.0, 0.15, 0.14, 0.28};
    ASSERT_EQ(w.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(w[i], expect[i], 1e-15);
    EXPECT_THROW(h_embedding_weights(p, x, y, z, CoinWeights{0.7, 0.4}), Error);
}

TEST(VertexTransitive, Examples) {
    EXPECT_TRUE(is_vertex_transitive(cycle_graph(5)));
    EXPECT_TRUE(is_vertex_transitive(complete_graph(2)));
    EXPECT_FALSE(is_vertex_transitive(path_graph(4)));
    EXPECT_TRUE(is_vertex_transitive(exclusivity_graph(chsh_scenario())));
}

TEST(Dot, Renders) {
    const auto d = to_dot(complete_graph(2));
    EXPECT_EQ(d, "graph G {\n  0;\n  1;\n  0 -- 1;\n}\n");
}
