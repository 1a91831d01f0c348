#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "exwb/catalog.hpp"
#include "exwb/clique.hpp"
#include "exwb/graph.hpp"
#include "exwb/polytope.hpp"

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

// Brute force over all vertex subsets: best clique weight and the
// lexicographically first sorted clique reaching it.
std::pair<double, std::vector<std::size_t>> brute_max_clique(const ExclusivityGraph& g, const VertexWeights& w) {
    const std::size_t n = g.size();
    double best = 0.0;
    std::vector<std::vector<std::size_t>> cliques;
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::size_t> vs;
        for (std::size_t v = 0; v < n; ++v)
            if (mask >> v & 1) vs.push_back(v);
        if (!is_clique(g, vs)) continue;
        double s = 0.0;
        bool zero = false;
        for (auto v : vs) {
            s += w[v];
            zero |= w[v] == 0.0;
        }
        if (zero) continue;
        cliques.push_back(vs);
        best = std::max(best, s);
    }
    std::vector<std::size_t> first;
    bool found = false;
    for (const auto& c : cliques) {
        double s = 0.0;
        for (auto v : c) s += w[v];
        if (s >= best - 1e-12 * std::max(1.0, best) && (!found || c < first)) first = c, found = true;
    }
    return {best, first};
}

VertexWeights uniform(std::size_t n, double c) { return VertexWeights(n, c); }

// Random non-signalling CHSH behaviour: mixture of the 16 local deterministic
// and 8 PR-type vertices of the non-signalling polytope.
Behaviour random_non_signalling(std::mt19937& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto s = chsh_scenario();
    std::vector<std::vector<double>> verts;  // stacked, contexts x0y0,x0y1,x1y0,x1y1
    for (int st = 0; st < 16; ++st) {
        std::vector<double> v(16, 0.0);
        const int a[2] = {st & 1, st >> 1 & 1}, b[2] = {st >> 2 & 1, st >> 3 & 1};
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) v[static_cast<std::size_t>((x * 2 + y) * 4 + a[x] * 2 + b[y])] = 1.0;
        verts.push_back(v);
    }
    for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
            for (int ga = 0; ga < 2; ++ga) {
                std::vector<double> v(16, 0.0);
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y)
                        for (int a = 0; a < 2; ++a)
                            for (int b = 0; b < 2; ++b)
                                if ((a ^ b) == ((x * y) ^ (al * x) ^ (be * y) ^ ga))
                                    v[static_cast<std::size_t>((x * 2 + y) * 4 + a * 2 + b)] = 0.5;
                verts.push_back(v);
            }
    std::vector<double> lam(verts.size());
    double z = 0.0;
    for (auto& l : lam) z += (l = std::pow(U(rng), 4.0));
    std::vector<ProbabilityTable> tables(4, ProbabilityTable(4, 0.0));
    for (std::size_t k = 0; k < verts.size(); ++k)
        for (std::size_t i = 0; i < 16; ++i) tables[i / 4][i % 4] += lam[k] / z * verts[k][i];
    return Behaviour(s, tables);
}

} // namespace

TEST(MaxWeightClique, Examples) {
    EXPECT_DOUBLE_EQ(max_weight_clique(complete_graph(3), uniform(3, 0.5)).weight_sum, 1.5);
    const auto g = exclusivity_graph(chsh_scenario());
    const auto w = behaviour_to_weights(catalog_get("pr_box"), g);
    EXPECT_NEAR(max_weight_clique(g, w).weight_sum, 1.0, 1e-12);
    EXPECT_NEAR(brute_max_clique(g, w).first, 1.0, 1e-12);
    EXPECT_NEAR(max_weight_clique(or_power(cycle_graph(5), 2), uniform(25, 0.25)).weight_sum, 1.25, 1e-12);
    EXPECT_TRUE(max_weight_clique(cycle_graph(5), uniform(5, 0.0)).vertices.empty());
}

TEST(MaxWeightClique, MatchesBruteForceWithLexTieBreak) {
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> level(0, 4);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + rng() % 13;
        const auto g = random_graph(rng, n, 0.2 + 0.6 * (rng() % 100) / 100.0);
        VertexWeights w(n);
        for (auto& x : w) x = level(rng) / 4.0;  // coarse levels force ties
        const auto got = max_weight_clique(g, w);
        const auto [best, first] = brute_max_clique(g, w);
        EXPECT_NEAR(got.weight_sum, best, 1e-12);
        EXPECT_EQ(got.vertices, first);
        EXPECT_TRUE(is_clique(g, got.vertices));
    }
}

TEST(MaxWeightClique, Deterministic) {
    const auto g = or_power(cycle_graph(5), 2);
    const auto a = max_weight_clique(g, uniform(25, 0.3));
    const auto b = max_weight_clique(g, uniform(25, 0.3));
    EXPECT_EQ(a.vertices, b.vertices);
    EXPECT_EQ(a.vertices.size(), 5u);
}

TEST(MaximalCliques, C5AndK4) {
    EXPECT_EQ(maximal_cliques(cycle_graph(5)),
              (std::vector<std::vector<std::size_t>>{{0, 1}, {0, 4}, {1, 2}, {2, 3}, {3, 4}}));
    EXPECT_EQ(maximal_cliques(complete_graph(4)), (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}}));
    EXPECT_EQ(maximal_cliques(edgeless_graph(2)), (std::vector<std::vector<std::size_t>>{{0}, {1}}));
}

TEST(IndependentSets, Counts) {
    EXPECT_EQ(enumerate_independent_sets(cycle_graph(5)).size(), 11u);
    EXPECT_EQ(enumerate_independent_sets(complete_graph(3)).size(), 4u);
    EXPECT_EQ(enumerate_independent_sets(edgeless_graph(3)).size(), 8u);
    EXPECT_THROW(enumerate_independent_sets(edgeless_graph(33)), CapExceeded);
    EXPECT_EQ(independence_number(cycle_graph(5)), 2u);
    EXPECT_EQ(independence_number(cycle_graph(7)), 3u);
}

TEST(Ep, SpeckerTwoCopies) {
    const auto sp = catalog_get("specker_triangle");
    const auto g = exclusivity_graph(sp.scenario());
    const auto w = behaviour_to_weights(sp, g);
    const auto one = satisfies_ep(g, w, 1);
    // The three events (01|12),(01|23),(10|13) are pairwise exclusive: sum 3/2.
    EXPECT_FALSE(one.member);
    EXPECT_NEAR(one.value, 1.5, 1e-12);
    const auto two = satisfies_ep(g, w, 2);
    EXPECT_FALSE(two.member);
    EXPECT_GT(two.value, 1.0 + 1e-9);
    const auto re = verify_clique_certificate(g, w, two.clique_coordinates);
    ASSERT_TRUE(re);
    EXPECT_NEAR(*re, two.value, 1e-12);
}

TEST(Ep, PrBox) {
    const auto pr = catalog_get("pr_box");
    const auto g = exclusivity_graph(pr.scenario());
    const auto w = behaviour_to_weights(pr, g);
    const auto one = satisfies_ep(g, w, 1);
    EXPECT_TRUE(one.member);
    EXPECT_NEAR(one.value, 1.0, 1e-12);
    const auto two = satisfies_ep(g, w, 2);
    EXPECT_FALSE(two.member);
    const auto re = verify_clique_certificate(g, w, two.clique_coordinates);
    ASSERT_TRUE(re);
    EXPECT_GT(*re, 1.0 + 1e-9);
    // full-index vertices agree with coordinates
    for (std::size_t k = 0; k < two.clique.vertices.size(); ++k)
        EXPECT_EQ(two.clique.vertices[k], two.clique_coordinates[k][0] * 16 + two.clique_coordinates[k][1]);
}

TEST(Ep, ZeroWeightsAlwaysSatisfy) {
    for (int n = 1; n <= 4; ++n) EXPECT_TRUE(satisfies_ep(cycle_graph(7), uniform(7, 0.0), n).member);
}

TEST(Qstab, Examples) {
    const auto wr = catalog_get("wright_pentagon");
    const auto g = exclusivity_graph(wr.scenario());
    const auto w = behaviour_to_weights(wr, g);
    EXPECT_NEAR(brute_max_clique(g, w).first, in_qstab(g, w).value, 1e-12);

    VertexWeights two = {1, 1, 0};
    const auto v = in_qstab(path_graph(3), two);
    EXPECT_FALSE(v.member);
    EXPECT_EQ(v.clique.vertices, (std::vector<std::size_t>{0, 1}));

    EXPECT_TRUE(in_qstab(cycle_graph(5), uniform(5, 0.5)).member);
}

TEST(En, UniformC5Thresholds) {
    const auto c5 = cycle_graph(5);
    EXPECT_TRUE(in_E_n(c5, uniform(5, 0.5), 1).member);
    EXPECT_FALSE(in_E_n(c5, uniform(5, 0.5 + 1e-6), 1).member);
    const double c = 1.0 / std::sqrt(5.0);
    EXPECT_TRUE(in_E_n(c5, uniform(5, c), 2).member);
    EXPECT_FALSE(in_E_n(c5, uniform(5, c + 1e-6), 2).member);
    EXPECT_TRUE(in_E_n(c5, uniform(5, 0.44), 2).member);
}

TEST(En, MonotoneInCopies) {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 40; ++t) {
        const auto g = random_graph(rng, 3 + rng() % 4, 0.5);
        VertexWeights w(g.size());
        for (auto& x : w) x = 0.6 * U(rng);
        const bool e1 = in_E_n(g, w, 1).member, e2 = in_E_n(g, w, 2).member, e3 = in_E_n(g, w, 3).member;
        if (e3) EXPECT_TRUE(e2);
        if (e2) EXPECT_TRUE(e1);
    }
}

TEST(Ep, SquareDecisionMatchesBruteForce) {
    // Brute force over subsets of the 16-vertex OR square; weights normalised
    // so single-copy EP holds with equality and the decision is non-trivial.
    std::mt19937 rng(37);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int violated = 0;
    for (int t = 0; t < 60; ++t) {
        const auto g = random_graph(rng, 4, 0.3 + 0.4 * U(rng));
        VertexWeights w(4);
        for (auto& x : w) x = U(rng);
        const double m = max_weight_clique(g, w).weight_sum;
        for (auto& x : w) x = std::min(1.0, x * (0.98 + 0.04 * U(rng)) / m);
        const auto v = satisfies_ep(g, w, 2);
        const double best = brute_max_clique(or_power(g, 2), tensor_power(w, 2)).first;
        EXPECT_EQ(v.member, best <= 1.0 + ep_tolerance) << best;
        if (!v.member) {
            ++violated;
            const auto again = verify_clique_certificate(g, w, v.clique_coordinates);
            ASSERT_TRUE(again.has_value());
            EXPECT_GT(*again, 1.0 + ep_tolerance);
            EXPECT_NEAR(*again, v.clique.weight_sum, 1e-12);
        } else {
            EXPECT_FALSE(v.value_exact);
            EXPECT_LE(v.value, best + 1e-12);
        }
    }
    EXPECT_GT(violated, 5);
}

TEST(Ep, SingleCopyViolationLiftsToProductClique) {
    const auto c5 = cycle_graph(5);
    const auto v = satisfies_ep(c5, uniform(5, 0.6), 3);
    ASSERT_FALSE(v.member);
    EXPECT_EQ(v.clique.vertices.size(), 8u);
    EXPECT_NEAR(v.clique.weight_sum, std::pow(1.2, 3), 1e-12);
    const auto again = verify_clique_certificate(c5, uniform(5, 0.6), v.clique_coordinates);
    ASSERT_TRUE(again.has_value());
    EXPECT_NEAR(*again, std::pow(1.2, 3), 1e-12);
    EXPECT_TRUE(std::is_sorted(v.clique.vertices.begin(), v.clique.vertices.end()));
}

TEST(Ep, ProductBoundSettlesHEmbeddingSquare) {
    // Uniform weight 1/4 on h_embedding(C5): omega = 4 so single copy is tight,
    // while the square of two joined blocks C5 + co-C5 holds a clique of 20.
    const auto h = h_embedding(cycle_graph(5));
    const auto v = satisfies_ep(h, uniform(h.size(), 0.25), 2);
    ASSERT_FALSE(v.member);
    const auto again = verify_clique_certificate(h, uniform(h.size(), 0.25), v.clique_coordinates);
    ASSERT_TRUE(again.has_value());
    EXPECT_GT(*again, 1.0 + ep_tolerance);
    const auto m = satisfies_ep(h, uniform(h.size(), 0.2), 2);
    EXPECT_TRUE(m.member);
}

TEST(Qstab, NonSignallingChshSatisfiesSingleCopyEp) {
    std::mt19937 rng(41);
    const auto g = exclusivity_graph(chsh_scenario());
    for (int t = 0; t < 100; ++t) {
        const auto b = random_non_signalling(rng);
        ASSERT_TRUE(check_nondisturbance(b, 1e-12).pass);
        const auto v = in_qstab(g, behaviour_to_weights(b, g));
        EXPECT_TRUE(v.member) << v.value;
    }
}

TEST(Stab, UniformC5) {
    const auto c5 = cycle_graph(5);
    const auto in = in_stab(c5, uniform(5, 0.4));
    ASSERT_TRUE(in.member);
    EXPECT_LE(verify_stab_mixture(c5, uniform(5, 0.4), in.mixture), 1e-9);
    // the explicit combination of the five pairs with coefficient 1/5 also works
    std::vector<MixtureTerm> pairs = {{{0, 2}, 0.2}, {{0, 3}, 0.2}, {{1, 3}, 0.2}, {{1, 4}, 0.2}, {{2, 4}, 0.2}};
    EXPECT_LE(verify_stab_mixture(c5, uniform(5, 0.4), pairs), 1e-15);

    const auto out = in_stab(c5, uniform(5, 0.45));
    ASSERT_FALSE(out.member);
    ASSERT_TRUE(out.inequality);
    EXPECT_GT(verify_stab_separation(c5, uniform(5, 0.45), *out.inequality), 1e-9);
}

TEST(Stab, IndependentSetVerticesAreMembers) {
    const auto g = cycle_graph(7);
    for (const auto& s : enumerate_independent_sets(g)) {
        VertexWeights w(7, 0.0);
        for (auto v : s) w[v] = 1.0;
        const auto r = in_stab(g, w);
        EXPECT_TRUE(r.member);
        EXPECT_LE(verify_stab_mixture(g, w, r.mixture), 1e-9);
    }
}

TEST(Stab, ChainInclusionOnRandomInstances) {
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 60; ++t) {
        const auto g = random_graph(rng, 3 + rng() % 5, 0.5);
        VertexWeights w(g.size());
        const double scale = U(rng);
        for (auto& x : w) x = scale * U(rng);
        const auto st = in_stab(g, w);
        const auto e2 = in_E_n(g, w, 2);
        const auto e1 = in_qstab(g, w);
        if (st.member) EXPECT_TRUE(e2.member);
        if (e2.member) EXPECT_TRUE(e1.member);
        if (st.member)
            EXPECT_LE(verify_stab_mixture(g, w, st.mixture), 1e-9);
        else
            EXPECT_GT(verify_stab_separation(g, w, *st.inequality), 0.0);
        if (!e2.member) EXPECT_GT(*verify_clique_certificate(g, w, e2.clique_coordinates), 1.0);
    }
}

TEST(Local, Examples) {
    const auto det = catalog_get("deterministic_chsh");
    const auto d = in_local_polytope(det);
    EXPECT_TRUE(d.member);
    EXPECT_LE(verify_local_mixture(det, d.mixture), 1e-9);

    const auto pr = catalog_get("pr_box");
    const auto p = in_local_polytope(pr);
    ASSERT_FALSE(p.member);
    ASSERT_TRUE(p.inequality);
    EXPECT_NEAR(p.inequality->bound, 2.0, 1e-9);
    EXPECT_NEAR(p.inequality->value, 4.0, 1e-9);
    EXPECT_NEAR(verify_local_separation(pr, *p.inequality), 2.0, 1e-9);
    EXPECT_NE(p.inequality->name.find("CHSH"), std::string::npos);

    const auto ts = catalog_get("tsirelson_chsh");
    const auto q = in_local_polytope(ts);
    ASSERT_FALSE(q.member);
    EXPECT_NEAR(q.inequality->value, 2.0 * std::sqrt(2.0), 1e-9);
    EXPECT_GT(verify_local_separation(ts, *q.inequality), 0.8);
}

TEST(Local, NonChshScenarioUsesLpInequality) {
    // Specker's triangle is not CHSH-shaped; perfect anticorrelation on an odd cycle is non-classical.
    const auto sp = catalog_get("specker_triangle");
    const auto r = in_local_polytope(sp);
    ASSERT_FALSE(r.member);
    EXPECT_EQ(r.inequality->name, "lp-dual");
    EXPECT_GT(verify_local_separation(sp, *r.inequality), 1e-9);
}

TEST(Local, RandomLocalMixturesAreMembers) {
    std::mt19937 rng(61);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const auto s = chsh_scenario();
    for (int t = 0; t < 20; ++t) {
        std::vector<ProbabilityTable> tables(4, ProbabilityTable(4, 0.0));
        double z = 0.0;
        std::vector<double> lam(16);
        for (auto& l : lam) z += (l = U(rng));
        for (int st = 0; st < 16; ++st) {
            const int a[2] = {st & 1, st >> 1 & 1}, b[2] = {st >> 2 & 1, st >> 3 & 1};
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    tables[static_cast<std::size_t>(x * 2 + y)][static_cast<std::size_t>(a[x] * 2 + b[y])] +=
                        lam[static_cast<std::size_t>(st)] / z;
        }
        const Behaviour b(s, tables);
        const auto r = in_local_polytope(b);
        EXPECT_TRUE(r.member);
        EXPECT_LE(verify_local_mixture(b, r.mixture), 1e-9);
    }
}

TEST(Local, CapExceeded) {
    std::vector<Measurement> ms;
    for (int i = 0; i < 21; ++i) ms.push_back({"m" + std::to_string(i), 2});
    const Scenario s(ms, {});
    std::vector<ProbabilityTable> tables(21, ProbabilityTable{0.5, 0.5});
    EXPECT_THROW(in_local_polytope(Behaviour(s, tables)), CapExceeded);
}

TEST(Antiblocker, Examples) {
    const auto c5 = cycle_graph(5);
    EXPECT_NEAR(antiblocker_max(PolytopeKind::STAB, c5, uniform(5, 0.5)).value, 1.0, 1e-12);
    EXPECT_NEAR(antiblocker_max(PolytopeKind::QSTAB, c5, uniform(5, 0.0)).value, 0.0, 1e-12);
    EXPECT_NEAR(antiblocker_max(PolytopeKind::STAB, c5, uniform(5, 0.0)).value, 0.0, 1e-12);
    // QSTAB(C5) maximum of the uniform direction is 5/2 (all halves).
    EXPECT_NEAR(antiblocker_max(PolytopeKind::QSTAB, c5, uniform(5, 1.0)).value, 2.5, 1e-12);
}

TEST(Antiblocker, StabMaxMatchesEnumeration) {
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        const auto g = random_graph(rng, 2 + rng() % 7, 0.4);
        std::vector<double> q(g.size());
        for (auto& x : q) x = U(rng);
        double best = 0.0;
        for (const auto& s : enumerate_independent_sets(g)) {
            double v = 0.0;
            for (auto i : s) v += q[i];
            best = std::max(best, v);
        }
        EXPECT_NEAR(antiblocker_max(PolytopeKind::STAB, g, q).value, best, 1e-9);
        // STAB is inside QSTAB
        EXPECT_GE(antiblocker_max(PolytopeKind::QSTAB, g, q).value, best - 1e-9);
    }
}

TEST(Antiblocker, CliqueVectorsOfC5AreInAblQstab) {
    // abl(QSTAB(G)) = STAB(complement G): its vertices are clique indicator vectors of G.
    const auto c5 = cycle_graph(5);
    for (const auto& s : enumerate_independent_sets(complement(c5))) {
        std::vector<double> q(5, 0.0);
        for (auto v : s) q[v] = 1.0;
        EXPECT_LE(antiblocker_max(PolytopeKind::QSTAB, c5, q).value, 1.0 + 1e-9);
    }
}

TEST(Antiblocker, IndependentPairOfC5IsNotInAblQstab) {
    // An independent pair is itself a QSTAB point, and its square norm is 2.
    const auto c5 = cycle_graph(5);
    std::vector<double> q = {1, 0, 1, 0, 0};
    EXPECT_NEAR(antiblocker_max(PolytopeKind::QSTAB, c5, q).value, 2.0, 1e-12);
}
