#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "exwb/catalog.hpp"
#include "exwb/scenario.hpp"

using namespace exwb;

namespace {

std::vector<std::string> keys(const Scenario& s, const std::vector<Context>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) out.push_back(s.key(c));
    return out;
}

double sum(const ProbabilityTable& t) { return std::accumulate(t.begin(), t.end(), 0.0); }

} // namespace

TEST(Scenario, RejectsBadInput) {
    EXPECT_THROW(Scenario({{"a", 1}}, {}), Error);
    EXPECT_THROW(Scenario({{"a", 2}, {"a", 3}}, {}), Error);
    EXPECT_THROW(Scenario({{"a", 2}}, {{"a", "a"}}), Error);
    EXPECT_THROW(Scenario({{"a", 2}}, {{"a", "b"}}), Error);
    EXPECT_THROW(Scenario({{"", 2}}, {}), Error);
}

TEST(Scenario, ChshMaximalContexts) {
    const auto s = chsh_scenario();
    EXPECT_EQ(keys(s, enumerate_contexts(s, true)),
              (std::vector<std::string>{"x0,y0", "x0,y1", "x1,y0", "x1,y1"}));
    // 4 singletons + 4 pairs
    EXPECT_EQ(enumerate_contexts(s, false).size(), 8u);
}

TEST(Scenario, SingleMeasurementHasOneContext) {
    const Scenario s({{"m", 3}}, {});
    EXPECT_EQ(keys(s, enumerate_contexts(s, true)), std::vector<std::string>{"m"});
}

TEST(Scenario, PentagonContextsAreAdjacentPairs) {
    const auto s = pentagon_scenario();
    EXPECT_EQ(keys(s, enumerate_contexts(s, true)),
              (std::vector<std::string>{"x1,x2", "x1,x5", "x2,x3", "x3,x4", "x4,x5"}));
}

TEST(Scenario, ContextsClosedUnderSubsets) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        std::vector<Measurement> ms;
        std::vector<std::pair<std::string, std::string>> comp;
        for (int i = 0; i < n; ++i) ms.push_back({"m" + std::to_string(i), 2 + static_cast<int>(rng() % 2)});
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng() % 2) comp.emplace_back("m" + std::to_string(i), "m" + std::to_string(j));
        const Scenario s(ms, comp);
        const auto all = enumerate_contexts(s, false);
        for (const auto& c : s.maximal_contexts()) {
            const std::size_t k = c.members.size();
            for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
                Context sub;
                for (std::size_t b = 0; b < k; ++b)
                    if (mask >> b & 1) sub.members.push_back(c.members[b]);
                EXPECT_TRUE(s.is_context(sub));
                EXPECT_NE(std::find(all.begin(), all.end(), sub), all.end());
            }
        }
        // every context lies in a maximal one
        for (const auto& c : all) {
            bool inside = false;
            for (const auto& m : s.maximal_contexts())
                inside |= std::includes(m.members.begin(), m.members.end(), c.members.begin(), c.members.end());
            EXPECT_TRUE(inside);
        }
        EXPECT_TRUE(std::is_sorted(all.begin(), all.end(), [&](const Context& a, const Context& b) {
            std::vector<std::string> ia, ib;
            for (auto m : a.members) ia.push_back(s.measurement(m).id);
            for (auto m : b.members) ib.push_back(s.measurement(m).id);
            return ia < ib;
        }));
    }
}

TEST(Behaviour, NormalizationOnCatalog) {
    for (const auto& name : {"specker_triangle", "wright_pentagon", "pr_box", "almost_quantum_chsh"}) {
        const auto b = catalog_get(name);
        EXPECT_TRUE(check_normalization(b, 1e-12).pass) << name;
        EXPECT_TRUE(check_nondisturbance(b, 1e-12).pass) << name;
    }
}

TEST(Behaviour, NormalizationReportsDeficit) {
    const Scenario s({{"a", 2}, {"b", 2}}, {{"a", "b"}});
    const Behaviour b(s, {{0.5, 0.4, 0.0, 0.0}});
    const auto r = check_normalization(b);
    EXPECT_FALSE(r.pass);
    EXPECT_NEAR(r.deviation, 0.1, 1e-15);
    EXPECT_EQ(r.worst_context, 0u);
}

TEST(Behaviour, AlmostQuantumThirdRowSumsToOne) {
    const auto b = catalog_get("almost_quantum_chsh");
    const auto& s = b.scenario();
    const auto t = context_table(b, s.context_from_key("x1,y0"));
    EXPECT_NEAR(sum(t), 1.0, 1e-15);
    EXPECT_NEAR(t[0], 7.0 / 11.0 + std::sqrt(2.0) / 9.0, 1e-16);
    EXPECT_EQ(b.annotations()[2][0], "7/11+sqrt(2)/9");
}

TEST(Behaviour, PrMarginalsAreUniform) {
    const auto b = catalog_get("pr_box");
    const auto& s = b.scenario();
    // independent oracle: sum rows by hand
    for (const auto& c : s.maximal_contexts()) {
        const auto& t = b.table(*b.maximal_index(c));
        EXPECT_DOUBLE_EQ(t[0] + t[1], 0.5);
        EXPECT_DOUBLE_EQ(t[2] + t[3], 0.5);
        EXPECT_DOUBLE_EQ(t[0] + t[2], 0.5);
        EXPECT_DOUBLE_EQ(t[1] + t[3], 0.5);
    }
    const auto r = check_nondisturbance(b);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.pairs_checked, 4u);
}

TEST(Behaviour, SignallingIsDetected) {
    const auto s = chsh_scenario();
    // Alice's x0 marginal depends on Bob's setting.
    const Behaviour b = Behaviour::from_keyed(
        s, {{"x0,y0", {1, 0, 0, 0}}, {"x0,y1", {0, 0, 1, 0}}, {"x1,y0", {1, 0, 0, 0}}, {"x1,y1", {1, 0, 0, 0}}});
    const auto r = check_nondisturbance(b);
    EXPECT_FALSE(r.pass);
    ASSERT_TRUE(r.witness.has_value());
    EXPECT_EQ(s.key(r.witness->shared), "x0");
    EXPECT_DOUBLE_EQ(r.max_mismatch, 1.0);
}

TEST(Behaviour, AlmostQuantumIsNonDisturbing) {
    const auto b = catalog_get("almost_quantum_chsh");
    const auto& s = b.scenario();
    // direct summation of the rows, per measurement
    auto marg = [&](const std::string& key, int which) {
        const auto& t = b.table(*b.maximal_index(s.context_from_key(key)));
        return which == 0 ? t[0] + t[1] : t[0] + t[2];
    };
    EXPECT_NEAR(marg("x0,y0", 0), marg("x0,y1", 0), 1e-15);
    EXPECT_NEAR(marg("x1,y0", 0), marg("x1,y1", 0), 1e-15);
    EXPECT_NEAR(marg("x0,y0", 1), marg("x1,y0", 1), 1e-15);
    EXPECT_NEAR(marg("x0,y1", 1), marg("x1,y1", 1), 1e-15);
    EXPECT_TRUE(check_nondisturbance(b, 1e-12).pass);
}

TEST(Marginalize, Examples) {
    const auto b = catalog_get("pr_box");
    const auto& s = b.scenario();
    const auto c = s.context_from_key("x0,y0");
    EXPECT_EQ(marginalize(b, c, s.context_from_key("x0")), (ProbabilityTable{0.5, 0.5}));
    EXPECT_EQ(marginalize(b, c, c), b.table(0));
    EXPECT_THROW(marginalize(b, c, s.context_from_key("x1")), Error);

    const Scenario u({{"a", 2}, {"b", 2}}, {{"a", "b"}});
    const Behaviour ub(u, {{0.25, 0.25, 0.25, 0.25}});
    EXPECT_EQ(marginalize(ub, u.context_from_key("a,b"), u.context_from_key("b")), (ProbabilityTable{0.5, 0.5}));
}

TEST(Marginalize, TowerProperty) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const Scenario s({{"a", 2}, {"b", 3}, {"c", 2}}, {{"a", "b"}, {"b", "c"}, {"a", "c"}});
    for (int trial = 0; trial < 20; ++trial) {
        ProbabilityTable t(12);
        for (auto& p : t) p = U(rng);
        const double z = sum(t);
        for (auto& p : t) p /= z;
        const Behaviour b(s, {t});
        const auto full = s.context_from_key("a,b,c");
        const auto mid = s.context_from_key("a,b");
        const auto low = s.context_from_key("b");
        const auto two_step = detail::marginal_of(s, mid, marginalize(b, full, mid), low);
        const auto one_step = marginalize(b, full, low);
        for (std::size_t k = 0; k < one_step.size(); ++k) EXPECT_NEAR(two_step[k], one_step[k], 1e-12);
        EXPECT_NEAR(sum(marginalize(b, full, mid)), sum(t), 1e-12);
    }
}

TEST(Tensor, DeterministicTimesDeterministic) {
    const auto d = catalog_get("deterministic_chsh");
    const auto t = tensor_behaviours(d, d);
    EXPECT_EQ(t.tables().size(), 16u);
    for (const auto& tab : t.tables()) {
        EXPECT_EQ(tab[0], 1.0);
        EXPECT_EQ(sum(tab), 1.0);
    }
}

TEST(Tensor, SpeckerSquared) {
    const auto sp = catalog_get("specker_triangle");
    const auto t = tensor_behaviours(sp, sp);
    for (const auto& c : t.scenario().maximal_contexts()) EXPECT_EQ(c.members.size(), 4u);
    for (const auto& tab : t.tables())
        for (double p : tab) EXPECT_TRUE(p == 0.0 || p == 0.25);
    EXPECT_TRUE(check_normalization(t).pass);
    EXPECT_TRUE(check_nondisturbance(t).pass);
}

TEST(Tensor, PrSquaredIsProductOfRows) {
    const auto pr = catalog_get("pr_box");
    const auto t = tensor_behaviours(pr, pr);
    ASSERT_EQ(t.tables().size(), 16u);
    const auto& s = t.scenario();
    const auto& s1 = pr.scenario();
    for (const auto& k1 : {"x0,y0", "x0,y1", "x1,y0", "x1,y1"})
        for (const auto& k2 : {"x0,y0", "x0,y1", "x1,y0", "x1,y1"}) {
            const auto c1 = s1.context_from_key(k1), c2 = s1.context_from_key(k2);
            std::string a = k1, b = k2;
            const std::string key = "1." + a.substr(0, 2) + ",1." + a.substr(3) + ",2." + b.substr(0, 2) + ",2." + b.substr(3);
            const auto& tab = t.table(*t.maximal_index(s.context_from_key(key)));
            const auto& r1 = pr.table(*pr.maximal_index(c1));
            const auto& r2 = pr.table(*pr.maximal_index(c2));
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(tab[i * 4 + j], r1[i] * r2[j]);
        }
}

TEST(Tensor, PreservesConstraintsOnRandomNonSignalling) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        // mixtures of deterministic CHSH strategies are non-signalling
        std::map<std::string, ProbabilityTable> keyed;
        const auto s = chsh_scenario();
        for (const auto& c : s.maximal_contexts()) keyed[s.key(c)] = ProbabilityTable(4, 0.0);
        double z = 0.0;
        std::vector<double> lam(16);
        for (auto& l : lam) z += (l = U(rng));
        for (int strat = 0; strat < 16; ++strat) {
            const int a[2] = {strat & 1, strat >> 1 & 1}, b[2] = {strat >> 2 & 1, strat >> 3 & 1};
            for (int x = 0; x < 2; ++x)
                for (int y = 0; y < 2; ++y)
                    keyed["x" + std::to_string(x) + ",y" + std::to_string(y)][static_cast<std::size_t>(a[x] * 2 + b[y])] +=
                        lam[static_cast<std::size_t>(strat)] / z;
        }
        const auto b = Behaviour::from_keyed(s, keyed);
        const auto t = tensor_behaviours(b, catalog_get("pr_box"));
        EXPECT_TRUE(check_normalization(t).pass);
        EXPECT_TRUE(check_nondisturbance(t).pass);
    }
}

TEST(Catalog, Entries) {
    const auto sp = catalog_get("specker_triangle");
    ASSERT_EQ(sp.tables().size(), 3u);
    for (const auto& t : sp.tables()) EXPECT_EQ(t, (ProbabilityTable{0, 0.5, 0.5, 0}));

    const auto pr = catalog_get("pr_box");
    const auto& s = pr.scenario();
    for (const auto& k : {"x0,y0", "x0,y1", "x1,y0"})
        EXPECT_EQ(pr.table(*pr.maximal_index(s.context_from_key(k))), (ProbabilityTable{0.5, 0, 0, 0.5}));
    EXPECT_EQ(pr.table(*pr.maximal_index(s.context_from_key("x1,y1"))), (ProbabilityTable{0, 0.5, 0.5, 0}));
    EXPECT_DOUBLE_EQ(chsh_value(pr), 4.0);

    const auto ts = catalog_get("tsirelson_chsh");
    EXPECT_NEAR(chsh_value(ts), 2.0 * std::sqrt(2.0), 1e-12);
    EXPECT_DOUBLE_EQ(chsh_value(catalog_get("deterministic_chsh")), 2.0);

    try {
        catalog_get("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("pr_box"), std::string::npos);
    }
}

TEST(Catalog, SpeckerRowOrderIsCanonicalised) {
    // The x3,x1 row is given in the order (x3,x1); its 01 entry must land on x1=1,x3=0.
    const auto sp = catalog_get("specker_triangle");
    const auto& s = sp.scenario();
    const Event e{s.context_from_key("x1,x3"), {1, 0}};
    EXPECT_EQ(event_probability(sp, e), 0.5);
}
