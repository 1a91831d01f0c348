#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "exwb/cli.hpp"

using namespace exwb;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

CliRun invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const auto dir = fs::temp_directory_path() / "exwb-cli-tests" / (std::string(info->test_suite_name()) + "." + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

std::string sample(const std::string& name) { return std::string(EXWB_SAMPLES_DIR) + "/" + name; }

} // namespace

TEST(Cli, PrTwoCopiesExitsTwoWithCliqueCertificate) {
    const auto dir = scratch();
    const auto r = invoke({"membership", "--set", "qstab", "--graph", sample("chsh.json"), "--weights", sample("pr.json"),
                        "--copies", "2", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 2) << r.err;
    ASSERT_TRUE(fs::exists(dir / "certificate.json"));
    const auto cert = load(dir / "certificate.json");
    EXPECT_EQ(cert.at("type"), "clique-violation");

    // Re-check the certificate from the sample files alone: pairwise OR
    // adjacency in the graph's edge list and the product weight sum.
    const auto g = load(sample("chsh.json"));
    const auto w = load(sample("pr.json")).at("weights").get<std::vector<double>>();
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : g.at("edges")) {
        edges.insert({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
        edges.insert({e[1].get<std::size_t>(), e[0].get<std::size_t>()});
    }
    const auto coords = cert.at("coordinates").get<std::vector<std::vector<std::size_t>>>();
    double total = 0.0;
    for (std::size_t a = 0; a < coords.size(); ++a) {
        total += w[coords[a][0]] * w[coords[a][1]];
        for (std::size_t b = a + 1; b < coords.size(); ++b)
            EXPECT_TRUE(edges.count({coords[a][0], coords[b][0]}) || edges.count({coords[a][1], coords[b][1]}));
    }
    EXPECT_GT(total, 1.0 + 1e-9);
    EXPECT_EQ(Json::parse(r.out), load(dir / "result.json"));
}

TEST(Cli, SingleCopyPrIsMember) {
    const auto dir = scratch();
    const auto r = invoke({"membership", "--set", "qstab", "--graph", sample("chsh.json"), "--weights", sample("pr.json"),
                        "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(Json::parse(r.out).at("member").get<bool>());
    EXPECT_FALSE(fs::exists(dir / "certificate.json"));
}

TEST(Cli, HEmbedOfC7) {
    const auto dir = scratch();
    const auto r = invoke({"exgraph", "h-embed", "--graph", sample("c7.json"), "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j.at("n"), 28);
    EXPECT_EQ(j.at("edges").size(), 189u);
    EXPECT_TRUE(j.at("self_complementary").get<bool>());
    // Witness maps edges to non-edges and back.
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : j.at("edges")) edges.insert({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
    const auto f = j.at("witness").get<std::vector<std::size_t>>();
    ASSERT_EQ(f.size(), 28u);
    for (std::size_t a = 0; a < 28; ++a)
        for (std::size_t b = a + 1; b < 28; ++b) {
            const bool e = edges.count({a, b}) > 0;
            const bool fe = edges.count({std::min(f[a], f[b]), std::max(f[a], f[b])}) > 0;
            EXPECT_NE(e, fe);
        }
}

TEST(Cli, MalformedJsonExitsOneWithPosition) {
    const auto dir = scratch();
    spit(dir / "bad.json", "{\"n\": 3,\n \"edges\": [[0, 1],]}");
    const auto r = invoke({"exgraph", "info", "--graph", (dir / "bad.json").string(), "--out-dir", (dir / "o").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("line 2, column"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "o" / "result.json"));
}

TEST(Cli, UsageAndIoErrorsExitOne) {
    const auto dir = scratch();
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"frobnicate"}).code, 1);
    EXPECT_EQ(invoke({"membership", "--set", "qstab"}).code, 1);
    EXPECT_EQ(invoke({"membership", "--set", "nope", "--named", "c5", "--weights", sample("pr.json"), "--out-dir", dir.string()}).code, 1);
    EXPECT_EQ(invoke({"exgraph", "info", "--graph", (dir / "missing.json").string(), "--out-dir", dir.string()}).code, 1);
    // Wrong weight count is a precondition error, not a verdict.
    EXPECT_EQ(invoke({"membership", "--set", "stab", "--named", "c5", "--weights", sample("pr.json"), "--out-dir", dir.string()}).code, 1);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, ReplayIsByteIdentical) {
    const auto dir = scratch();
    ASSERT_EQ(invoke({"quantum", "seesaw", "--catalog", "tsirelson_chsh", "--dim", "4", "--seed", "3", "--restarts", "2",
                   "--out-dir", (dir / "run").string()})
                  .code,
              0);
    const auto m = load(dir / "run" / "manifest.json");
    EXPECT_EQ(m.at("seeds").at("seed"), 3);
    EXPECT_EQ(m.at("version"), tool_version);
    const auto r = invoke({"replay", "--manifest", (dir / "run" / "manifest.json").string(), "--out-dir", (dir / "again").string()});
    ASSERT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_TRUE(Json::parse(r.out).at("identical").get<bool>());
    EXPECT_EQ(slurp(dir / "run" / "result.json"), slurp(dir / "again" / "result.json"));
}

TEST(Cli, ReplayOfNegativeVerdictAndChangedInput) {
    const auto dir = scratch();
    fs::copy_file(sample("pr.json"), dir / "pr.json");
    ASSERT_EQ(invoke({"membership", "--set", "en", "--copies", "2", "--graph", sample("chsh.json"), "--weights",
                   (dir / "pr.json").string(), "--out-dir", (dir / "run").string()})
                  .code,
              2);
    const auto ok = invoke({"replay", "--manifest", (dir / "run" / "manifest.json").string()});
    EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
    EXPECT_EQ(slurp(dir / "run" / "certificate.json"), slurp(dir / "run" / "replay" / "certificate.json"));
    spit(dir / "pr.json", "[0.5]");
    EXPECT_EQ(invoke({"replay", "--manifest", (dir / "run" / "manifest.json").string()}).code, 1);
}

TEST(Cli, InputsAreNotModified) {
    const auto dir = scratch();
    const auto before = slurp(sample("tsirelson_realization.json"));
    EXPECT_EQ(invoke({"quantum", "ideal", "--realization", sample("tsirelson_realization.json"), "--catalog", "tsirelson_chsh",
                   "--out-dir", dir.string()})
                  .code,
              0);
    EXPECT_EQ(before, slurp(sample("tsirelson_realization.json")));
    const auto m = load(dir / "manifest.json");
    ASSERT_EQ(m.at("inputs").size(), 1u);
    EXPECT_EQ(m.at("inputs")[0].at("sha256"), cli::sha256_hex(before));
}

TEST(Cli, Sha256KnownVector) {
    EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ScenarioCheckFlagsDisturbance) {
    const auto dir = scratch();
    auto j = load(sample("wright_pentagon.json"));
    auto& tables = j.at("tables");
    auto first = tables.begin();
    auto& t = first.value();
    // Shift (x1=0, x2=1) to (x1=1, x2=1): still normalized, but the x1
    // marginal no longer matches the other context containing x1.
    const double moved = t[1].get<double>();
    ASSERT_GT(moved, 0.0);
    t[1] = 0.0;
    t[3] = t[3].get<double>() + moved;
    spit(dir / "b.json", j.dump());
    const auto r = invoke({"scenario", "check", "--behaviour", (dir / "b.json").string(), "--out-dir", (dir / "o").string()});
    EXPECT_EQ(r.code, 2) << r.err;
    const auto res = Json::parse(r.out);
    EXPECT_TRUE(res.at("normalization").at("pass").get<bool>());
    EXPECT_FALSE(res.at("nondisturbance").at("pass").get<bool>());
    EXPECT_EQ(invoke({"scenario", "check", "--catalog", "wright_pentagon", "--out-dir", (dir / "o").string()}).code, 0);
}

TEST(Cli, ThetaAndNpaExitCodes) {
    const auto dir = scratch();
    EXPECT_EQ(invoke({"theta", "member", "--catalog", "tsirelson_chsh", "--out-dir", dir.string()}).code, 0);
    EXPECT_EQ(invoke({"membership", "--set", "theta", "--catalog", "pr_box", "--out-dir", dir.string()}).code, 2);
    EXPECT_EQ(load(dir / "certificate.json").at("type"), "theta-dual");
    EXPECT_EQ(invoke({"quantum", "npa", "--catalog", "pr_box", "--level", "1", "--out-dir", dir.string()}).code, 2);
    EXPECT_EQ(load(dir / "certificate.json").at("type"), "moment-dual");
    EXPECT_EQ(invoke({"quantum", "npa", "--catalog", "tsirelson_chsh", "--level", "1", "--out-dir", dir.string()}).code, 0);
    EXPECT_EQ(invoke({"membership", "--set", "local", "--catalog", "pr_box", "--out-dir", dir.string()}).code, 2);
    EXPECT_EQ(load(dir / "certificate.json").at("type"), "separating-inequality");
}

TEST(Cli, DotEmission) {
    const auto dir = scratch();
    ASSERT_EQ(invoke({"exgraph", "complement", "--named", "c5", "--dot", "--out-dir", dir.string()}).code, 0);
    const auto dot = slurp(dir / "graph.dot");
    EXPECT_NE(dot.find("graph"), std::string::npos);
    const auto m = load(dir / "manifest.json");
    bool listed = false;
    for (const auto& o : m.at("outputs")) listed |= o.at("path") == "graph.dot";
    EXPECT_TRUE(listed);
}

TEST(Cli, ThreadCapDoesNotChangeOutput) {
    const auto dir = scratch();
    const std::vector<std::string> args = {"quantum", "seesaw", "--catalog", "pr_box", "--dim", "2", "--restarts", "4", "--budget", "40"};
    auto with_out = [&](const std::string& d) {
        auto a = args;
        a.push_back("--out-dir");
        a.push_back((dir / d).string());
        return a;
    };
    ::setenv("EXWB_THREADS", "1", 1);
    ASSERT_EQ(invoke(with_out("one")).code, 0);
    ::setenv("EXWB_THREADS", "3", 1);
    ASSERT_EQ(invoke(with_out("three")).code, 0);
    ::unsetenv("EXWB_THREADS");
    EXPECT_EQ(slurp(dir / "one" / "result.json"), slurp(dir / "three" / "result.json"));
}

TEST(Cli, PaperSuiteSubsetAndFaultInjection) {
    const auto dir = scratch();
    const auto r = invoke({"paper-suite", "--only", "1,5,6", "--out-dir", (dir / "ok").string()});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "ok" / "criterion-05.json"));
    EXPECT_TRUE(load(dir / "ok" / "result.json").at("all_pass").get<bool>());

    // Tighter SDP tolerances still pass.
    EXPECT_EQ(invoke({"paper-suite", "--only", "5,6,8", "--tolerance-scale", "0.1", "--out-dir", (dir / "tight").string()}).code, 0);

    // A corrupted Wright entry (uniform tables, which satisfy the two-copy
    // principle) fails criterion 3 and leaves criterion 2 alone.
    Json override = Json::object();
    auto w = load(sample("wright_pentagon.json"));
    for (auto& [k, t] : w.at("tables").items()) {
        const double n = static_cast<double>(t.size());
        for (auto& x : t) x = 1.0 / n;
    }
    override["wright_pentagon"] = w;
    spit(dir / "override.json", override.dump());
    const auto f = invoke({"paper-suite", "--only", "2,3", "--catalog-override", (dir / "override.json").string(), "--out-dir",
                        (dir / "bad").string()});
    EXPECT_EQ(f.code, 2);
    const auto summary = load(dir / "bad" / "result.json").at("criteria");
    ASSERT_EQ(summary.size(), 2u);
    EXPECT_TRUE(summary[0].at("pass").get<bool>());
    EXPECT_FALSE(summary[1].at("pass").get<bool>());
}

TEST(JsonIo, RoundTrips) {
    for (const auto& name : catalog_names()) {
        const auto b = catalog_get(name);
        const auto j = to_json(b);
        EXPECT_EQ(to_json(behaviour_from_json(j)), j) << name;
        EXPECT_EQ(to_json(scenario_from_json(j.at("scenario"))), j.at("scenario")) << name;
        const auto g = exclusivity_graph(b.scenario());
        EXPECT_EQ(to_json(graph_from_json(to_json(g))), to_json(g)) << name;
    }
    const auto r = tsirelson_realization();
    const auto back = realization_from_json(to_json(r));
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_EQ(back.dimension, r.dimension);
    EXPECT_EQ(weights_from_json(Json::parse("[0.5, 0.25]")), (VertexWeights{0.5, 0.25}));
    EXPECT_EQ(weights_from_json(Json::parse("{\"weights\": [1]}")), (VertexWeights{1.0}));
}

TEST(JsonIo, SchemaErrors) {
    EXPECT_THROW(graph_from_json(Json::parse("{\"edges\": []}")), Error);
    EXPECT_THROW(graph_from_json(Json::parse("{\"n\": 2, \"edges\": [[0, 2]]}")), Error);
    EXPECT_THROW(graph_from_json(Json::parse("{\"n\": \"two\", \"edges\": []}")), Error);
    EXPECT_THROW(scenario_from_json(Json::parse("{\"measurements\": [{\"id\": \"a\"}]}")), Error);
    EXPECT_THROW(realization_from_json(Json::parse("{\"d\": 1, \"state\": [[1, 0]], \"projectors\": {\"a\": [[[1, 0]]]}}")), Error);
    EXPECT_THROW(realization_from_json(Json::parse("{\"d\": 1, \"state\": [[1, 0]], \"projectors\": {\"a:1\": [[[1, 0]]]}}")), Error);
}
