#pragma once

// The exwb command-line front end. run_cli parses argv-style arguments, prints
// the result JSON on stdout and writes result.json, certificate.json (when the
// verdict carries one), optional graph.dot and manifest.json into --out-dir.
//
// Exit codes: 0 success, 2 computed negative verdict, 1 usage, I/O, JSON or
// numerical failure. `replay --manifest m.json` re-runs a recorded command and
// compares every output byte for byte.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "exwb/suite.hpp"

namespace exwb {

inline constexpr const char* tool_version = "0.1.0";

namespace cli {

namespace fs = std::filesystem;

/// Operational failure: reported on stderr with exit code 1.
class Failure : public std::runtime_error {
public:
    explicit Failure(const std::string& what) : std::runtime_error(what) {}
};

inline std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Failure("SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure("cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << data)) throw Failure("cannot write '" + path.string() + "'");
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// Everything a command needs to record for its manifest.
struct Run {
    Json inputs = Json::array();
    Json seeds = Json::object();
    SdpOptions sdp;

    Json read_json(const std::string& path) {
        const auto text = read_file(path);
        inputs.push_back({{"path", path}, {"sha256", sha256_hex(text)}});
        try {
            return Json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw Failure(path + ": malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
        }
    }

    Json tolerances() const {
        return {{"ep", ep_tolerance},
                {"sdp_stopping", sdp.tolerance},
                {"sdp_feasibility", sdp.feasibility_tolerance},
                {"realization", realization_tolerance},
                {"theta_vectors", theta_vector_tolerance},
                {"realization_found_distance", realization_found_distance}};
    }
};

struct Outcome {
    Json result;
    std::optional<Json> certificate;
    std::optional<std::string> dot;
    std::vector<std::pair<std::string, std::string>> extra_files;  // name, contents
    std::string text;  // replaces the JSON on stdout when set
    int code = 0;
};

// Option values shared by every subcommand.
struct Options {
    std::string out_dir = "exwb-out";
    std::string graph, named, weights, behaviour, catalog, scenario, realization, manifest;
    std::string set, only, catalog_override;
    int copies = 1, power = 2, level = 2;
    std::size_t dim = 0, budget = seesaw_default_budget, restarts = seesaw_default_restarts, samples = 20;
    std::size_t chain_weightings = 200;
    std::uint64_t seed = 0;
    double tolerance_scale = 1.0;
    bool dot = false, subcontexts = false, no_context_words = false;
};

// ---- inputs ------------------------------------------------------------------

inline ExclusivityGraph named_graph(const std::string& name) {
    if (name == "chsh") return exclusivity_graph(chsh_scenario());
    if (name.size() >= 2 && std::isdigit(static_cast<unsigned char>(name[1]))) {
        std::size_t used = 0;
        std::size_t n = 0;
        try {
            n = std::stoul(name.substr(1), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == name.size() - 1) {
            if (name[0] == 'c' && n >= 3) return cycle_graph(n);
            if (name[0] == 'k') return complete_graph(n);
            if (name[0] == 'p') return path_graph(n);
            if (name[0] == 'e') return edgeless_graph(n);
        }
    }
    throw Failure("unknown named graph '" + name + "' (use chsh, cN, kN, pN or eN)");
}

inline bool has_behaviour(const Options& o) { return !o.behaviour.empty() || !o.catalog.empty(); }

inline Behaviour load_behaviour(Run& run, const Options& o) {
    if (!o.behaviour.empty() && !o.catalog.empty()) throw Failure("give either --behaviour or --catalog");
    if (!o.behaviour.empty()) return behaviour_from_json(run.read_json(o.behaviour));
    if (!o.catalog.empty()) return catalog_get(o.catalog);
    throw Failure("a behaviour is required (--behaviour FILE or --catalog NAME)");
}

inline Scenario load_scenario(Run& run, const Options& o) {
    if (!o.scenario.empty()) {
        if (has_behaviour(o)) throw Failure("give either --scenario or a behaviour");
        const auto j = run.read_json(o.scenario);
        // A behaviour file also names its scenario.
        return scenario_from_json(j.contains("scenario") ? j.at("scenario") : j);
    }
    if (has_behaviour(o)) return load_behaviour(run, o).scenario();
    throw Failure("a scenario is required (--scenario FILE, --behaviour FILE or --catalog NAME)");
}

inline ExclusivityGraph load_graph(Run& run, const Options& o) {
    if (!o.graph.empty() && !o.named.empty()) throw Failure("give either --graph or --named");
    if (!o.graph.empty()) return graph_from_json(run.read_json(o.graph));
    if (!o.named.empty()) return named_graph(o.named);
    throw Failure("a graph is required (--graph FILE or --named NAME)");
}

// Graph and weights from --graph/--named plus --weights, or from a behaviour.
inline std::pair<ExclusivityGraph, VertexWeights> load_weighted_graph(Run& run, const Options& o) {
    if (has_behaviour(o)) {
        if (!o.graph.empty() || !o.named.empty() || !o.weights.empty())
            throw Failure("a behaviour determines graph and weights; drop --graph/--named/--weights");
        const auto b = load_behaviour(run, o);
        auto g = exclusivity_graph(b.scenario());
        auto w = behaviour_to_weights(b, g);
        return {std::move(g), std::move(w)};
    }
    auto g = load_graph(run, o);
    if (o.weights.empty()) throw Failure("--weights FILE is required with a graph");
    auto w = weights_from_json(run.read_json(o.weights));
    validate_weights(g, w);
    return {std::move(g), std::move(w)};
}

inline Json contexts_json(const Scenario& s, const std::vector<Context>& cs) {
    Json out = Json::array();
    for (const auto& c : cs) {
        Json ids = Json::array();
        for (auto m : c.members) ids.push_back(s.measurement(m).id);
        out.push_back(std::move(ids));
    }
    return out;
}

inline Json graph_with(const ExclusivityGraph& g, Json extra) {
    Json j = to_json(g);
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

inline int theta_code(SdpStatus s) {
    return s == SdpStatus::Infeasible ? 2 : s == SdpStatus::Inconclusive ? 1 : 0;
}

inline std::optional<Json> certificate_of(const Json& verdict) {
    if (!verdict.contains("certificate")) return std::nullopt;
    const auto& c = verdict.at("certificate");
    if (c.contains("type") && c.at("type") == to_string(CertificateKind::None)) return std::nullopt;
    return c;
}

// ---- subcommands -------------------------------------------------------------

inline Outcome scenario_catalog(Run&, const Options& o) {
    Outcome out;
    if (o.catalog.empty()) out.result = {{"catalog", catalog_names()}};
    else out.result = to_json(catalog_get(o.catalog));
    return out;
}

inline Outcome scenario_check(Run& run, const Options& o) {
    const auto b = load_behaviour(run, o);
    const auto norm = check_normalization(b);
    const auto nd = check_nondisturbance(b);
    Outcome out;
    Json j;
    j["normalization"] = {{"pass", norm.pass},
                          {"deviation", norm.deviation},
                          {"worst_context", b.scenario().key(b.scenario().maximal_contexts().at(norm.worst_context))}};
    j["nondisturbance"] = {{"pass", nd.pass}, {"pairs_checked", nd.pairs_checked}, {"max_mismatch", nd.max_mismatch}};
    if (nd.witness) {
        const auto& s = b.scenario();
        j["nondisturbance"]["witness"] = {{"shared", s.key(nd.witness->shared)},
                                          {"outcomes", nd.witness->outcomes},
                                          {"first", s.key(s.maximal_contexts().at(nd.witness->first))},
                                          {"second", s.key(s.maximal_contexts().at(nd.witness->second))},
                                          {"mismatch", nd.witness->mismatch}};
    }
    j["pass"] = norm.pass && nd.pass;
    out.code = norm.pass && nd.pass ? 0 : 2;
    out.result = std::move(j);
    return out;
}

inline Outcome scenario_contexts(Run& run, const Options& o) {
    const auto s = load_scenario(run, o);
    Outcome out;
    out.result = {{"maximal", contexts_json(s, s.maximal_contexts())}, {"all", contexts_json(s, enumerate_contexts(s, false))}};
    return out;
}

inline Outcome exgraph_build(Run& run, const Options& o) {
    Outcome out;
    if (!o.scenario.empty()) {
        const auto g = exclusivity_graph(load_scenario(run, o), o.subcontexts);
        out.result = to_json(g);
        if (o.dot) out.dot = to_dot(g);
        return out;
    }
    const auto b = load_behaviour(run, o);
    const auto g = exclusivity_graph(b.scenario(), o.subcontexts);
    out.result = graph_with(g, {{"weights", behaviour_to_weights(b, g)}});
    if (o.dot) out.dot = to_dot(g);
    return out;
}

inline Outcome exgraph_h_embed(Run& run, const Options& o) {
    const auto h = h_embedding(load_graph(run, o));
    const auto sc = is_self_complementary(h);
    const bool ok = sc.self_complementary && is_isomorphism(h, complement(h), sc.witness);
    Outcome out;
    out.result = graph_with(h, {{"self_complementary", ok}, {"witness", sc.witness}});
    if (o.dot) out.dot = to_dot(h, "H");
    out.code = ok ? 0 : 2;
    return out;
}

inline Outcome exgraph_or_power(Run& run, const Options& o) {
    const auto g = or_power(load_graph(run, o), o.power);
    Outcome out;
    out.result = to_json(g);
    if (o.dot) out.dot = to_dot(g);
    return out;
}

inline Outcome exgraph_complement(Run& run, const Options& o) {
    const auto g = complement(load_graph(run, o));
    Outcome out;
    out.result = to_json(g);
    if (o.dot) out.dot = to_dot(g);
    return out;
}

inline Outcome exgraph_info(Run& run, const Options& o) {
    const auto g = load_graph(run, o);
    Json j = {{"n", g.size()},
              {"edges", g.edge_count()},
              {"clique_number", clique_number(g)},
              {"independence_number", independence_number(g)}};
    if (g.size() <= isomorphism_vertex_cap) {
        const auto sc = is_self_complementary(g);
        j["self_complementary"] = sc.self_complementary;
        if (sc.self_complementary) j["witness"] = sc.witness;
        j["vertex_transitive"] = is_vertex_transitive(g);
    }
    Outcome out;
    out.result = std::move(j);
    if (o.dot) out.dot = to_dot(g);
    return out;
}

inline Outcome membership(Run& run, const Options& o) {
    Outcome out;
    if (o.copies < 1) throw Failure("--copies must be at least 1");
    if (o.set == "local") {
        const auto v = in_local_polytope(load_behaviour(run, o));
        out.result = to_json(v);
        out.certificate = certificate_of(out.result);
        out.code = v.member ? 0 : 2;
        return out;
    }
    const auto [g, w] = load_weighted_graph(run, o);
    if (o.set == "theta") {
        const auto v = in_theta_body(g, w, run.sdp);
        out.result = to_json(v);
        out.certificate = certificate_of(out.result);
        out.code = theta_code(v.status);
        return out;
    }
    MembershipVerdict v;
    if (o.set == "stab") v = in_stab(g, w);
    else if (o.set == "qstab" || o.set == "en") v = o.copies == 1 ? in_qstab(g, w) : in_E_n(g, w, o.copies);
    else throw Failure("unknown --set '" + o.set + "' (stab, qstab, en, local, theta)");
    out.result = to_json(v);
    out.certificate = certificate_of(out.result);
    out.code = v.member ? 0 : 2;
    return out;
}

inline Outcome theta_member(Run& run, const Options& o) {
    const auto [g, w] = load_weighted_graph(run, o);
    const auto v = in_theta_body(g, w, run.sdp);
    Outcome out;
    out.result = to_json(v);
    out.certificate = certificate_of(out.result);
    out.code = theta_code(v.status);
    return out;
}

inline Outcome theta_max(Run& run, const Options& o) {
    const auto [g, c] = load_weighted_graph(run, o);
    const auto m = max_linear_over_theta(g, c, run.sdp);
    Outcome out;
    out.result = {{"status", to_string(m.status)}, {"value", m.value}, {"upper_bound", m.upper_bound}, {"point", m.point}};
    out.code = m.status == SdpStatus::Optimal ? 0 : 1;
    return out;
}

inline Outcome theta_sandwich(Run& run, const Options& o) {
    const auto g = load_graph(run, o);
    const auto rep = sandwich_report(g, o.copies, 1e-9, default_vertex_cap, run.sdp);
    Json rows = Json::array();
    for (const auto& r : rep.rows) rows.push_back({{"n", r.n}, {"clique_number", r.clique_number}, {"upper", r.upper}});
    Outcome out;
    out.result = {{"rows", rows},
                  {"theta_uniform", rep.theta_uniform},
                  {"lower", rep.lower},
                  {"independence_number", rep.independence_number},
                  {"self_complementary", rep.self_complementary},
                  {"chain_holds", rep.chain_holds},
                  {"upper_nonincreasing", rep.upper_nonincreasing},
                  {"theta_status", to_string(rep.theta_status)}};
    out.code = rep.theta_status != SdpStatus::Optimal ? 1 : rep.chain_holds ? 0 : 2;
    return out;
}

inline Outcome theta_duality(Run& run, const Options& o) {
    const auto g = load_graph(run, o);
    run.seeds["seed"] = o.seed;
    const auto rep = antiblocker_duality_check(g, o.samples, o.seed, 1e-4, run.sdp);
    Json samples = Json::array();
    for (const auto& s : rep.samples)
        samples.push_back({{"q", s.q}, {"max_value", s.max_value}, {"within", s.within}, {"status", to_string(s.status)}});
    Outcome out;
    out.result = {{"self_complement_map", rep.self_complement_map}, {"all_within", rep.all_within}, {"samples", samples}};
    out.code = rep.all_within ? 0 : 2;
    return out;
}

inline Realization load_realization(Run& run, const Options& o) {
    if (o.realization.empty()) throw Failure("--realization FILE is required");
    return realization_from_json(run.read_json(o.realization));
}

inline Outcome quantum_validate(Run& run, const Options& o) {
    const auto r = load_realization(run, o);
    const auto rep = validate_realization(r, load_scenario(run, o));
    Outcome out;
    out.result = to_json(rep);
    out.code = rep.pass ? 0 : 2;
    return out;
}

inline Outcome quantum_behaviour(Run& run, const Options& o) {
    const auto r = load_realization(run, o);
    Outcome out;
    out.result = to_json(behaviour_from_realization(r, load_scenario(run, o)));
    return out;
}

inline Outcome quantum_ideal(Run& run, const Options& o) {
    const auto r = load_realization(run, o);
    const auto rep = check_ideal(r, load_scenario(run, o));
    Outcome out;
    out.result = to_json(rep);
    out.code = rep.pass ? 0 : 2;
    return out;
}

inline Outcome quantum_tsirelson(Run&, const Options&) {
    const auto r = tsirelson_realization();
    const auto b = behaviour_from_realization(r, chsh_scenario());
    Outcome out;
    out.result = {{"realization", to_json(r)}, {"behaviour", to_json(b)}, {"chsh_value", chsh_value(b)}};
    return out;
}

inline SeesawOptions seesaw_options(Run& run, const Options& o) {
    SeesawOptions opt;
    opt.budget = o.budget;
    opt.restarts = o.restarts;
    opt.seed = o.seed;
    run.seeds["seed"] = o.seed;
    return opt;
}

inline Outcome quantum_seesaw(Run& run, const Options& o) {
    const auto b = load_behaviour(run, o);
    const auto fit = seesaw_fit(b.scenario(), b, o.dim == 0 ? 2 : o.dim, seesaw_options(run, o));
    Outcome out;
    out.result = to_json(fit);
    return out;
}

inline Outcome quantum_npa(Run& run, const Options& o) {
    const auto res = npa_infeasibility(load_behaviour(run, o), o.level, !o.no_context_words, run.sdp);
    Outcome out;
    out.result = to_json(res);
    out.certificate = certificate_of(out.result);
    out.code = res.status == SdpStatus::Infeasible ? 2 : res.status == SdpStatus::Inconclusive ? 1 : 0;
    return out;
}

inline Outcome quantum_verdict(Run& run, const Options& o) {
    ConstraintCOptions opt;
    opt.d_max = o.dim == 0 ? opt.d_max : o.dim;
    opt.level = o.level;
    opt.seesaw = seesaw_options(run, o);
    opt.sdp = run.sdp;
    const auto rep = constraintC_verdict(load_behaviour(run, o), opt);
    Outcome out;
    out.result = to_json(rep);
    if (rep.verdict == QuantumVerdict::NonQuantum) out.certificate = out.result["relaxation"]["certificate"];
    else if (rep.verdict == QuantumVerdict::Quantum) out.certificate = out.result["seesaw"]["realization"];
    out.code = rep.verdict == QuantumVerdict::NonQuantum ? 2 : 0;
    return out;
}

inline std::vector<int> parse_only(const std::string& only) {
    std::vector<int> ids;
    if (only.empty()) {
        for (int i = 1; i <= static_cast<int>(criteria().size()); ++i) ids.push_back(i);
        return ids;
    }
    std::stringstream ss(only);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const int id = std::stoi(tok, &used);
            if (used != tok.size() || id < 1 || id > static_cast<int>(criteria().size())) throw Failure("");
            ids.push_back(id);
        } catch (const std::exception&) {
            throw Failure("--only expects criterion numbers 1-" + std::to_string(criteria().size()) + ", got '" + tok + "'");
        }
    }
    return ids;
}

inline Outcome paper_suite(Run& run, const Options& o) {
    SuiteConfig cfg;
    cfg.tolerance_scale = o.tolerance_scale;
    cfg.seed = o.seed;
    cfg.chain_weightings = o.chain_weightings;
    run.seeds["seed"] = o.seed;
    if (!o.catalog_override.empty()) {
        const auto j = run.read_json(o.catalog_override);
        if (!j.is_object()) throw Failure(o.catalog_override + ": expected an object of name -> behaviour");
        for (const auto& [name, b] : j.items()) cfg.catalog_override.emplace(name, behaviour_from_json(b));
    }
    Outcome out;
    Json summary = Json::array();
    std::ostringstream table;
    bool all = true;
    for (int id : parse_only(o.only)) {
        const auto r = run_criterion(id, cfg);
        char name[32];
        std::snprintf(name, sizeof name, "criterion-%02d.json", id);
        out.extra_files.emplace_back(name, dump(to_json(r)));
        summary.push_back({{"criterion", id}, {"title", r.title}, {"pass", r.pass()}, {"within_time", r.within_time}, {"artifact", name}});
        char line[160];
        std::snprintf(line, sizeof line, "%-4d %-34s %-5s %9.3fs / %.0fs\n", id, r.title.c_str(), r.pass() ? "PASS" : "FAIL",
                      r.seconds, r.limit_seconds);
        table << line;
        for (const auto& c : r.checks)
            if (!c.pass) table << "       failed: " << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
        all &= r.pass();
    }
    out.result = {{"criteria", summary}, {"all_pass", all}};
    out.text = table.str();
    out.code = all ? 0 : 2;
    return out;
}

// ---- dispatch ----------------------------------------------------------------

using Handler = Outcome (*)(Run&, const Options&);

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

inline Outcome replay(const Options& o, std::ostream& err) {
    if (o.manifest.empty()) throw Failure("--manifest FILE is required");
    Run scratch;
    const auto m = scratch.read_json(o.manifest);
    if (!m.contains("command") || !m.contains("outputs") || !m.contains("working_directory"))
        throw Failure(o.manifest + ": not a run manifest");
    if (m.value("version", "") != tool_version)
        throw Failure("manifest was written by version " + m.value("version", "?") + ", this is " + tool_version);
    const fs::path cwd = m.at("working_directory").get<std::string>();
    // Default target: a "replay" directory next to the manifest.
    const bool default_dir = o.out_dir == Options{}.out_dir;
    const fs::path target = fs::absolute(default_dir ? fs::path(o.manifest).parent_path() / "replay" : fs::path(o.out_dir));
    const fs::path here = fs::current_path();
    fs::current_path(cwd);
    int code = 0;
    std::ostringstream sink;
    try {
        for (const auto& in : m.at("inputs"))
            if (sha256_hex(read_file(in.at("path").get<std::string>())) != in.at("sha256").get<std::string>())
                throw Failure("input '" + in.at("path").get<std::string>() + "' changed since the manifest was written");
        auto args = m.at("command").get<std::vector<std::string>>();
        args.push_back("--out-dir");
        args.push_back(target.string());
        code = run_cli(args, sink, err);
    } catch (...) {
        fs::current_path(here);
        throw;
    }
    fs::current_path(here);
    Outcome res;
    Json files = Json::array();
    bool same = code == m.value("exit_code", 0);
    for (const auto& f : m.at("outputs")) {
        const auto name = f.at("path").get<std::string>();
        const auto path = target / name;
        const auto actual = fs::exists(path) ? sha256_hex(read_file(path.string())) : std::string("missing");
        const bool eq = actual == f.at("sha256").get<std::string>();
        same &= eq;
        files.push_back({{"path", name}, {"expected", f.at("sha256")}, {"actual", actual}, {"identical", eq}});
    }
    res.result = {{"identical", same}, {"exit_code", code}, {"replay_dir", target.string()}, {"outputs", files}};
    res.code = same ? 0 : 2;
    return res;
}

inline int finish(const Options& o, const Run& run, const std::vector<std::string>& command, Outcome res, std::ostream& out) {
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("result.json", dump(res.result));
    if (res.certificate) files.emplace_back("certificate.json", dump(*res.certificate));
    if (res.dot) files.emplace_back("graph.dot", *res.dot);
    for (auto& f : res.extra_files) files.push_back(std::move(f));
    Json outputs = Json::array();
    for (const auto& [name, data] : files) {
        write_file(dir / name, data);
        outputs.push_back({{"path", name}, {"sha256", sha256_hex(data)}});
    }
    const Json manifest = {{"tool", "exwb"},
                           {"version", tool_version},
                           {"command", command},
                           {"working_directory", fs::current_path().string()},
                           {"inputs", run.inputs},
                           {"seeds", run.seeds},
                           {"tolerances", run.tolerances()},
                           {"exit_code", res.code},
                           {"outputs", outputs}};
    write_file(dir / "manifest.json", dump(manifest));
    out << (res.text.empty() ? dump(res.result) : res.text);
    return res.code;
}

/// args excludes the program name. Returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exclusivity-graph membership tools: classical, quantum and exclusivity-principle sets with certificates.",
                 "exwb"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--out-dir", o.out_dir, "Directory for result, certificate and manifest files")->capture_default_str();

    std::vector<std::pair<CLI::App*, Handler>> leaves;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, Handler h) {
        auto* s = parent->add_subcommand(name, help);
        leaves.emplace_back(s, h);
        return s;
    };
    auto graph_opts = [&](CLI::App* s) {
        s->add_option("--graph", o.graph, "Graph JSON file");
        s->add_option("--named", o.named, "Named graph: chsh, cN, kN, pN, eN");
    };
    auto behaviour_opts = [&](CLI::App* s) {
        s->add_option("--behaviour", o.behaviour, "Behaviour JSON file");
        s->add_option("--catalog", o.catalog, "Catalog behaviour name");
    };
    auto weighted_opts = [&](CLI::App* s) {
        graph_opts(s);
        s->add_option("--weights", o.weights, "Weights JSON file");
        behaviour_opts(s);
    };
    auto sdp_opts = [&](CLI::App* s) { s->add_option("--tolerance-scale", o.tolerance_scale, "Scale SDP tolerances"); };
    auto dot_opt = [&](CLI::App* s) { s->add_flag("--dot", o.dot, "Also write graph.dot"); };
    auto seesaw_opts = [&](CLI::App* s) {
        s->add_option("--dim", o.dim, "Hilbert-space dimension (seesaw) or largest dimension tried (verdict)");
        s->add_option("--seed", o.seed, "Random seed")->capture_default_str();
        s->add_option("--budget", o.budget, "Sweeps per restart")->capture_default_str();
        s->add_option("--restarts", o.restarts, "Random restarts")->capture_default_str();
    };

    auto* sc = app.add_subcommand("scenario", "Scenarios and behaviours")->require_subcommand(1);
    leaf(sc, "catalog", "List catalog behaviours, or print one with --catalog", scenario_catalog)
        ->add_option("--catalog", o.catalog, "Catalog behaviour name");
    behaviour_opts(leaf(sc, "check", "Check normalization and non-disturbance", scenario_check));
    auto* ctx = leaf(sc, "contexts", "List the contexts of a scenario", scenario_contexts);
    ctx->add_option("--scenario", o.scenario, "Scenario JSON file");
    behaviour_opts(ctx);

    auto* eg = app.add_subcommand("exgraph", "Exclusivity graphs")->require_subcommand(1);
    auto* build = leaf(eg, "build", "Exclusivity graph of a scenario or behaviour (with weights)", exgraph_build);
    build->add_option("--scenario", o.scenario, "Scenario JSON file");
    behaviour_opts(build);
    build->add_flag("--subcontexts", o.subcontexts, "Include events on non-maximal contexts");
    dot_opt(build);
    for (auto [name, help, h] : {std::tuple{"h-embed", "Self-complementary embedding H(G)", Handler(exgraph_h_embed)},
                                 std::tuple{"complement", "Complement graph", Handler(exgraph_complement)},
                                 std::tuple{"info", "Clique and independence numbers, self-complementarity", Handler(exgraph_info)}}) {
        auto* s = leaf(eg, name, help, h);
        graph_opts(s);
        dot_opt(s);
    }
    auto* orp = leaf(eg, "or-power", "OR (co-normal) power of a graph", exgraph_or_power);
    graph_opts(orp);
    orp->add_option("--power", o.power, "Number of copies")->capture_default_str();
    dot_opt(orp);

    auto* mem = app.add_subcommand("membership", "Membership in STAB, QSTAB, E^n, the local polytope or TH");
    leaves.emplace_back(mem, membership);
    mem->add_option("--set", o.set, "stab | qstab | en | local | theta")->required();
    weighted_opts(mem);
    mem->add_option("--copies", o.copies, "Copies n for the exclusivity set E^n")->capture_default_str();
    sdp_opts(mem);

    auto* th = app.add_subcommand("theta", "Theta body")->require_subcommand(1);
    for (auto [name, help, h] : {std::tuple{"member", "Membership in TH(G) with vectors or a dual certificate", Handler(theta_member)},
                                 std::tuple{"max", "Maximize a nonnegative linear function over TH(G)", Handler(theta_max)}}) {
        auto* s = leaf(th, name, help, h);
        weighted_opts(s);
        sdp_opts(s);
    }
    auto* sw = leaf(th, "sandwich", "Uniform-ray bounds from STAB, TH and OR powers", theta_sandwich);
    graph_opts(sw);
    sw->add_option("--copies", o.copies, "Largest OR power")->capture_default_str();
    sdp_opts(sw);
    auto* du = leaf(th, "duality", "Sampled check of abl(TH(G)) = TH(complement G)", theta_duality);
    graph_opts(du);
    du->add_option("--samples", o.samples, "Random boundary points")->capture_default_str();
    du->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sdp_opts(du);

    auto* qu = app.add_subcommand("quantum", "Projective quantum realizations")->require_subcommand(1);
    for (auto [name, help, h] : {std::tuple{"validate", "Check projector and state residuals", Handler(quantum_validate)},
                                 std::tuple{"behaviour", "Behaviour generated by a realization", Handler(quantum_behaviour)},
                                 std::tuple{"ideal", "Repeatability and non-disturbance, with coarse-grainings", Handler(quantum_ideal)}}) {
        auto* s = leaf(qu, name, help, h);
        s->add_option("--realization", o.realization, "Realization JSON file");
        s->add_option("--scenario", o.scenario, "Scenario JSON file");
        behaviour_opts(s);
    }
    leaf(qu, "tsirelson", "The standard two-qubit realization of the Tsirelson behaviour", quantum_tsirelson);
    auto* ss = leaf(qu, "seesaw", "See-saw search for a realization in dimension --dim", quantum_seesaw);
    behaviour_opts(ss);
    seesaw_opts(ss);
    auto* np = leaf(qu, "npa", "Moment-matrix relaxation at --level", quantum_npa);
    behaviour_opts(np);
    np->add_option("--level", o.level, "Word length 1 or 2")->capture_default_str();
    np->add_flag("--no-context-words", o.no_context_words, "Do not add context products as rows");
    sdp_opts(np);
    auto* vd = leaf(qu, "verdict", "Realization search up to --dim plus relaxation at --level", quantum_verdict);
    behaviour_opts(vd);
    seesaw_opts(vd);
    vd->add_option("--level", o.level, "Word length 1 or 2")->capture_default_str();
    sdp_opts(vd);

    auto* ps = app.add_subcommand("paper-suite", "Run the acceptance criteria and write their artifacts");
    leaves.emplace_back(ps, paper_suite);
    ps->add_option("--only", o.only, "Comma-separated criterion numbers");
    ps->add_option("--tolerance-scale", o.tolerance_scale, "Scale SDP tolerances")->capture_default_str();
    ps->add_option("--catalog-override", o.catalog_override, "JSON object of name -> behaviour replacing catalog entries");
    ps->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    ps->add_option("--chain-weightings", o.chain_weightings, "Random weightings in the chain-inclusion suite")
        ->capture_default_str();

    auto* rp = app.add_subcommand("replay", "Re-run a manifest and compare outputs byte for byte");
    rp->add_option("--manifest", o.manifest, "manifest.json of an earlier run")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "exwb: " << e.what() << "\n";
        return 1;
    }

    try {
        if (rp->parsed()) {
            // Replay reports on stdout only; the re-run itself wrote the files.
            const auto res = replay(o, err);
            out << dump(res.result);
            return res.code;
        }
        Handler handler = nullptr;
        for (auto [s, h] : leaves)
            if (s->parsed()) handler = h;
        if (!handler) throw Failure("missing subcommand");
        Run run;
        run.sdp.tolerance *= o.tolerance_scale;
        run.sdp.feasibility_tolerance *= o.tolerance_scale;
        // The recorded command omits --out-dir; replay supplies its own.
        std::vector<std::string> command;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--out-dir") {
                ++i;
                continue;
            }
            if (args[i].rfind("--out-dir=", 0) == 0) continue;
            command.push_back(args[i]);
        }
        return finish(o, run, command, handler(run, o), out);
    } catch (const std::exception& e) {
        err << "exwb: " << e.what() << "\n";
    }
    return 1;
}

} // namespace cli

using cli::run_cli;

} // namespace exwb
