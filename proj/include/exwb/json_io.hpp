#pragma once

// JSON forms of scenarios, behaviours, graphs, weights, realizations and the
// verdicts and certificates produced by the library.
//
//   scenario     {measurements:[{id,outcomes}], compatible:[[id,id]], contexts?:[[id,...]]}
//   behaviour    {scenario, tables:{"id,id": [p, ...]}}
//   graph        {n, edges:[[i,j]], labels?:[string]}
//   weights      [w, ...] or {weights:[w, ...]}
//   realization  {d, state:[[re,im]], projectors:{"id:outcome": [[[re,im], ...], ...]}}
//
// Doubles are written with round-trip precision, so equal inputs give equal bytes.

#include <json.hpp>
#include <string>
#include <vector>

#include "exwb/graph.hpp"
#include "exwb/polytope.hpp"
#include "exwb/quantum.hpp"
#include "exwb/scenario.hpp"
#include "exwb/thetabody.hpp"

namespace exwb {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing field '" + key + "'");
    return j.at(key);
}

template <class T>
T get_as(const Json& j, const std::string& where) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(where + ": " + e.what());
    }
}

inline Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

inline Json complex_matrix_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Complex complex_from(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw Error(where + ": complex numbers are [re, im] pairs");
    return {get_as<double>(j[0], where), get_as<double>(j[1], where)};
}

inline CMatrix complex_matrix_from(const Json& j, std::size_t d, const std::string& where) {
    if (!j.is_array() || j.size() != d) throw Error(where + ": expected " + std::to_string(d) + " rows");
    CMatrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < d; ++r) {
        if (!j[r].is_array() || j[r].size() != d) throw Error(where + ": row " + std::to_string(r) + " has the wrong length");
        for (std::size_t c = 0; c < d; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = complex_from(j[r][c], where);
    }
    return m;
}

} // namespace detail

// ---- scenarios and behaviours ---------------------------------------------

inline Json to_json(const Scenario& s) {
    Json j;
    j["measurements"] = Json::array();
    for (const auto& m : s.measurements()) j["measurements"].push_back({{"id", m.id}, {"outcomes", m.outcomes}});
    j["compatible"] = Json::array();
    for (const auto& [a, b] : s.compatible_pairs()) j["compatible"].push_back({a, b});
    if (s.has_explicit_contexts()) {
        j["contexts"] = Json::array();
        for (const auto& c : s.maximal_contexts()) {
            Json ids = Json::array();
            for (auto m : c.members) ids.push_back(s.measurement(m).id);
            j["contexts"].push_back(std::move(ids));
        }
    }
    return j;
}

inline Scenario scenario_from_json(const Json& j) {
    const std::string where = "scenario";
    std::vector<Measurement> ms;
    const auto& jm = detail::field(j, "measurements", where);
    if (!jm.is_array()) throw Error("scenario: 'measurements' must be an array");
    for (const auto& m : jm)
        ms.push_back({detail::get_as<std::string>(detail::field(m, "id", where), where),
                      detail::get_as<int>(detail::field(m, "outcomes", where), where)});
    std::vector<std::pair<std::string, std::string>> comp;
    if (j.contains("compatible"))
        for (const auto& p : j.at("compatible")) {
            if (!p.is_array() || p.size() != 2) throw Error("scenario: compatible entries are [id, id] pairs");
            comp.emplace_back(detail::get_as<std::string>(p[0], where), detail::get_as<std::string>(p[1], where));
        }
    std::optional<std::vector<std::vector<std::string>>> contexts;
    if (j.contains("contexts")) contexts = detail::get_as<std::vector<std::vector<std::string>>>(j.at("contexts"), where);
    return Scenario(std::move(ms), comp, std::move(contexts));
}

inline Json to_json(const Behaviour& b) {
    Json j;
    j["scenario"] = to_json(b.scenario());
    j["tables"] = Json::object();
    const auto& s = b.scenario();
    for (std::size_t k = 0; k < s.maximal_contexts().size(); ++k) j["tables"][s.key(s.maximal_contexts()[k])] = b.table(k);
    return j;
}

inline Behaviour behaviour_from_json(const Json& j) {
    const std::string where = "behaviour";
    auto s = scenario_from_json(detail::field(j, "scenario", where));
    std::map<std::string, ProbabilityTable> keyed;
    const auto& t = detail::field(j, "tables", where);
    if (!t.is_object()) throw Error("behaviour: 'tables' must be an object");
    for (const auto& [key, v] : t.items()) {
        // Accept keys in any member order; store under the canonical key.
        const auto c = s.context_from_key(key);
        keyed[s.key(c)] = detail::get_as<std::vector<double>>(v, where);
    }
    return Behaviour::from_keyed(std::move(s), keyed);
}

// ---- graphs and weights ----------------------------------------------------

inline Json to_json(const ExclusivityGraph& g) {
    Json j;
    j["n"] = g.size();
    j["edges"] = Json::array();
    for (auto [a, b] : g.edges()) j["edges"].push_back({a, b});
    if (g.has_labels()) {
        j["labels"] = Json::array();
        for (const auto& l : g.labels()) j["labels"].push_back(l.tag);
    }
    return j;
}

/// Labels come back as plain tags; event labels are rebuilt by exclusivity_graph.
inline ExclusivityGraph graph_from_json(const Json& j) {
    const std::string where = "graph";
    const auto n = detail::get_as<std::size_t>(detail::field(j, "n", where), where);
    ExclusivityGraph g(n);
    for (const auto& e : detail::field(j, "edges", where)) {
        if (!e.is_array() || e.size() != 2) throw Error("graph: edges are [i, j] pairs");
        g.add_edge(detail::get_as<std::size_t>(e[0], where), detail::get_as<std::size_t>(e[1], where));
    }
    if (j.contains("labels")) {
        std::vector<VertexLabel> labels;
        for (const auto& l : j.at("labels")) labels.push_back({std::nullopt, detail::get_as<std::string>(l, where)});
        g.set_labels(std::move(labels));
    }
    return g;
}

inline VertexWeights weights_from_json(const Json& j) {
    const Json& arr = j.is_object() ? detail::field(j, "weights", "weights") : j;
    return detail::get_as<std::vector<double>>(arr, "weights");
}

// ---- realizations ------------------------------------------------------------

inline Json to_json(const Realization& r) {
    Json j;
    j["d"] = r.dimension;
    j["state"] = Json::array();
    for (Eigen::Index i = 0; i < r.state.size(); ++i) j["state"].push_back({r.state(i).real(), r.state(i).imag()});
    j["projectors"] = Json::object();
    for (const auto& [id, es] : r.projectors)
        for (std::size_t a = 0; a < es.size(); ++a) j["projectors"][id + ":" + std::to_string(a)] = detail::complex_matrix_json(es[a]);
    return j;
}

inline Realization realization_from_json(const Json& j) {
    const std::string where = "realization";
    Realization r;
    r.dimension = detail::get_as<std::size_t>(detail::field(j, "d", where), where);
    if (r.dimension == 0) throw Error("realization: d must be positive");
    const auto& st = detail::field(j, "state", where);
    if (!st.is_array()) throw Error("realization: 'state' must be an array");
    r.state = CVector(static_cast<Eigen::Index>(st.size()));
    for (std::size_t i = 0; i < st.size(); ++i) r.state(static_cast<Eigen::Index>(i)) = detail::complex_from(st[i], where);
    std::map<std::string, std::map<int, CMatrix>> found;
    for (const auto& [key, m] : detail::field(j, "projectors", where).items()) {
        const auto colon = key.rfind(':');
        if (colon == std::string::npos || colon == 0) throw Error("realization: projector keys are \"id:outcome\"");
        int outcome = -1;
        try {
            std::size_t used = 0;
            outcome = std::stoi(key.substr(colon + 1), &used);
            if (used != key.size() - colon - 1) outcome = -1;
        } catch (const std::exception&) {
        }
        if (outcome < 0) throw Error("realization: bad outcome in key '" + key + "'");
        found[key.substr(0, colon)][outcome] = detail::complex_matrix_from(m, r.dimension, where + " '" + key + "'");
    }
    for (auto& [id, per] : found) {
        int expect = 0;
        for (auto& [o, m] : per) {
            if (o != expect++) throw Error("realization: outcomes of '" + id + "' must be numbered 0, 1, ...");
            r.projectors[id].push_back(std::move(m));
        }
    }
    return r;
}

// ---- verdicts ----------------------------------------------------------------

inline Json to_json(const MembershipVerdict& v) {
    Json j;
    j["set"] = v.set;
    j["copies"] = v.copies;
    j["member"] = v.member;
    j["value"] = v.value;
    j["value_exact"] = v.value_exact;
    Json cert;
    cert["type"] = to_string(v.kind);
    switch (v.kind) {
    case CertificateKind::CliqueViolation:
        cert["vertices"] = v.clique.vertices;
        cert["weight_sum"] = v.clique.weight_sum;
        cert["coordinates"] = v.clique_coordinates;
        break;
    case CertificateKind::Mixture:
        cert["terms"] = Json::array();
        for (const auto& t : v.mixture) cert["terms"].push_back({{"support", t.support}, {"coefficient", t.coefficient}});
        break;
    case CertificateKind::SeparatingInequality:
        if (v.inequality)
            cert["inequality"] = {{"name", v.inequality->name},
                                  {"coefficients", v.inequality->coefficients},
                                  {"bound", v.inequality->bound},
                                  {"value", v.inequality->value}};
        break;
    case CertificateKind::None: break;
    }
    j["certificate"] = std::move(cert);
    return j;
}

inline Json to_json(const ThetaResiduals& r) {
    return {{"gram_min_eigenvalue", r.gram_min_eigenvalue}, {"gram_structure", r.gram_structure},
            {"handle_norm", r.handle_norm},                 {"vector_norm", r.vector_norm},
            {"orthogonality", r.orthogonality},             {"weights", r.weights}};
}

inline Json to_json(const ThetaVerdict& v) {
    Json j;
    j["status"] = to_string(v.status);
    j["member"] = v.member();
    j["min_eigenvalue"] = v.min_eigenvalue;
    j["iterations"] = v.iterations;
    if (v.certificate) {
        Json vecs = Json::array();
        for (const auto& x : v.certificate->vectors) vecs.push_back(detail::vector_json(x));
        j["certificate"] = {{"type", "theta-vectors"},
                            {"gram", detail::matrix_json(v.certificate->gram)},
                            {"handle", detail::vector_json(v.certificate->handle)},
                            {"vectors", std::move(vecs)}};
    }
    if (v.residuals) j["residuals"] = to_json(*v.residuals);
    if (!v.dual.empty())
        j["certificate"] = {{"type", "theta-dual"}, {"matrix", detail::matrix_json(v.dual.front())}, {"margin", v.dual_margin}};
    return j;
}

inline Json to_json(const RealizationReport& r) {
    return {{"pass", r.pass},
            {"state_norm", r.state_norm},
            {"hermiticity", r.hermiticity},
            {"idempotence", r.idempotence},
            {"orthogonality", r.orthogonality},
            {"completeness", r.completeness},
            {"commutation", r.commutation}};
}

inline Json to_json(const IdealReport& r) {
    return {{"pass", r.pass},
            {"repeatability", r.repeatability},
            {"nondisturbance", r.nondisturbance},
            {"coarse_grainings", r.coarse_grainings},
            {"coarse_repeatability", r.coarse_repeatability},
            {"coarse_nondisturbance", r.coarse_nondisturbance},
            {"worst", r.worst}};
}

inline Json to_json(const SeesawResult& r) {
    return {{"distance", r.distance},       {"restart", r.restart},
            {"sweeps", r.sweeps},           {"local_dimensions", r.local_dimensions},
            {"parties", r.parties},         {"trace", r.trace},
            {"realization", to_json(r.realization)}};
}

inline Json to_json(const NpaResult& r) {
    Json j;
    j["status"] = to_string(r.status);
    j["level"] = r.relaxation.level;
    j["context_words"] = r.relaxation.context_words;
    j["words"] = r.relaxation.words;
    j["free_moments"] = r.relaxation.variables;
    j["min_eigenvalue"] = r.min_eigenvalue;
    j["moment_matrix"] = detail::matrix_json(r.moment_matrix);
    if (r.status == SdpStatus::Infeasible)
        j["certificate"] = {{"type", "moment-dual"},
                            {"matrix", detail::matrix_json(r.certificate)},
                            {"margin", r.certificate_margin}};
    return j;
}

inline Json to_json(const ConstraintCReport& r) {
    return {{"verdict", to_string(r.verdict)},
            {"distances", r.distances},
            {"best_dimension", r.best_dimension},
            {"conflict", r.conflict},
            {"seesaw", to_json(r.best)},
            {"relaxation", to_json(r.relaxation)}};
}

} // namespace exwb
