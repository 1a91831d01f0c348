#pragma once

// Named scenarios and the behaviours used throughout the examples and tests.

#include <cmath>
#include <string>
#include <vector>

#include "exwb/scenario.hpp"

namespace exwb {

inline Scenario chsh_scenario() {
    return Scenario({{"x0", 2}, {"x1", 2}, {"y0", 2}, {"y1", 2}},
                    {{"x0", "y0"}, {"x0", "y1"}, {"x1", "y0"}, {"x1", "y1"}});
}

/// n binary measurements x1..xn whose compatibility graph is the n-cycle; the
/// contexts are the n adjacent pairs (also for n = 3, where the pairs are not
/// jointly measurable).
inline Scenario cycle_scenario(int n) {
    if (n < 3) throw Error("cycle scenario needs at least 3 measurements");
    std::vector<Measurement> ms;
    std::vector<std::pair<std::string, std::string>> comp;
    std::vector<std::vector<std::string>> contexts;
    for (int i = 1; i <= n; ++i) ms.push_back({"x" + std::to_string(i), 2});
    for (int i = 1; i <= n; ++i) {
        comp.emplace_back("x" + std::to_string(i), "x" + std::to_string(i % n + 1));
        contexts.push_back({"x" + std::to_string(i), "x" + std::to_string(i % n + 1)});
    }
    return Scenario(std::move(ms), comp, std::move(contexts));
}

inline Scenario specker_scenario() { return cycle_scenario(3); }
inline Scenario pentagon_scenario() { return cycle_scenario(5); }

namespace detail {

struct Row {
    std::vector<std::string> ids;  // measurement order used by the row's outcome labels
    std::vector<double> values;   // lexicographic over `ids` outcomes
    std::vector<std::string> exact;
};

// Rows may list their measurements in any order; they are reindexed into the
// canonical sorted-member order here.
inline Behaviour behaviour_from_rows(const Scenario& s, const std::vector<Row>& rows) {
    std::map<std::string, ProbabilityTable> keyed;
    std::map<std::string, std::vector<std::string>> notes;
    for (const auto& row : rows) {
        Context c;
        for (const auto& id : row.ids) c.members.push_back(s.index_of(id));
        Context sorted = c;
        std::sort(sorted.members.begin(), sorted.members.end());
        ProbabilityTable t(row.values.size());
        std::vector<std::string> ex(row.exact.empty() ? 0 : row.values.size());
        for (std::size_t idx = 0; idx < row.values.size(); ++idx) {
            const auto outs = s.joint_outcomes(c, idx);  // valid: sizes depend only on member set
            std::vector<int> canon(outs.size());
            for (std::size_t k = 0; k < c.members.size(); ++k) {
                auto pos = std::find(sorted.members.begin(), sorted.members.end(), c.members[k]) - sorted.members.begin();
                canon[static_cast<std::size_t>(pos)] = outs[k];
            }
            const auto j = s.joint_index(sorted, canon);
            t[j] = row.values[idx];
            if (!ex.empty()) ex[j] = row.exact[idx];
        }
        keyed[s.key(sorted)] = std::move(t);
        notes[s.key(sorted)] = std::move(ex);
    }
    Behaviour b = Behaviour::from_keyed(s, keyed);
    std::vector<std::vector<std::string>> ann;
    for (const auto& c : s.maximal_contexts()) ann.push_back(notes[s.key(c)]);
    b.set_annotations(std::move(ann));
    return b;
}

inline std::vector<std::string> names_of(const std::vector<double>& v) {
    std::vector<std::string> out;
    for (double x : v) {
        if (x == 0.0) out.push_back("0");
        else if (x == 0.5) out.push_back("1/2");
        else if (x == 1.0) out.push_back("1");
        else out.push_back(std::to_string(x));
    }
    return out;
}

} // namespace detail

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {"specker_triangle", "wright_pentagon",    "pr_box",
                                                   "almost_quantum_chsh", "tsirelson_chsh", "deterministic_chsh"};
    return names;
}

/// Behaviours by name. Irrational entries are rounded to the nearest double;
/// the exact expressions are kept as annotations.
inline Behaviour catalog_get(const std::string& name) {
    using detail::Row;
    const std::vector<double> anti = {0.0, 0.5, 0.5, 0.0};
    if (name == "specker_triangle") {
        const auto s = specker_scenario();
        return detail::behaviour_from_rows(s, {{{"x1", "x2"}, anti, detail::names_of(anti)},
                                               {{"x2", "x3"}, anti, detail::names_of(anti)},
                                               {{"x3", "x1"}, anti, detail::names_of(anti)}});
    }
    if (name == "wright_pentagon") {
        const auto s = pentagon_scenario();
        std::vector<Row> rows;
        for (int i = 1; i <= 5; ++i)
            rows.push_back({{"x" + std::to_string(i), "x" + std::to_string(i % 5 + 1)}, anti, detail::names_of(anti)});
        return detail::behaviour_from_rows(s, rows);
    }
    const auto s = chsh_scenario();
    if (name == "pr_box") {
        const std::vector<double> same = {0.5, 0.0, 0.0, 0.5};
        return detail::behaviour_from_rows(s, {{{"x0", "y0"}, same, detail::names_of(same)},
                                               {{"x0", "y1"}, same, detail::names_of(same)},
                                               {{"x1", "y0"}, same, detail::names_of(same)},
                                               {{"x1", "y1"}, anti, detail::names_of(anti)}});
    }
    if (name == "almost_quantum_chsh") {
        const double r2 = std::sqrt(2.0) / 9.0;
        return detail::behaviour_from_rows(
            s, {{{"x0", "y0"},
                 {2993.0 / 5500.0, 8.0 / 1375.0, 137.0 / 500.0, 22.0 / 125.0},
                 {"2993/5500", "8/1375", "137/500", "22/125"}},
                {{"x0", "y1"},
                 {107.0 / 700.0, 139.0 / 350.0, 139.0 / 350.0, 37.0 / 700.0},
                 {"107/700", "139/350", "139/350", "37/700"}},
                {{"x1", "y0"},
                 {7.0 / 11.0 + r2, 2.0 / 11.0 - r2, 2.0 / 11.0 - r2, r2},
                 {"7/11+sqrt(2)/9", "2/11-sqrt(2)/9", "2/11-sqrt(2)/9", "sqrt(2)/9"}},
                {{"x1", "y1"},
                 {2993.0 / 5500.0, 137.0 / 500.0, 8.0 / 1375.0, 22.0 / 125.0},
                 {"2993/5500", "137/500", "8/1375", "22/125"}}});
    }
    if (name == "tsirelson_chsh") {
        const double hi = (2.0 + std::sqrt(2.0)) / 8.0, lo = (2.0 - std::sqrt(2.0)) / 8.0;
        const std::vector<double> corr = {hi, lo, lo, hi}, anticorr = {lo, hi, hi, lo};
        const std::vector<std::string> ec = {"(2+sqrt(2))/8", "(2-sqrt(2))/8", "(2-sqrt(2))/8", "(2+sqrt(2))/8"};
        const std::vector<std::string> ea = {"(2-sqrt(2))/8", "(2+sqrt(2))/8", "(2+sqrt(2))/8", "(2-sqrt(2))/8"};
        return detail::behaviour_from_rows(s, {{{"x0", "y0"}, corr, ec},
                                               {{"x0", "y1"}, corr, ec},
                                               {{"x1", "y0"}, corr, ec},
                                               {{"x1", "y1"}, anticorr, ea}});
    }
    if (name == "deterministic_chsh") {
        const std::vector<double> det = {1.0, 0.0, 0.0, 0.0};
        return detail::behaviour_from_rows(s, {{{"x0", "y0"}, det, detail::names_of(det)},
                                               {{"x0", "y1"}, det, detail::names_of(det)},
                                               {{"x1", "y0"}, det, detail::names_of(det)},
                                               {{"x1", "y1"}, det, detail::names_of(det)}});
    }
    std::string list;
    for (const auto& n : catalog_names()) list += (list.empty() ? "" : ", ") + n;
    throw Error("unknown catalog entry '" + name + "'; available: " + list);
}

/// CHSH expression E00 + E01 + E10 - E11 with E = P(a=b) - P(a!=b), for the CHSH scenario.
inline double chsh_value(const Behaviour& b) {
    const auto& s = b.scenario();
    double total = 0.0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
            const auto c = s.context_from_key("x" + std::to_string(x) + ",y" + std::to_string(y));
            const auto t = context_table(b, c);
            const double corr = t[0] - t[1] - t[2] + t[3];
            total += (x == 1 && y == 1) ? -corr : corr;
        }
    return total;
}

} // namespace exwb
