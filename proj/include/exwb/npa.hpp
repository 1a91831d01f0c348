#pragma once

// Moment-matrix relaxation of the quantum set for a scenario.
//
// Symbols are the projectors E(m, a) for all but the last outcome of each
// measurement (the last one is 1 minus the others). Words are products of
// symbols; the relations used to identify words are idempotence, orthogonality
// of outcomes of one measurement, and commutation of compatible measurements.
// Rows are indexed by all words of length <= level plus, always, one word per
// context event (products over sub-contexts of size >= 2). The matrix is the
// real part of <u^dagger v>, so a word is also identified with its reverse.
// Entries whose word is a product over a context are fixed to the behaviour's
// probabilities; the rest are free and bounded by 1 in modulus.

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "exwb/error.hpp"
#include "exwb/scenario.hpp"
#include "exwb/sdp.hpp"

namespace exwb {

inline constexpr int npa_max_level = 2;

struct MomentRelaxation {
    int level = 1;
    bool context_words = true;
    std::vector<std::string> words;                 // row labels, "1" for the identity
    std::vector<std::vector<long>> entry;           // variable index, or -1 when fixed
    Eigen::MatrixXd fixed;                          // values of fixed entries (0 elsewhere)
    std::vector<std::string> variables;             // canonical word of each free moment
    LinearMatrixInequality lmi;
};

struct NpaResult {
    SdpStatus status = SdpStatus::Inconclusive;  // Feasible, Infeasible or Inconclusive
    MomentRelaxation relaxation;
    Eigen::MatrixXd moment_matrix;  // at the returned point (feasible or best found)
    double min_eigenvalue = 0.0;
    Eigen::MatrixXd certificate;    // Infeasible: PSD, trace one
    double certificate_margin = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

struct Symbol {
    std::size_t measurement;
    int outcome;
};

using Word = std::vector<int>;  // symbol indices

class WordAlgebra {
public:
    explicit WordAlgebra(const Scenario& s) : s_(s) {
        for (std::size_t m = 0; m < s.size(); ++m)
            for (int a = 0; a + 1 < s.outcomes(m); ++a) symbols_.push_back({m, a});
    }

    const std::vector<Symbol>& symbols() const { return symbols_; }

    bool commute(int x, int y) const {
        const auto mx = symbols_[static_cast<std::size_t>(x)].measurement;
        const auto my = symbols_[static_cast<std::size_t>(y)].measurement;
        return mx == my || s_.compatible(mx, my);
    }

    // Shortest, then lexicographically least word reachable by commuting
    // swaps and contractions; nullopt when the word is zero.
    std::optional<Word> reduce(const Word& w) const {
        std::set<Word> seen{w};
        std::vector<Word> todo{w};
        while (!todo.empty()) {
            Word cur = std::move(todo.back());
            todo.pop_back();
            for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
                const int x = cur[i], y = cur[i + 1];
                const auto& sx = symbols_[static_cast<std::size_t>(x)];
                const auto& sy = symbols_[static_cast<std::size_t>(y)];
                Word next = cur;
                if (sx.measurement == sy.measurement) {
                    if (x != y) return std::nullopt;
                    next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
                } else if (s_.compatible(sx.measurement, sy.measurement)) {
                    std::swap(next[i], next[i + 1]);
                } else {
                    continue;
                }
                if (seen.insert(next).second) todo.push_back(std::move(next));
            }
        }
        return *std::min_element(seen.begin(), seen.end(), [](const Word& a, const Word& b) {
            return a.size() != b.size() ? a.size() < b.size() : a < b;
        });
    }

    // Canonical moment key of <w>: identified with its reverse.
    std::optional<Word> moment_key(const Word& w) const {
        auto a = reduce(w);
        Word rev(w.rbegin(), w.rend());
        auto b = reduce(rev);
        if (!a || !b) return std::nullopt;
        return std::min(*a, *b, [](const Word& x, const Word& y) {
            return x.size() != y.size() ? x.size() < y.size() : x < y;
        });
    }

    // A product of projectors of distinct measurements forming a context.
    std::optional<Event> as_event(const Word& w) const {
        Event e;
        std::vector<std::pair<std::size_t, int>> parts;
        for (int x : w) parts.emplace_back(symbols_[static_cast<std::size_t>(x)].measurement,
                                           symbols_[static_cast<std::size_t>(x)].outcome);
        std::sort(parts.begin(), parts.end());
        for (std::size_t k = 0; k < parts.size(); ++k) {
            if (k && parts[k].first == parts[k - 1].first) return std::nullopt;
            e.context.members.push_back(parts[k].first);
            e.outcomes.push_back(parts[k].second);
        }
        if (!s_.is_context(e.context)) return std::nullopt;
        return e;
    }

    std::string label(const Word& w) const {
        if (w.empty()) return "1";
        std::string out;
        for (int x : w) {
            if (!out.empty()) out += ' ';
            const auto& sx = symbols_[static_cast<std::size_t>(x)];
            out += s_.measurement(sx.measurement).id + ":" + std::to_string(sx.outcome);
        }
        return out;
    }

private:
    const Scenario& s_;
    std::vector<Symbol> symbols_;
};

} // namespace detail

/// Builds the relaxation for behaviour b at word length `level` (1 or 2).
inline MomentRelaxation build_moment_relaxation(const Behaviour& b, int level, bool context_words = true) {
    if (level < 1 || level > npa_max_level)
        throw Error("relaxation level must be 1 or " + std::to_string(npa_max_level));
    const auto& s = b.scenario();
    const detail::WordAlgebra alg(s);
    const int ns = static_cast<int>(alg.symbols().size());

    std::vector<detail::Word> rows;
    std::set<detail::Word> have;
    auto add_row = [&](const detail::Word& w) {
        if (auto r = alg.reduce(w); r && have.insert(*r).second) rows.push_back(*r);
    };
    add_row({});
    std::vector<detail::Word> frontier{{}};
    for (int len = 1; len <= level; ++len) {
        std::vector<detail::Word> next;
        for (const auto& w : frontier)
            for (int x = 0; x < ns; ++x) {
                auto v = w;
                v.push_back(x);
                add_row(v);
                next.push_back(std::move(v));
            }
        frontier = std::move(next);
    }
    if (context_words)
        for (const auto& c : enumerate_contexts(s, false)) {
            if (c.members.size() < 2) continue;
            std::vector<std::vector<int>> per;
            for (auto m : c.members) {
                std::vector<int> xs;
                for (int x = 0; x < ns; ++x)
                    if (alg.symbols()[static_cast<std::size_t>(x)].measurement == m) xs.push_back(x);
                per.push_back(std::move(xs));
            }
            std::vector<std::size_t> pick(per.size(), 0);
            while (true) {
                detail::Word w;
                for (std::size_t k = 0; k < per.size(); ++k) w.push_back(per[k][pick[k]]);
                add_row(w);
                std::size_t k = per.size();
                while (k-- > 0 && ++pick[k] == per[k].size()) pick[k] = 0;
                if (k == static_cast<std::size_t>(-1)) break;
            }
        }
    if (rows.size() > sdp_order_cap)
        throw CapExceeded("moment matrix order exceeds " + std::to_string(sdp_order_cap), rows.size());

    MomentRelaxation rel;
    rel.level = level;
    rel.context_words = context_words;
    const auto n = rows.size();
    rel.entry.assign(n, std::vector<long>(n, -1));
    rel.fixed = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& w : rows) rel.words.push_back(alg.label(w));
    std::map<detail::Word, long> var_of;
    rel.lmi.blocks = {n};
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = r; c < n; ++c) {
            detail::Word w(rows[r].rbegin(), rows[r].rend());
            w.insert(w.end(), rows[c].begin(), rows[c].end());
            const auto key = alg.moment_key(w);
            double value = 0.0;
            long var = -1;
            if (key && key->empty()) {
                value = 1.0;
            } else if (key) {
                if (auto e = alg.as_event(*key)) {
                    value = event_probability(b, *e);
                } else {
                    auto [it, fresh] = var_of.emplace(*key, static_cast<long>(rel.variables.size()));
                    if (fresh) {
                        rel.variables.push_back(alg.label(*key));
                        rel.lmi.f.emplace_back();
                    }
                    var = it->second;
                }
            }
            rel.entry[r][c] = rel.entry[c][r] = var;
            if (var < 0) {
                rel.fixed(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
                rel.fixed(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = value;
                if (value != 0.0) rel.lmi.f0.add_sym(0, r, c, value);
            } else {
                rel.lmi.f[static_cast<std::size_t>(var)].add_sym(0, r, c, 1.0);
            }
        }
    rel.lmi.bound = 1.0;
    return rel;
}

/// Margin of an infeasibility certificate W computed from the entry map:
/// -sum_fixed W_rc value_rc - sum_k |sum_{(r,c) in k} W_rc|, over trace(W).
/// Positive means no assignment of the free moments in [-1, 1] makes the
/// moment matrix PSD. -inf when W is not PSD or has the wrong shape.
inline double npa_certificate_margin(const MomentRelaxation& rel, const Eigen::MatrixXd& w) {
    const auto n = static_cast<Eigen::Index>(rel.words.size());
    if (w.rows() != n || w.cols() != n) return -std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd sym = 0.5 * (w + w.transpose());
    const double tr = sym.trace();
    if (!(tr > 0.0) || Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues()(0) < 0.0)
        return -std::numeric_limits<double>::infinity();
    double fixed = 0.0;
    std::vector<double> per(rel.variables.size(), 0.0);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) {
            const long v = rel.entry[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            if (v < 0) fixed += sym(r, c) * rel.fixed(r, c);
            else per[static_cast<std::size_t>(v)] += sym(r, c);
        }
    double margin = -fixed;
    for (double p : per) margin -= rel.lmi.bound * std::abs(p);
    return margin / tr;
}

/// Infeasible (with a certificate re-checked by npa_certificate_margin)
/// proves that b has no projective realization in any dimension. Feasible is
/// not a proof that b is quantum.
inline NpaResult npa_infeasibility(const Behaviour& b, int level, bool context_words = true, const SdpOptions& opt = {}) {
    NpaResult out;
    out.relaxation = build_moment_relaxation(b, level, context_words);
    const auto& rel = out.relaxation;
    const auto lmi = lmi_feasibility(rel.lmi, opt);
    out.iterations = lmi.iterations;
    out.min_eigenvalue = lmi.min_eigenvalue;
    const auto n = static_cast<Eigen::Index>(rel.words.size());
    out.moment_matrix = rel.fixed;
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            if (const long v = rel.entry[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; v >= 0)
                out.moment_matrix(r, c) = lmi.y[static_cast<std::size_t>(v)];
    out.status = lmi.status;
    if (lmi.status == SdpStatus::Infeasible) {
        out.certificate = lmi.certificate.front();
        out.certificate_margin = npa_certificate_margin(rel, out.certificate);
        if (!(out.certificate_margin > opt.feasibility_tolerance)) out.status = SdpStatus::Inconclusive;
    }
    return out;
}

} // namespace exwb
