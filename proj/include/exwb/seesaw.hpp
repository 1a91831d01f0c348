#pragma once

// See-saw search for a projective realization reproducing a target behaviour.
//
// Measurements are grouped into parties: the connected components of the
// incompatibility graph. Each party gets a tensor factor of the Hilbert space,
// so measurements of different parties commute by construction; within a
// party the measurements must be pairwise incompatible (Bell-type scenarios).
// A measurement is a local unitary U plus an assignment of U's columns to
// outcomes, E_a = sum of u_j u_j^dagger over columns assigned to a.
//
// One sweep alternates a damped Gauss-Newton step on the state, one on each
// measurement's unitary, and a discrete pass that moves single columns between
// outcomes. Every step is kept only if it lowers the distance, so the distance
// never increases.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "exwb/error.hpp"
#include "exwb/parallel.hpp"
#include "exwb/realization.hpp"
#include "exwb/scenario.hpp"

namespace exwb {

inline constexpr std::size_t seesaw_default_budget = 300;
inline constexpr std::size_t seesaw_default_restarts = 10;
inline constexpr std::size_t seesaw_dimension_cap = 64;

struct SeesawOptions {
    std::size_t budget = seesaw_default_budget;  // sweeps per restart
    std::size_t restarts = seesaw_default_restarts;
    std::uint64_t seed = 0;
    double stop_distance = 1e-10;
};

struct SeesawResult {
    Realization realization;
    double distance = std::numeric_limits<double>::infinity();
    std::vector<double> trace;  // distance after each sweep of the chosen restart
    std::size_t restart = 0;
    std::size_t sweeps = 0;
    std::vector<std::size_t> local_dimensions;  // per party
    std::vector<std::vector<std::string>> parties;
};

namespace detail {

struct SeesawLayout {
    std::vector<std::vector<std::size_t>> parties;  // measurement indices
    std::vector<std::size_t> party_of;
    std::vector<std::size_t> local;  // dimension per party
    // Stacked events: per maximal context and joint outcome, (measurement, outcome) pairs.
    std::vector<std::vector<std::pair<std::size_t, int>>> events;
};

inline std::vector<std::size_t> split_dimension(std::size_t d, std::size_t parties) {
    std::vector<std::size_t> primes;
    for (std::size_t p = 2, n = d; n > 1;) {
        if (n % p == 0) {
            primes.push_back(p);
            n /= p;
        } else {
            ++p;
        }
    }
    std::sort(primes.rbegin(), primes.rend());
    std::vector<std::size_t> local(parties, 1);
    for (auto p : primes) *std::min_element(local.begin(), local.end()) *= p;
    return local;
}

inline SeesawLayout seesaw_layout(const Scenario& s, std::size_t d) {
    SeesawLayout l;
    const std::size_t n = s.size();
    l.party_of.assign(n, n);
    for (std::size_t start = 0; start < n; ++start) {
        if (l.party_of[start] != n) continue;
        std::vector<std::size_t> comp{start}, stack{start};
        l.party_of[start] = l.parties.size();
        while (!stack.empty()) {
            const auto v = stack.back();
            stack.pop_back();
            for (std::size_t u = 0; u < n; ++u)
                if (u != v && !s.compatible(u, v) && l.party_of[u] == n) {
                    l.party_of[u] = l.parties.size();
                    comp.push_back(u);
                    stack.push_back(u);
                }
        }
        std::sort(comp.begin(), comp.end());
        for (std::size_t a = 0; a < comp.size(); ++a)
            for (std::size_t b = a + 1; b < comp.size(); ++b)
                if (s.compatible(comp[a], comp[b]))
                    throw Error("see-saw needs the measurements of each party to be pairwise incompatible; '" +
                                s.measurement(comp[a]).id + "' and '" + s.measurement(comp[b]).id + "' are compatible");
        l.parties.push_back(std::move(comp));
    }
    l.local = split_dimension(d, l.parties.size());
    for (const auto& c : s.maximal_contexts())
        for (std::size_t idx = 0; idx < s.table_size(c); ++idx) {
            const auto outs = s.joint_outcomes(c, idx);
            std::vector<std::pair<std::size_t, int>> ev;
            for (std::size_t k = 0; k < c.members.size(); ++k) ev.emplace_back(c.members[k], outs[k]);
            l.events.push_back(std::move(ev));
        }
    return l;
}

inline CMatrix kron(const CMatrix& x, const CMatrix& y) {
    CMatrix k(x.rows() * y.rows(), x.cols() * y.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) k.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return k;
}

struct SeesawModel {
    CVector psi;
    std::vector<CMatrix> unitary;            // per measurement (local dimension)
    std::vector<std::vector<int>> assign;    // per measurement, column -> outcome
};

class SeesawProblem {
public:
    SeesawProblem(const Scenario& s, const SeesawLayout& l, Eigen::VectorXd target)
        : s_(s), l_(l), target_(std::move(target)) {}

    std::vector<std::vector<CMatrix>> local_projectors(const SeesawModel& m) const {
        std::vector<std::vector<CMatrix>> out(s_.size());
        for (std::size_t i = 0; i < s_.size(); ++i) {
            const auto dl = static_cast<Eigen::Index>(l_.local[l_.party_of[i]]);
            out[i].assign(static_cast<std::size_t>(s_.outcomes(i)), CMatrix::Zero(dl, dl));
            for (Eigen::Index j = 0; j < dl; ++j) {
                const CVector u = m.unitary[i].col(j);
                out[i][static_cast<std::size_t>(m.assign[i][static_cast<std::size_t>(j)])] += u * u.adjoint();
            }
        }
        return out;
    }

    // Operator of one event with an optional replacement for the factor of measurement `swap_m`.
    CMatrix event_operator(const std::vector<std::vector<CMatrix>>& proj, std::size_t e, std::size_t swap_m = SIZE_MAX,
                           const CMatrix* swap = nullptr) const {
        std::vector<CMatrix> factors;
        for (auto dl : l_.local) factors.push_back(CMatrix::Identity(static_cast<Eigen::Index>(dl), static_cast<Eigen::Index>(dl)));
        for (auto [m, a] : l_.events[e])
            factors[l_.party_of[m]] = (m == swap_m && swap) ? *swap : proj[m][static_cast<std::size_t>(a)];
        CMatrix k = factors.front();
        for (std::size_t p = 1; p < factors.size(); ++p) k = kron(k, factors[p]);
        return k;
    }

    Eigen::VectorXd residual(const SeesawModel& m) const {
        const auto proj = local_projectors(m);
        Eigen::VectorXd r(static_cast<Eigen::Index>(l_.events.size()));
        for (std::size_t e = 0; e < l_.events.size(); ++e)
            r(static_cast<Eigen::Index>(e)) =
                m.psi.dot(event_operator(proj, e) * m.psi).real() - target_(static_cast<Eigen::Index>(e));
        return r;
    }

    // Jacobian of the residual for the state (2d real coordinates, tangent to
    // the unit sphere) when `measurement` is SIZE_MAX, else for the Hermitian
    // generator coordinates of that measurement's unitary.
    Eigen::MatrixXd jacobian(const SeesawModel& m, std::size_t measurement) const {
        const auto proj = local_projectors(m);
        const auto ne = static_cast<Eigen::Index>(l_.events.size());
        if (measurement == SIZE_MAX) {
            const auto d = m.psi.size();
            Eigen::MatrixXd j(ne, 2 * d);
            for (std::size_t e = 0; e < l_.events.size(); ++e) {
                const CVector pv = event_operator(proj, e) * m.psi;
                const double p = m.psi.dot(pv).real();
                for (Eigen::Index k = 0; k < d; ++k) {
                    j(static_cast<Eigen::Index>(e), k) = 2.0 * (pv(k).real() - p * m.psi(k).real());
                    j(static_cast<Eigen::Index>(e), d + k) = 2.0 * (pv(k).imag() - p * m.psi(k).imag());
                }
            }
            return j;
        }
        const auto gens = generators(l_.local[l_.party_of[measurement]]);
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(ne, static_cast<Eigen::Index>(gens.size()));
        const Complex i1(0.0, 1.0);
        for (std::size_t e = 0; e < l_.events.size(); ++e) {
            int outcome = -1;
            for (auto [mm, a] : l_.events[e])
                if (mm == measurement) outcome = a;
            if (outcome < 0) continue;
            const auto& ea = proj[measurement][static_cast<std::size_t>(outcome)];
            for (std::size_t g = 0; g < gens.size(); ++g) {
                const CMatrix de = i1 * (gens[g] * ea - ea * gens[g]);
                j(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(g)) =
                    m.psi.dot(event_operator(proj, e, measurement, &de) * m.psi).real();
            }
        }
        return j;
    }

    SeesawModel step(const SeesawModel& m, std::size_t measurement, const Eigen::VectorXd& delta) const {
        SeesawModel out = m;
        if (measurement == SIZE_MAX) {
            const auto d = m.psi.size();
            for (Eigen::Index k = 0; k < d; ++k) out.psi(k) += Complex(delta(k), delta(d + k));
            out.psi.normalize();
            return out;
        }
        const auto gens = generators(l_.local[l_.party_of[measurement]]);
        CMatrix k = CMatrix::Zero(gens.front().rows(), gens.front().cols());
        for (std::size_t g = 0; g < gens.size(); ++g) k += delta(static_cast<Eigen::Index>(g)) * gens[g];
        Eigen::SelfAdjointEigenSolver<CMatrix> es(k);
        CVector phase(es.eigenvalues().size());
        for (Eigen::Index t = 0; t < phase.size(); ++t) phase(t) = std::polar(1.0, es.eigenvalues()(t));
        const CMatrix rot = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
        out.unitary[measurement] = rot * m.unitary[measurement];
        return out;
    }

    static std::vector<CMatrix> generators(std::size_t dl) {
        std::vector<CMatrix> out;
        const auto n = static_cast<Eigen::Index>(dl);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index b = a; b < n; ++b) {
                CMatrix g = CMatrix::Zero(n, n);
                if (a == b) {
                    g(a, a) = 1.0;
                    out.push_back(g);
                    continue;
                }
                g(a, b) = g(b, a) = 1.0;
                out.push_back(g);
                g(a, b) = Complex(0.0, -1.0);
                g(b, a) = Complex(0.0, 1.0);
                out.push_back(g);
            }
        return out;
    }

    Realization realization(const SeesawModel& m) const {
        Realization r;
        const auto proj = local_projectors(m);
        r.dimension = static_cast<std::size_t>(m.psi.size());
        r.state = m.psi;
        for (std::size_t i = 0; i < s_.size(); ++i)
            for (const auto& e : proj[i]) {
                CMatrix k(1, 1);
                k(0, 0) = 1.0;
                for (std::size_t p = 0; p < l_.local.size(); ++p) {
                    const auto dl = static_cast<Eigen::Index>(l_.local[p]);
                    k = kron(k, p == l_.party_of[i] ? e : CMatrix::Identity(dl, dl));
                }
                r.projectors[s_.measurement(i).id].push_back(std::move(k));
            }
        return r;
    }

    const SeesawLayout& layout() const { return l_; }

private:
    const Scenario& s_;
    const SeesawLayout& l_;
    Eigen::VectorXd target_;
};

inline CMatrix haar_unitary(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = Complex(g(rng), g(rng));
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        const Complex d = r(i, i);
        if (std::abs(d) > 0.0) q.col(i) *= d / std::abs(d);
    }
    return q;
}

struct RestartOutcome {
    SeesawModel model;
    double distance = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
};

// Levenberg-Marquardt iterations on one block; returns the new squared distance.
inline double block_descent(const SeesawProblem& prob, SeesawModel& m, std::size_t block, double f, double& mu,
                            int iterations) {
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd r = prob.residual(m);
        const Eigen::MatrixXd j = prob.jacobian(m, block);
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        if (g.norm() < 1e-15) return f;
        if (mu <= 0.0) mu = 1e-3 * std::max(1e-12, a.diagonal().maxCoeff());
        bool accepted = false;
        for (int tries = 0; tries < 12 && !accepted; ++tries) {
            Eigen::MatrixXd damped = a;
            damped.diagonal().array() += mu;
            const Eigen::VectorXd delta = -damped.ldlt().solve(g);
            SeesawModel trial = prob.step(m, block, delta);
            const double ft = prob.residual(trial).squaredNorm();
            if (ft < f) {
                m = std::move(trial);
                f = ft;
                mu = std::max(mu / 3.0, 1e-15);
                accepted = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!accepted) return f;
    }
    return f;
}

inline double reassign_columns(const SeesawProblem& prob, const Scenario& s, SeesawModel& m, double f) {
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < m.assign[i].size(); ++j)
            for (int b = 0; b < s.outcomes(i); ++b) {
                if (b == m.assign[i][j]) continue;
                SeesawModel trial = m;
                trial.assign[i][j] = b;
                const double ft = prob.residual(trial).squaredNorm();
                if (ft < f) {
                    m = std::move(trial);
                    f = ft;
                }
            }
    return f;
}

inline RestartOutcome seesaw_restart(const Scenario& s, const SeesawProblem& prob, std::size_t d, std::size_t restart,
                                     const SeesawOptions& opt) {
    const auto& l = prob.layout();
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(restart), static_cast<std::uint32_t>(d)};
    std::mt19937_64 rng(seq);
    SeesawModel m;
    std::normal_distribution<double> g(0.0, 1.0);
    m.psi = CVector(static_cast<Eigen::Index>(d));
    for (Eigen::Index k = 0; k < m.psi.size(); ++k) m.psi(k) = Complex(g(rng), g(rng));
    m.psi.normalize();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto dl = l.local[l.party_of[i]];
        m.unitary.push_back(haar_unitary(dl, rng));
        std::vector<int> asg(dl);
        for (std::size_t j = 0; j < dl; ++j) asg[j] = static_cast<int>(j % static_cast<std::size_t>(s.outcomes(i)));
        std::shuffle(asg.begin(), asg.end(), rng);
        m.assign.push_back(std::move(asg));
    }
    double f = prob.residual(m).squaredNorm();
    std::vector<double> mu(s.size() + 1, 0.0);
    RestartOutcome out;
    std::size_t stalled = 0;
    for (std::size_t sweep = 0; sweep < opt.budget; ++sweep) {
        const double before = f;
        f = block_descent(prob, m, SIZE_MAX, f, mu.back(), 2);
        for (std::size_t i = 0; i < s.size(); ++i) f = block_descent(prob, m, i, f, mu[i], 2);
        f = reassign_columns(prob, s, m, f);
        out.trace.push_back(std::sqrt(f));
        if (std::sqrt(f) < opt.stop_distance) break;
        stalled = (before - f <= 1e-14 * std::max(before, 1e-30)) ? stalled + 1 : 0;
        if (stalled >= 25) break;
    }
    out.distance = std::sqrt(f);
    out.model = std::move(m);
    return out;
}

} // namespace detail

/// Best realization found in total dimension d over seeded restarts, with the
/// Euclidean distance between its stacked probabilities and the target's.
/// The dimension is split over the parties as evenly as its prime factors allow.
inline SeesawResult seesaw_fit(const Scenario& s, const Behaviour& target, std::size_t d, const SeesawOptions& opt = {}) {
    if (d == 0) throw Error("see-saw dimension must be at least 1");
    if (d > seesaw_dimension_cap)
        throw CapExceeded("see-saw dimension is limited to " + std::to_string(seesaw_dimension_cap), d);
    if (!(target.scenario() == s)) throw Error("target behaviour belongs to a different scenario");
    if (!check_normalization(target).pass) throw Error("target behaviour is not normalized");
    if (!check_nondisturbance(target).pass) throw Error("target behaviour is disturbing");
    const auto layout = detail::seesaw_layout(s, d);
    const auto stacked = target.stacked();
    const detail::SeesawProblem prob(s, layout, Eigen::Map<const Eigen::VectorXd>(stacked.data(),
                                                                                  static_cast<Eigen::Index>(stacked.size())));
    const std::size_t restarts = std::max<std::size_t>(1, opt.restarts);
    auto runs = parallel_map<detail::RestartOutcome>(
        restarts, [&](std::size_t k) { return detail::seesaw_restart(s, prob, d, k, opt); });
    std::size_t best = 0;
    for (std::size_t k = 1; k < runs.size(); ++k)
        if (runs[k].distance < runs[best].distance) best = k;
    SeesawResult out;
    out.realization = prob.realization(runs[best].model);
    out.distance = runs[best].distance;
    out.trace = std::move(runs[best].trace);
    out.restart = best;
    out.sweeps = out.trace.size();
    out.local_dimensions = layout.local;
    for (const auto& p : layout.parties) {
        std::vector<std::string> ids;
        for (auto m : p) ids.push_back(s.measurement(m).id);
        out.parties.push_back(std::move(ids));
    }
    return out;
}

} // namespace exwb
