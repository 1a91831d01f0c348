#pragma once

// Whether a behaviour admits a projective quantum realization: a see-saw
// search from below and a moment-matrix relaxation from above.

#include <string>
#include <vector>

#include "exwb/npa.hpp"
#include "exwb/realization.hpp"
#include "exwb/seesaw.hpp"

namespace exwb {

inline constexpr double realization_found_distance = 1e-6;

enum class QuantumVerdict { Quantum, NonQuantum, Undecided };

inline const char* to_string(QuantumVerdict v) {
    switch (v) {
    case QuantumVerdict::Quantum: return "quantum (realization found)";
    case QuantumVerdict::NonQuantum: return "non-quantum (relaxation infeasible)";
    case QuantumVerdict::Undecided: return "undecided (gap)";
    }
    return "?";
}

struct ConstraintCOptions {
    std::size_t d_max = 6;
    int level = 2;
    SeesawOptions seesaw;
    SdpOptions sdp;
};

struct ConstraintCReport {
    QuantumVerdict verdict = QuantumVerdict::Undecided;
    std::vector<double> distances;  // best see-saw distance for d = 1..d_max
    std::size_t best_dimension = 0;
    SeesawResult best;
    NpaResult relaxation;
    bool conflict = false;  // realization found although the relaxation is infeasible
};

/// "quantum" needs a validated realization within 1e-6 of b; "non-quantum"
/// needs a re-verified relaxation certificate. A conflict between the two
/// (which would be a numerical failure) is reported as undecided.
inline ConstraintCReport constraintC_verdict(const Behaviour& b, const ConstraintCOptions& opt = {}) {
    if (opt.d_max == 0) throw Error("d_max must be at least 1");
    ConstraintCReport rep;
    rep.relaxation = npa_infeasibility(b, opt.level, true, opt.sdp);
    for (std::size_t d = 1; d <= opt.d_max; ++d) {
        auto fit = seesaw_fit(b.scenario(), b, d, opt.seesaw);
        rep.distances.push_back(fit.distance);
        if (d == 1 || fit.distance < rep.best.distance) {
            rep.best = std::move(fit);
            rep.best_dimension = d;
        }
    }
    const bool found = rep.best.distance < realization_found_distance &&
                       validate_realization(rep.best.realization, b.scenario()).pass;
    const bool excluded = rep.relaxation.status == SdpStatus::Infeasible;
    rep.conflict = found && excluded;
    if (rep.conflict) rep.verdict = QuantumVerdict::Undecided;
    else if (found) rep.verdict = QuantumVerdict::Quantum;
    else if (excluded) rep.verdict = QuantumVerdict::NonQuantum;
    return rep;
}

} // namespace exwb
