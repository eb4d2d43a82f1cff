#pragma once

#include "bgk/diagnostics.hpp"
#include "bgk/dynamics.hpp"

#include <functional>
#include <vector>

namespace bgk {

struct SimulationOptions {
    double dt = 0.0;
    double t_final = 0.0;
    TimeScheme scheme = TimeScheme::explicit_euler;
    NewtonConfig newton;
    int record_every = 1; ///< steps between diagnostics records
};

/// Called with every record as soon as it is produced.
using RecordObserver = std::function<void(const MixtureState&, const TargetSet&, const DiagnosticsRecord&)>;

/// Relaxes `initial` to t_final, rebuilding targets every step (warm-started from the previous
/// step) and recording diagnostics at the initial time, every `record_every` steps and at t_final.
/// When t_final is not a multiple of dt the last step is shortened.
std::vector<DiagnosticsRecord> simulate(const MixtureState& initial, const SimulationOptions& options,
                                        const RecordObserver& observer = {}, MixtureState* final_state = nullptr);

} // namespace bgk
