#include "bgk/simulate.hpp"

#include <cmath>

namespace bgk {

std::vector<DiagnosticsRecord> simulate(const MixtureState& initial, const SimulationOptions& options,
                                        const RecordObserver& observer, MixtureState* final_state)
{
    if (!(options.t_final >= initial.time) || !std::isfinite(options.t_final))
        throw ConfigError("simulate: t_final must be finite and not before the initial time");
    if (!(options.dt > 0.0) || !std::isfinite(options.dt))
        throw ConfigError("simulate: dt must be positive");
    if (options.record_every < 1)
        throw ConfigError("simulate: record_every must be at least 1");
    initial.validate();

    const double t0 = initial.time;
    const double span = options.t_final - t0;
    const long steps = span == 0.0 ? 0 : std::max(1L, long(std::ceil(span / options.dt - 1e-9)));

    std::vector<DiagnosticsRecord> records;
    MixtureState state = initial;
    TargetSet targets = build_targets(state, options.newton);

    auto record = [&] {
        records.push_back(observe(state, targets));
        if (observer)
            observer(state, targets, records.back());
    };

    record();
    for (long k = 1; k <= steps; ++k) {
        const double t_next = k == steps ? t0 + span : t0 + double(k) * options.dt;
        state = advance(state, targets, t_next - state.time, options.scheme);
        state.time = t_next;
        targets = build_targets(state, options.newton, &targets);
        if (k % options.record_every == 0 || k == steps)
            record();
    }
    if (final_state)
        *final_state = std::move(state);
    return records;
}

} // namespace bgk
