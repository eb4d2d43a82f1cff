#include "bgk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bgk {

double DiagnosticsRecord::residual(std::size_t i, std::size_t j) const
{
    for (const auto& r : residuals)
        if (r.first == i && r.second == j)
            return r.residual;
    throw ShapeError("diagnostics record has no residual for the requested pair");
}

double total_entropy(const MixtureState& state)
{
    double h = 0.0;
    for (const Field& f : state.f) {
        const Field hf = (f > 0.0).select(f * f.log() - f, 0.0);
        h += integrate(hf, *state.grid);
    }
    return h;
}

DissipationValue dissipation_detail(const MixtureState& state, const TargetSet& targets)
{
    const std::size_t n = state.size();
    const VelocityGrid& grid = *state.grid;
    DissipationValue out;
    Eigen::Index clamped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Field& f = state.f[i];
        clamped += (f < kPositivityFloor).count();
        const Field log_f = f.max(kPositivityFloor).log();
        for (std::size_t j = 0; j < n; ++j)
            out.value += integrate(state.nu(i, j).values * log_f * (targets.target(i, j) - f), grid);
    }
    out.floored_fraction = double(clamped) / double(grid.size() * Eigen::Index(n));
    return out;
}

double dissipation(const MixtureState& state, const TargetSet& targets)
{
    return dissipation_detail(state, targets).value;
}

double pair_identity(const MixtureState& state, const TargetSet& targets, std::size_t i, std::size_t j)
{
    const VelocityGrid& grid = *state.grid;
    auto term = [&](std::size_t a, std::size_t b) {
        const Field& m = targets.target(a, b);
        const Multipliers lam = targets.multipliers(a, b);
        const double mass = state.species[a].mass;
        // ln M evaluated from the multipliers, not from the (possibly underflowed) field.
        const Field log_m = mass * (lam.lambda0 + lam.lambda1[0] * grid.vx() + lam.lambda1[1] * grid.vy() +
                                    lam.lambda1[2] * grid.vz() + lam.lambda2 * grid.speed_sq());
        return integrate(state.nu(a, b).values * log_m * (m - state.f[a]), grid);
    };
    return term(i, j) + term(j, i);
}

double equilibrium_gap(const Field& f, double mass, const VelocityGrid& grid)
{
    const Macros mac = macroscopic_moments(f, mass, grid);
    Multipliers lam = lambda_from_macros(mac.n, mac.u, mac.T, mass);
    // With unit weight the single-species solve returns the grid Maxwellian whose quadrature
    // moments equal those of f, which removes the truncation error of the analytic one.
    const FrequencyField unit = eval_frequency(ConstantFrequency{1.0}, grid);
    try {
        lam = solve_single_target(weighted_moments(f, unit, mass, grid), unit, mass, grid, NewtonConfig{}, lam)
                  .multipliers;
    }
    catch (const SolverError&) {
    }
    const Field m = eval_exp_lambda(lam, mass, grid);
    return (f - m).abs().sum() / f.abs().sum();
}

DiagnosticsRecord observe(const MixtureState& state, const TargetSet& targets)
{
    const std::size_t n = state.size();
    const VelocityGrid& grid = *state.grid;
    DiagnosticsRecord rec;
    rec.t = state.time;
    for (std::size_t i = 0; i < n; ++i) {
        const double mass = state.species[i].mass;
        const Macros mac = macroscopic_moments(state.f[i], mass, grid);
        rec.species.push_back({mac.rho, mac.n, mac.u, mac.T, equilibrium_gap(state.f[i], mass, grid)});
        rec.momentum += mac.q;
        rec.energy += mac.E;
    }
    rec.entropy = total_entropy(state);
    const DissipationValue s = dissipation_detail(state, targets);
    rec.dissipation = s.value;
    rec.floored_fraction = s.floored_fraction;
    if (s.floored_fraction > 0.01) {
        std::ostringstream os;
        os << "dissipation: " << 100.0 * s.floored_fraction << "% of nodes clamped at the positivity floor";
        rec.warnings.push_back(os.str());
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            rec.residuals.push_back({i, j, targets.residual(i, j)});
    return rec;
}

double ConservationSummary::max_drift() const
{
    double d = std::max(energy_drift, momentum_drift.maxCoeff());
    for (double m : mass_drift)
        d = std::max(d, m);
    return d;
}

ConservationSummary conservation_report(std::span<const DiagnosticsRecord> series)
{
    if (series.size() < 2)
        throw DegenerateInputError("conservation_report needs at least two records");
    const DiagnosticsRecord& first = series.front();
    const std::size_t n = first.species.size();

    // Momentum may vanish initially; fall back to the thermal momentum scale then.
    double thermal_momentum = 0.0;
    for (const auto& s : first.species)
        thermal_momentum += s.rho * (s.u.norm() + std::sqrt(std::max(s.T, 0.0) * s.n / s.rho));
    const double q0 = first.momentum.norm();
    const double momentum_scale = q0 > 1e-3 * thermal_momentum ? q0 : std::max(thermal_momentum, 1e-300);

    ConservationSummary out;
    out.mass_drift.assign(n, 0.0);
    for (const auto& rec : series) {
        if (rec.species.size() != n)
            throw ShapeError("conservation_report: species count changes along the series");
        for (std::size_t i = 0; i < n; ++i)
            out.mass_drift[i] =
                std::max(out.mass_drift[i], std::abs(rec.species[i].rho - first.species[i].rho) / first.species[i].rho);
        out.momentum_drift =
            out.momentum_drift.cwiseMax(((rec.momentum - first.momentum).cwiseAbs() / momentum_scale).eval());
        out.energy_drift = std::max(out.energy_drift, std::abs(rec.energy - first.energy) / std::abs(first.energy));
    }
    return out;
}

} // namespace bgk
