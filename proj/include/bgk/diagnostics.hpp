#pragma once

#include "bgk/dynamics.hpp"

#include <span>
#include <string>
#include <vector>

namespace bgk {

/// Nodes below this value are clamped before taking logarithms.
inline constexpr double kPositivityFloor = 1e-300;

struct SpeciesObservables {
    double rho = 0.0;
    double n = 0.0;
    Vec3 u = Vec3::Zero();
    double T = 0.0;
    double equilibrium_gap = 0.0;
};

struct PairResidual {
    std::size_t first = 0;
    std::size_t second = 0;
    double residual = 0.0;
};

struct DiagnosticsRecord {
    double t = 0.0;
    std::vector<SpeciesObservables> species;
    Vec3 momentum = Vec3::Zero();
    double energy = 0.0;
    double entropy = 0.0;
    double dissipation = 0.0;
    std::vector<PairResidual> residuals; ///< every i <= j, diagonal included
    double floored_fraction = 0.0;       ///< mass fraction of nodes clamped in the dissipation logarithm
    std::vector<std::string> warnings;

    /// Residual of pair (i, j), i <= j, 0-based.
    double residual(std::size_t i, std::size_t j) const;
};

/// sum_i int h(f_i) dv
double total_entropy(const MixtureState& state);

struct DissipationValue {
    double value = 0.0;
    double floored_fraction = 0.0;
};

/// S = sum_ij int nu_ij ln f_i (M_ij - f_i) dv; nonpositive for constraint-satisfying targets.
DissipationValue dissipation_detail(const MixtureState& state, const TargetSet& targets);
double dissipation(const MixtureState& state, const TargetSet& targets);

/// int nu_ij ln M_ij (M_ij - f_i) dv + int nu_ji ln M_ji (M_ji - f_j) dv for the pair i < j.
/// Vanishes whenever the pair constraints hold.
double pair_identity(const MixtureState& state, const TargetSet& targets, std::size_t i, std::size_t j);

/// Relative L1 distance between f and the grid Maxwellian with the same number, momentum
/// and energy moments.
double equilibrium_gap(const Field& f, double mass, const VelocityGrid& grid);

DiagnosticsRecord observe(const MixtureState& state, const TargetSet& targets);

struct ConservationSummary {
    std::vector<double> mass_drift; ///< per species, max |rho(t) - rho(0)| / rho(0)
    Vec3 momentum_drift = Vec3::Zero(); ///< per component, relative to a momentum scale
    double energy_drift = 0.0;
    double max_drift() const;
};

ConservationSummary conservation_report(std::span<const DiagnosticsRecord> series);

} // namespace bgk
