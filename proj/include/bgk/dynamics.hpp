#pragma once

#include "bgk/entropy_dual.hpp"
#include "bgk/kinetics.hpp"
#include "bgk/velocity_grid.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace bgk {

/// Space-homogeneous N-species state: one distribution per species and the N x N matrix of
/// collision frequencies nu_ij (row-major, nu(i, j) is species i colliding with j).
struct MixtureState {
    double time = 0.0;
    std::vector<Species> species;
    std::vector<Field> f;
    std::vector<FrequencyField> frequencies;
    std::shared_ptr<const VelocityGrid> grid;

    std::size_t size() const { return species.size(); }
    const FrequencyField& nu(std::size_t i, std::size_t j) const { return frequencies[i * size() + j]; }

    /// Throws on inconsistent sizes, nonpositive masses or frequencies, or invalid distributions.
    void validate() const;
};

/// Builds a state, evaluating every frequency model on the grid.
MixtureState make_state(std::shared_ptr<const VelocityGrid> grid, std::vector<Species> species,
                        std::vector<Field> f, const std::vector<FrequencyModel>& models, double time = 0.0);

/// Target Maxwellians M_ij for every ordered pair together with their generating multipliers.
struct TargetSet {
    std::size_t species_count = 0;
    std::vector<Field> targets; ///< row-major, targets[i * N + j] = M_ij
    std::vector<Multipliers> intra;                  ///< lambda^{ii}
    std::vector<std::optional<MixedMultipliers>> inter; ///< row-major, set for i < j
    std::vector<double> residuals;                   ///< row-major, relative constraint residual for i <= j
    std::vector<int> iterations;                     ///< row-major, Newton iterations for i <= j

    const Field& target(std::size_t i, std::size_t j) const { return targets[i * species_count + j]; }
    Multipliers multipliers(std::size_t i, std::size_t j) const;
    double residual(std::size_t i, std::size_t j) const;
};

/// Solves all N single-species and N(N-1)/2 pair problems for the current state.
/// `warm_start`, when given, seeds every solve with its multipliers.
TargetSet build_targets(const MixtureState& state, const NewtonConfig& cfg = {},
                        const TargetSet* warm_start = nullptr);

/// Q_i = sum_j nu_ij (M_ij - f_i), one field per species.
std::vector<Field> bgk_rhs(const MixtureState& state, const TargetSet& targets);

enum class TimeScheme { explicit_euler, semi_implicit };

const char* to_string(TimeScheme scheme);

/// Largest dt keeping explicit Euler positivity, 1 / max_{i,v} sum_j nu_ij(v).
double explicit_step_limit(const MixtureState& state);

/// Default step, 0.1 / max_{i,v} sum_j nu_ij(v).
double default_time_step(const MixtureState& state);

/// One step with targets frozen at the pre-step state.
MixtureState advance(const MixtureState& state, const TargetSet& targets, double dt, TimeScheme scheme);

/// Builds targets and advances by dt. The targets used are returned through `used` when non-null.
MixtureState step(const MixtureState& state, double dt, TimeScheme scheme, const NewtonConfig& cfg = {},
                  const TargetSet* warm_start = nullptr, TargetSet* used = nullptr);

} // namespace bgk
