#include "bgk/dynamics.hpp"

#include <sstream>

namespace bgk {

namespace {

std::string pair_label(std::size_t i, std::size_t j)
{
    return "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")";
}

Field total_frequency(const MixtureState& state, std::size_t i)
{
    Field sum = Field::Zero(state.grid->size());
    for (std::size_t j = 0; j < state.size(); ++j)
        sum += state.nu(i, j).values;
    return sum;
}

[[noreturn]] void rethrow_annotated(const SolverError& e, std::size_t i, std::size_t j, double t)
{
    std::ostringstream os;
    os << e.what() << " [pair " << pair_label(i, j) << ", t=" << t << "]";
    throw SolverError(os.str(), e.report());
}

} // namespace

void MixtureState::validate() const
{
    if (!grid)
        throw ConfigError("mixture state has no velocity grid");
    const std::size_t n = size();
    if (n == 0)
        throw ConfigError("mixture state has no species");
    if (f.size() != n)
        throw ShapeError("mixture state: one distribution per species required");
    if (frequencies.size() != n * n)
        throw ShapeError("mixture state: frequency matrix must be N x N");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(species[i].mass > 0.0))
            throw ConfigError("species " + species[i].name + ": mass must be positive");
        validate_distribution(f[i], *grid);
        for (std::size_t j = 0; j < n; ++j) {
            const Field& v = nu(i, j).values;
            if (v.size() != grid->size())
                throw ShapeError("frequency " + pair_label(i, j) + " does not match the grid");
            if (!v.allFinite() || !(v > 0.0).all())
                throw ConfigError("frequency " + pair_label(i, j) + " must be strictly positive");
        }
    }
}

MixtureState make_state(std::shared_ptr<const VelocityGrid> grid, std::vector<Species> species,
                        std::vector<Field> f, const std::vector<FrequencyModel>& models, double time)
{
    MixtureState s;
    s.time = time;
    s.grid = std::move(grid);
    s.species = std::move(species);
    s.f = std::move(f);
    const std::size_t n = s.species.size();
    if (models.size() != n * n)
        throw ConfigError("frequency matrix must have N x N entries");
    s.frequencies.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            s.frequencies.push_back(eval_frequency(models[i * n + j], *s.grid, int(i), int(j)));
    s.validate();
    return s;
}

Multipliers TargetSet::multipliers(std::size_t i, std::size_t j) const
{
    if (i == j)
        return intra[i];
    if (i < j)
        return inter[i * species_count + j]->first();
    return inter[j * species_count + i]->second();
}

double TargetSet::residual(std::size_t i, std::size_t j) const
{
    return i <= j ? residuals[i * species_count + j] : residuals[j * species_count + i];
}

TargetSet build_targets(const MixtureState& state, const NewtonConfig& cfg, const TargetSet* warm_start)
{
    const std::size_t n = state.size();
    const VelocityGrid& grid = *state.grid;
    if (warm_start && warm_start->species_count != n)
        warm_start = nullptr;

    std::vector<Macros> macros;
    macros.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        macros.push_back(macroscopic_moments(state.f[i], state.species[i].mass, grid));

    TargetSet out;
    out.species_count = n;
    out.targets.resize(n * n);
    out.intra.resize(n);
    out.inter.resize(n * n);
    out.residuals.assign(n * n, 0.0);
    out.iterations.assign(n * n, 0);

    for (std::size_t i = 0; i < n; ++i) {
        const double m = state.species[i].mass;
        const MomentVector5 rho = weighted_moments(state.f[i], state.nu(i, i), m, grid);
        const Multipliers guess = warm_start ? warm_start->intra[i]
                                             : lambda_from_macros(macros[i].n, macros[i].u, macros[i].T, m);
        try {
            SingleTarget sol = solve_single_target(rho, state.nu(i, i), m, grid, cfg, guess);
            out.intra[i] = sol.multipliers;
            out.residuals[i * n + i] = sol.report.final_grad_norm;
            out.iterations[i * n + i] = sol.report.iterations;
        }
        catch (const SolverError& e) {
            rethrow_annotated(e, i, i, state.time);
        }
        out.targets[i * n + i] = eval_exp_lambda(out.intra[i], m, grid);
    }

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double mi = state.species[i].mass;
            const double mj = state.species[j].mass;
            const MixedMomentVector6 rho_bar =
                mixed_moment_vector(state.f[i], state.f[j], state.nu(i, j), state.nu(j, i), mi, mj, grid);
            MixedMultipliers guess;
            if (warm_start && warm_start->inter[i * n + j]) {
                guess = *warm_start->inter[i * n + j];
            }
            else {
                const Macros& a = macros[i];
                const Macros& b = macros[j];
                const double rho = a.rho + b.rho;
                const Vec3 u = (a.q + b.q) / rho;
                const double T = (a.E + b.E - 0.5 * rho * u.squaredNorm()) / (1.5 * (a.n + b.n));
                const Multipliers li = lambda_from_macros(a.n, u, T, mi);
                const Multipliers lj = lambda_from_macros(b.n, u, T, mj);
                guess = {li.lambda0, lj.lambda0, li.lambda1, li.lambda2};
            }
            try {
                MixedTarget sol = solve_mixed_target(rho_bar, state.nu(i, j), state.nu(j, i), mi, mj, grid, cfg,
                                                     guess);
                out.inter[i * n + j] = sol.multipliers;
                out.residuals[i * n + j] = sol.report.final_grad_norm;
                out.iterations[i * n + j] = sol.report.iterations;
            }
            catch (const SolverError& e) {
                rethrow_annotated(e, i, j, state.time);
            }
            const MixedMultipliers& lam = *out.inter[i * n + j];
            out.targets[i * n + j] = eval_exp_lambda(lam.first(), mi, grid);
            out.targets[j * n + i] = eval_exp_lambda(lam.second(), mj, grid);
        }
    }
    return out;
}

std::vector<Field> bgk_rhs(const MixtureState& state, const TargetSet& targets)
{
    const std::size_t n = state.size();
    if (targets.species_count != n)
        throw ShapeError("bgk_rhs: target set does not match the number of species");
    std::vector<Field> q;
    q.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Field qi = Field::Zero(state.grid->size());
        for (std::size_t j = 0; j < n; ++j) {
            const Field& m = targets.target(i, j);
            if (m.size() != qi.size())
                throw ShapeError("bgk_rhs: target " + pair_label(i, j) + " does not match the grid");
            qi += state.nu(i, j).values * (m - state.f[i]);
        }
        q.push_back(std::move(qi));
    }
    return q;
}

const char* to_string(TimeScheme scheme)
{
    return scheme == TimeScheme::explicit_euler ? "explicit_euler" : "semi_implicit";
}

double explicit_step_limit(const MixtureState& state)
{
    double peak = 0.0;
    for (std::size_t i = 0; i < state.size(); ++i)
        peak = std::max(peak, total_frequency(state, i).maxCoeff());
    return 1.0 / peak;
}

double default_time_step(const MixtureState& state)
{
    return 0.1 * explicit_step_limit(state);
}

MixtureState advance(const MixtureState& state, const TargetSet& targets, double dt, TimeScheme scheme)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw StepSizeError("time step must be positive and finite");
    const std::size_t n = state.size();
    const VelocityGrid& grid = *state.grid;
    MixtureState next = state;
    next.time = state.time + dt;

    for (std::size_t i = 0; i < n; ++i) {
        const Field nu_sum = total_frequency(state, i);
        if (scheme == TimeScheme::explicit_euler) {
            Eigen::Index worst = 0;
            const double peak = nu_sum.maxCoeff(&worst);
            if (dt * peak > 1.0 + 1e-12) {
                const Vec3 v = grid.node(worst);
                std::ostringstream os;
                os << "explicit Euler step dt=" << dt << " exceeds the positivity limit " << 1.0 / peak
                   << " for species " << i + 1 << " at node " << worst << " (v=" << v.transpose() << ")";
                throw StepSizeError(os.str());
            }
            Field rhs = Field::Zero(grid.size());
            for (std::size_t j = 0; j < n; ++j)
                rhs += state.nu(i, j).values * (targets.target(i, j) - state.f[i]);
            next.f[i] = state.f[i] + dt * rhs;
        }
        else {
            Field gain = Field::Zero(grid.size());
            for (std::size_t j = 0; j < n; ++j)
                gain += state.nu(i, j).values * targets.target(i, j);
            next.f[i] = (state.f[i] + dt * gain) / (1.0 + dt * nu_sum);
        }
        Eigen::Index worst = 0;
        if (next.f[i].minCoeff(&worst) < 0.0 || !next.f[i].allFinite()) {
            const Vec3 v = grid.node(worst);
            std::ostringstream os;
            os << "step dt=" << dt << " produced a negative or non-finite density for species " << i + 1
               << " at node " << worst << " (v=" << v.transpose() << ")";
            throw StepSizeError(os.str());
        }
    }
    return next;
}

MixtureState step(const MixtureState& state, double dt, TimeScheme scheme, const NewtonConfig& cfg,
                  const TargetSet* warm_start, TargetSet* used)
{
    TargetSet targets = build_targets(state, cfg, warm_start);
    MixtureState next = advance(state, targets, dt, scheme);
    if (used)
        *used = std::move(targets);
    return next;
}

} // namespace bgk
