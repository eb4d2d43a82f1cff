#pragma once

#include "bgk/kinetics.hpp"
#include "bgk/types.hpp"
#include "bgk/velocity_grid.hpp"

#include <optional>
#include <vector>

namespace bgk {

struct NewtonConfig {
    double grad_tol = 1e-10;       ///< on ||grad z|| / ||rho||
    int max_iter = 200;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    double min_step = 1e-12;
    double hessian_ridge = 0.0;

    /// Throws ConfigError on out-of-range settings.
    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double final_grad_norm = 0.0; ///< relative, in physical moment units
    bool converged = false;
    std::vector<double> objective_history;
    double final_lambda2 = 0.0;
};

/// Newton did not converge; the report tells why (lambda2 -> 0- means an unrealizable target).
class SolverError : public Error {
public:
    SolverError(const std::string& what, SolveReport report) : Error(what), report_(std::move(report)) {}
    const char* category() const noexcept override { return "solver"; }
    const SolveReport& report() const { return report_; }

private:
    SolveReport report_;
};

/// int nu h(g) dv with h(z) = z ln z - z and 0 ln 0 = 0.
double weighted_entropy(const Field& g, const FrequencyField& nu, const VelocityGrid& grid);

template <int N>
struct DualEvaluation {
    double value = 0.0;
    Vec<N> gradient = Vec<N>::Zero();
    Mat<N> hessian = Mat<N>::Zero();
};

/// z(lambda; rho) = int nu exp_lambda dv - lambda . rho, with gradient mu(exp_lambda) - rho and
/// Hessian int nu a (x) a exp_lambda dv. Coordinates are (lambda0, lambda1, lambda2).
DualEvaluation<5> dual_eval(const Multipliers& lam, const MomentVector5& rho, const FrequencyField& nu,
                            double mass, const VelocityGrid& grid);

/// Pair dual over (lambda0_first, lambda0_second, lambda1, lambda2).
DualEvaluation<6> mixed_dual_eval(const MixedMultipliers& lam, const MixedMomentVector6& rho_bar,
                                  const FrequencyField& nu12, const FrequencyField& nu21, double m1,
                                  double m2, const VelocityGrid& grid);

struct SingleTarget {
    Multipliers multipliers;
    SolveReport report;
};

struct MixedTarget {
    MixedMultipliers multipliers;
    SolveReport report;
};

/// Multipliers whose exponential reproduces the nu-weighted moments `rho_target`.
SingleTarget solve_single_target(const MomentVector5& rho_target, const FrequencyField& nu, double mass,
                                 const VelocityGrid& grid, const NewtonConfig& cfg = {},
                                 const std::optional<Multipliers>& initial_guess = std::nullopt);

/// Shared-drift/temperature multipliers reproducing the pair moments `rho_bar`.
MixedTarget solve_mixed_target(const MixedMomentVector6& rho_bar, const FrequencyField& nu12,
                               const FrequencyField& nu21, double m1, double m2, const VelocityGrid& grid,
                               const NewtonConfig& cfg = {},
                               const std::optional<MixedMultipliers>& initial_guess = std::nullopt);

/// ||mu(exp_lambda) - rho|| / ||rho||
double constraint_residual(const Multipliers& lam, const MomentVector5& rho, const FrequencyField& nu,
                           double mass, const VelocityGrid& grid);
double constraint_residual(const MixedMultipliers& lam, const MixedMomentVector6& rho_bar,
                           const FrequencyField& nu12, const FrequencyField& nu21, double m1, double m2,
                           const VelocityGrid& grid);

} // namespace bgk
