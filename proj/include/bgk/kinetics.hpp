#pragma once

#include "bgk/types.hpp"
#include "bgk/velocity_grid.hpp"

#include <string>
#include <variant>

namespace bgk {

struct Species {
    std::string name;
    double mass = 1.0;
    int index = 0;
};

/// Number density of one species on the velocity grid.
struct Distribution {
    int species = 0;
    Field values;
};

/// Throws DegenerateInputError unless values are finite, nonnegative and not all zero.
void validate_distribution(const Field& values, const VelocityGrid& grid);

// Collision frequency models. All of them are strictly positive for nu0 > 0.
struct ConstantFrequency {
    double nu0 = 1.0;
};
/// nu0 * (1 + |v|^2)^(gamma/2)
struct SoftPowerLawFrequency {
    double nu0 = 1.0;
    double gamma = 1.0;
};
/// nu0 * (1 + |v|^2)^(-3/2), decaying at large speeds.
struct CoulombLikeFrequency {
    double nu0 = 1.0;
};
struct TabulatedFrequency {
    Field values;
};
using FrequencyModel =
    std::variant<ConstantFrequency, SoftPowerLawFrequency, CoulombLikeFrequency, TabulatedFrequency>;

std::string describe(const FrequencyModel& model);

/// nu_{kj}(v) evaluated on a grid. `first`/`second` are the 0-based species pair.
struct FrequencyField {
    int first = 0;
    int second = 0;
    FrequencyModel model;
    Field values;
};

FrequencyField eval_frequency(const FrequencyModel& model, const VelocityGrid& grid, int first = 0,
                              int second = 0);

/// Parameters of exp(m (lambda0 + lambda1 . v + lambda2 |v|^2)); valid when lambda2 < 0.
struct Multipliers {
    double lambda0 = 0.0;
    Vec3 lambda1 = Vec3::Zero();
    double lambda2 = -0.5;

    Vec<5> as_vector() const;
    static Multipliers from_vector(const Vec<5>& x);
};

/// Mixed-pair parameters: separate lambda0 per species, shared drift and curvature.
struct MixedMultipliers {
    double lambda0_first = 0.0;
    double lambda0_second = 0.0;
    Vec3 lambda1 = Vec3::Zero();
    double lambda2 = -0.5;

    Multipliers first() const { return {lambda0_first, lambda1, lambda2}; }
    Multipliers second() const { return {lambda0_second, lambda1, lambda2}; }
    Vec<6> as_vector() const;
    static MixedMultipliers from_vector(const Vec<6>& x);
};

/// (int nu m f, int nu m v f, int nu m |v|^2 f)
struct MomentVector5 {
    double mu0 = 0.0;
    Vec3 mu1 = Vec3::Zero();
    double mu2 = 0.0;

    Vec<5> as_vector() const;
    static MomentVector5 from_vector(const Vec<5>& x);
};

/// Pair moments: per-species mass parts, summed momentum and energy parts.
struct MixedMomentVector6 {
    double mu0_first = 0.0;
    double mu0_second = 0.0;
    Vec3 mu1 = Vec3::Zero();
    double mu2 = 0.0;

    Vec<6> as_vector() const;
    static MixedMomentVector6 from_vector(const Vec<6>& x);
};

struct Macros {
    double rho = 0.0;     ///< mass density
    Vec3 q = Vec3::Zero(); ///< momentum density
    double E = 0.0;       ///< energy density, (1/2) int m |v|^2 f
    Vec3 u = Vec3::Zero();
    double T = 0.0;       ///< energy units
    double n = 0.0;       ///< number density rho / m
};

struct ThermalState {
    double n = 0.0;
    Vec3 u = Vec3::Zero();
    double T = 0.0;
};

Field eval_exp_lambda(const Multipliers& lam, double mass, const VelocityGrid& grid);

/// Grid Maxwellian with number density n, drift u and temperature T.
Field maxwellian(double n, const Vec3& u, double T, double mass, const VelocityGrid& grid);

Macros macroscopic_moments(const Field& f, double mass, const VelocityGrid& grid);

MomentVector5 weighted_moments(const Field& f, const FrequencyField& nu, double mass, const VelocityGrid& grid);

MixedMomentVector6 mixed_moment_vector(const Field& f1, const Field& f2, const FrequencyField& nu12,
                                       const FrequencyField& nu21, double m1, double m2,
                                       const VelocityGrid& grid);

Multipliers lambda_from_macros(double n, const Vec3& u, double T, double mass);

/// Inverse of lambda_from_macros: T = -1/(2 lambda2), u = -lambda1/(2 lambda2).
ThermalState macros_from_lambda(const Multipliers& lam, double mass);

} // namespace bgk
