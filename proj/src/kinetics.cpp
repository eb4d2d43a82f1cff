#include "bgk/kinetics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bgk {

namespace {

void require_same_size(const Field& f, const VelocityGrid& grid, const char* what)
{
    if (f.size() != grid.size()) {
        std::ostringstream os;
        os << what << ": field has " << f.size() << " values, grid has " << grid.size() << " nodes";
        throw ShapeError(os.str());
    }
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};

} // namespace

void validate_distribution(const Field& values, const VelocityGrid& grid)
{
    require_same_size(values, grid, "distribution");
    if (!values.allFinite())
        throw DegenerateInputError("distribution has non-finite values");
    if ((values < 0.0).any())
        throw DegenerateInputError("distribution has negative values");
    if (!(values > 0.0).any())
        throw DegenerateInputError("distribution is identically zero");
}

std::string describe(const FrequencyModel& model)
{
    std::ostringstream os;
    std::visit(Overloaded{
                   [&](const ConstantFrequency& c) { os << "Constant{" << c.nu0 << "}"; },
                   [&](const SoftPowerLawFrequency& p) { os << "SoftPowerLaw{" << p.nu0 << "," << p.gamma << "}"; },
                   [&](const CoulombLikeFrequency& c) { os << "CoulombLike{" << c.nu0 << "}"; },
                   [&](const TabulatedFrequency& t) { os << "Tabulated{" << t.values.size() << " nodes}"; },
               },
               model);
    return os.str();
}

FrequencyField eval_frequency(const FrequencyModel& model, const VelocityGrid& grid, int first, int second)
{
    auto require_rate = [](double nu0) {
        if (!(nu0 > 0.0) || !std::isfinite(nu0))
            throw ConfigError("collision frequency: nu0 must be positive and finite");
    };
    FrequencyField out{first, second, model, {}};
    std::visit(Overloaded{
                   [&](const ConstantFrequency& c) {
                       require_rate(c.nu0);
                       out.values = Field::Constant(grid.size(), c.nu0);
                   },
                   [&](const SoftPowerLawFrequency& p) {
                       require_rate(p.nu0);
                       if (!(p.gamma >= 0.0))
                           throw ConfigError("collision frequency: SoftPowerLaw gamma must be >= 0");
                       out.values = p.nu0 * (1.0 + grid.speed_sq()).pow(0.5 * p.gamma);
                   },
                   [&](const CoulombLikeFrequency& c) {
                       require_rate(c.nu0);
                       out.values = c.nu0 * (1.0 + grid.speed_sq()).pow(-1.5);
                   },
                   [&](const TabulatedFrequency& t) {
                       require_same_size(t.values, grid, "tabulated frequency");
                       out.values = t.values;
                   },
               },
               model);
    if (!out.values.allFinite() || !(out.values > 0.0).all())
        throw ConfigError("collision frequency " + describe(model) + " is not strictly positive and finite on the grid");
    return out;
}

Vec<5> Multipliers::as_vector() const
{
    Vec<5> x;
    x << lambda0, lambda1, lambda2;
    return x;
}

Multipliers Multipliers::from_vector(const Vec<5>& x)
{
    return {x[0], x.segment<3>(1), x[4]};
}

Vec<6> MixedMultipliers::as_vector() const
{
    Vec<6> x;
    x << lambda0_first, lambda0_second, lambda1, lambda2;
    return x;
}

MixedMultipliers MixedMultipliers::from_vector(const Vec<6>& x)
{
    return {x[0], x[1], x.segment<3>(2), x[5]};
}

Vec<5> MomentVector5::as_vector() const
{
    Vec<5> x;
    x << mu0, mu1, mu2;
    return x;
}

MomentVector5 MomentVector5::from_vector(const Vec<5>& x)
{
    return {x[0], x.segment<3>(1), x[4]};
}

Vec<6> MixedMomentVector6::as_vector() const
{
    Vec<6> x;
    x << mu0_first, mu0_second, mu1, mu2;
    return x;
}

MixedMomentVector6 MixedMomentVector6::from_vector(const Vec<6>& x)
{
    return {x[0], x[1], x.segment<3>(2), x[5]};
}

Field eval_exp_lambda(const Multipliers& lam, double mass, const VelocityGrid& grid)
{
    if (!(lam.lambda2 < 0.0))
        throw DomainError("exp_lambda: lambda2 must be negative");
    Field exponent = mass * (lam.lambda0 + lam.lambda1[0] * grid.vx() + lam.lambda1[1] * grid.vy() +
                             lam.lambda1[2] * grid.vz() + lam.lambda2 * grid.speed_sq());
    Field out = exponent.exp();
    if (!out.allFinite())
        throw DomainError("exp_lambda: exponential overflows on the grid");
    return out;
}

Field maxwellian(double n, const Vec3& u, double T, double mass, const VelocityGrid& grid)
{
    return eval_exp_lambda(lambda_from_macros(n, u, T, mass), mass, grid);
}

Macros macroscopic_moments(const Field& f, double mass, const VelocityGrid& grid)
{
    require_same_size(f, grid, "macroscopic_moments");
    const double dv = grid.cell_volume();
    const double number = dv * f.sum();
    if (!(number > 0.0))
        throw DegenerateInputError("macroscopic_moments: distribution carries no mass");
    Macros m;
    m.n = number;
    m.rho = mass * number;
    m.q = mass * dv * Vec3{(grid.vx() * f).sum(), (grid.vy() * f).sum(), (grid.vz() * f).sum()};
    m.E = 0.5 * mass * dv * (grid.speed_sq() * f).sum();
    m.u = m.q / m.rho;
    const Field peculiar_sq =
        (grid.vx() - m.u[0]).square() + (grid.vy() - m.u[1]).square() + (grid.vz() - m.u[2]).square();
    m.T = mass * (peculiar_sq * f).sum() / (3.0 * f.sum());
    return m;
}

MomentVector5 weighted_moments(const Field& f, const FrequencyField& nu, double mass, const VelocityGrid& grid)
{
    require_same_size(f, grid, "weighted_moments");
    require_same_size(nu.values, grid, "weighted_moments (frequency)");
    const Field w = (mass * grid.cell_volume()) * nu.values * f;
    return {w.sum(), Vec3{(grid.vx() * w).sum(), (grid.vy() * w).sum(), (grid.vz() * w).sum()},
            (grid.speed_sq() * w).sum()};
}

MixedMomentVector6 mixed_moment_vector(const Field& f1, const Field& f2, const FrequencyField& nu12,
                                       const FrequencyField& nu21, double m1, double m2,
                                       const VelocityGrid& grid)
{
    const MomentVector5 a = weighted_moments(f1, nu12, m1, grid);
    const MomentVector5 b = weighted_moments(f2, nu21, m2, grid);
    return {a.mu0, b.mu0, a.mu1 + b.mu1, a.mu2 + b.mu2};
}

Multipliers lambda_from_macros(double n, const Vec3& u, double T, double mass)
{
    if (!(n > 0.0) || !(T > 0.0) || !(mass > 0.0))
        throw DomainError("lambda_from_macros: n, T and mass must be positive");
    Multipliers lam;
    lam.lambda2 = -1.0 / (2.0 * T);
    lam.lambda1 = u / T;
    lam.lambda0 = std::log(n * std::pow(mass / (2.0 * std::numbers::pi * T), 1.5)) / mass -
                  u.squaredNorm() / (2.0 * T);
    return lam;
}

ThermalState macros_from_lambda(const Multipliers& lam, double mass)
{
    if (!(lam.lambda2 < 0.0))
        throw DomainError("macros_from_lambda: lambda2 must be negative");
    if (!(mass > 0.0))
        throw DomainError("macros_from_lambda: mass must be positive");
    ThermalState s;
    s.T = -1.0 / (2.0 * lam.lambda2);
    s.u = -lam.lambda1 / (2.0 * lam.lambda2);
    s.n = std::exp(mass * (lam.lambda0 + s.u.squaredNorm() / (2.0 * s.T))) *
          std::pow(2.0 * std::numbers::pi * s.T / mass, 1.5);
    return s;
}

} // namespace bgk
