#include "bgk/entropy_dual.hpp"

#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace bgk {

void NewtonConfig::validate() const
{
    if (!(grad_tol > 0.0))
        throw ConfigError("newton: grad_tol must be positive");
    if (max_iter < 1)
        throw ConfigError("newton: max_iter must be at least 1");
    if (!(armijo_c > 0.0 && armijo_c < 1.0))
        throw ConfigError("newton: armijo_c must lie in (0,1)");
    if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
        throw ConfigError("newton: backtrack_factor must lie in (0,1)");
    if (!(min_step > 0.0))
        throw ConfigError("newton: min_step must be positive");
    if (!(hessian_ridge >= 0.0))
        throw ConfigError("newton: hessian_ridge must be >= 0");
}

double weighted_entropy(const Field& g, const FrequencyField& nu, const VelocityGrid& grid)
{
    if (g.size() != grid.size() || nu.values.size() != grid.size())
        throw ShapeError("weighted_entropy: field sizes do not match the grid");
    const Field h = (g > 0.0).select(g * g.log() - g, 0.0);
    return grid.cell_volume() * (nu.values * h).sum();
}

namespace {

// The pair and single duals share one kernel: B exponential blocks (one per species) with
// their own lambda0 and a common (lambda1, lambda2). Unknowns are ordered
// [lambda0_0 .. lambda0_{B-1}, lambda1 (3), lambda2].
template <int B>
constexpr int kDim = B + 4;

template <int B>
using VecB = Vec<kDim<B>>;
template <int B>
using MatB = Mat<kDim<B>>;

template <int B>
struct Problem {
    std::array<double, B> mass;
    std::array<const Field*, B> nu;
    const VelocityGrid* grid;
};

// Affine velocity frame w = (v - center) / scale. Newton runs on the multipliers of the
// exponent written in w, which keeps the Hessian conditioning independent of the grid.
struct Frame {
    Vec3 center = Vec3::Zero();
    double scale = 1.0;
};

template <int B>
VecB<B> to_scaled(const VecB<B>& lam, const Frame& fr)
{
    const Vec3& c = fr.center;
    const double s = fr.scale;
    const Vec3 l1 = lam.template segment<3>(B);
    const double l2 = lam[B + 3];
    VecB<B> th;
    for (int b = 0; b < B; ++b)
        th[b] = lam[b] + l1.dot(c) + l2 * c.squaredNorm();
    th.template segment<3>(B) = s * (l1 + 2.0 * l2 * c);
    th[B + 3] = s * s * l2;
    return th;
}

template <int B>
VecB<B> to_physical(const VecB<B>& th, const Frame& fr)
{
    const Vec3& c = fr.center;
    const double s = fr.scale;
    const double l2 = th[B + 3] / (s * s);
    const Vec3 l1 = th.template segment<3>(B) / s - 2.0 * l2 * c;
    VecB<B> lam;
    for (int b = 0; b < B; ++b)
        lam[b] = th[b] - l1.dot(c) - l2 * c.squaredNorm();
    lam.template segment<3>(B) = l1;
    lam[B + 3] = l2;
    return lam;
}

// Moment vectors transform so that lambda . rho is frame independent.
template <int B>
VecB<B> moments_to_scaled(const VecB<B>& rho, const Frame& fr)
{
    const Vec3& c = fr.center;
    const double s = fr.scale;
    const double p0 = rho.template head<B>().sum();
    const Vec3 r1 = rho.template segment<3>(B);
    VecB<B> out;
    out.template head<B>() = rho.template head<B>();
    out.template segment<3>(B) = (r1 - c * p0) / s;
    out[B + 3] = (rho[B + 3] - 2.0 * c.dot(r1) + c.squaredNorm() * p0) / (s * s);
    return out;
}

template <int B>
VecB<B> moments_to_physical(const VecB<B>& rho, const Frame& fr)
{
    const Vec3& c = fr.center;
    const double s = fr.scale;
    const double p0 = rho.template head<B>().sum();
    const Vec3 r1 = rho.template segment<3>(B);
    VecB<B> out;
    out.template head<B>() = rho.template head<B>();
    out.template segment<3>(B) = s * r1 + c * p0;
    out[B + 3] = s * s * rho[B + 3] + 2.0 * s * c.dot(r1) + c.squaredNorm() * p0;
    return out;
}

struct ScaledNodes {
    Field wx, wy, wz, w2;

    ScaledNodes(const VelocityGrid& g, const Frame& fr)
    {
        const double inv = 1.0 / fr.scale;
        wx = (g.vx() - fr.center[0]) * inv;
        wy = (g.vy() - fr.center[1]) * inv;
        wz = (g.vz() - fr.center[2]) * inv;
        w2 = wx.square() + wy.square() + wz.square();
    }
};

template <int B>
struct Evaluation {
    double value = 0.0;
    VecB<B> gradient = VecB<B>::Zero();
    MatB<B> hessian = MatB<B>::Zero();
    bool finite = true;
};

// Value, gradient and (optionally) Hessian of
//   z(theta) = sum_b int nu_b exp(m_b (theta0_b + theta1 . w + theta2 |w|^2)) dv - theta . rho.
// Each block factors out its largest exponent before exponentiating.
template <int B>
Evaluation<B> evaluate(const Problem<B>& p, const ScaledNodes& nodes, const VecB<B>& theta, const VecB<B>& rho,
                       bool with_hessian)
{
    Evaluation<B> ev;
    const Eigen::Index n = nodes.wx.size();
    const double dv = p.grid->cell_volume();
    const double t1x = theta[B], t1y = theta[B + 1], t1z = theta[B + 2], t2 = theta[B + 3];
    for (int b = 0; b < B; ++b) {
        const double m = p.mass[b];
        const Field& nu = *p.nu[b];
        const double t0 = theta[b];
        const Field exponent = m * (t0 + t1x * nodes.wx + t1y * nodes.wy + t1z * nodes.wz + t2 * nodes.w2);
        const double shift = exponent.maxCoeff();
        const double factor = std::exp(shift) * dv;
        if (!std::isfinite(shift) || !std::isfinite(factor)) {
            ev.finite = false;
            return ev;
        }
        double s0 = 0, s1x = 0, s1y = 0, s1z = 0, s2 = 0;
        double sxx = 0, sxy = 0, sxz = 0, syy = 0, syz = 0, szz = 0;
        double s2x = 0, s2y = 0, s2z = 0, s4 = 0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double t = nu[k] * std::exp(exponent[k] - shift);
            const double x = nodes.wx[k], y = nodes.wy[k], z = nodes.wz[k], r2 = nodes.w2[k];
            s0 += t;
            s1x += t * x;
            s1y += t * y;
            s1z += t * z;
            s2 += t * r2;
            if (with_hessian) {
                sxx += t * x * x;
                sxy += t * x * y;
                sxz += t * x * z;
                syy += t * y * y;
                syz += t * y * z;
                szz += t * z * z;
                s2x += t * r2 * x;
                s2y += t * r2 * y;
                s2z += t * r2 * z;
                s4 += t * r2 * r2;
            }
        }
        ev.value += factor * s0;
        const double g = m * factor;
        ev.gradient[b] += g * s0;
        ev.gradient.template segment<3>(B) += g * Vec3{s1x, s1y, s1z};
        ev.gradient[B + 3] += g * s2;
        if (with_hessian) {
            const double h = m * m * factor;
            Mat<5> local;
            local << s0, s1x, s1y, s1z, s2,
                     s1x, sxx, sxy, sxz, s2x,
                     s1y, sxy, syy, syz, s2y,
                     s1z, sxz, syz, szz, s2z,
                     s2, s2x, s2y, s2z, s4;
            local *= h;
            const std::array<int, 5> idx{b, B, B + 1, B + 2, B + 3};
            for (int r = 0; r < 5; ++r)
                for (int c = 0; c < 5; ++c)
                    ev.hessian(idx[r], idx[c]) += local(r, c);
        }
    }
    ev.value -= theta.dot(rho);
    ev.gradient -= rho;
    ev.finite = std::isfinite(ev.value) && ev.gradient.allFinite() && ev.hessian.allFinite();
    return ev;
}

template <int B>
Evaluation<B> evaluate_physical(const Problem<B>& p, const VecB<B>& lam, const VecB<B>& rho, bool with_hessian)
{
    if (!(lam[B + 3] < 0.0))
        throw DomainError("dual: lambda2 must be negative");
    const ScaledNodes nodes(*p.grid, Frame{});
    Evaluation<B> ev = evaluate<B>(p, nodes, lam, rho, with_hessian);
    if (!ev.finite)
        throw DomainError("dual: objective overflows double precision at these multipliers");
    return ev;
}

template <int B>
void check_problem(const Problem<B>& p)
{
    for (int b = 0; b < B; ++b) {
        if (p.nu[b]->size() != p.grid->size())
            throw ShapeError("dual: collision frequency does not match the grid");
        if (!(p.mass[b] > 0.0))
            throw DomainError("dual: mass must be positive");
    }
}

// Thermal guess read off the weighted moments as if nu were constant.
template <int B>
VecB<B> guess_from_moments(const Problem<B>& p, const VecB<B>& rho)
{
    const double p0 = rho.template head<B>().sum();
    const Vec3 u = rho.template segment<3>(B) / p0;
    double inv_mass_weight = 0.0;
    for (int b = 0; b < B; ++b)
        inv_mass_weight += rho[b] / p.mass[b];
    const double T = (rho[B + 3] - p0 * u.squaredNorm()) / (3.0 * inv_mass_weight);
    if (!(T > 0.0) || !std::isfinite(T)) {
        SolveReport report;
        throw SolverError("target moments are not realizable (nonpositive weighted temperature)", report);
    }
    VecB<B> lam;
    for (int b = 0; b < B; ++b)
        lam[b] = lambda_from_macros(1.0, u, T, p.mass[b]).lambda0;
    lam.template segment<3>(B) = u / T;
    lam[B + 3] = -0.5 / T;
    return lam;
}

template <int B>
VecB<B> newton_solve(const Problem<B>& p, const VecB<B>& rho, const VecB<B>& guess, const NewtonConfig& cfg,
                     SolveReport& report)
{
    cfg.validate();
    report = SolveReport{};
    for (int b = 0; b < B; ++b) {
        if (!(rho[b] > 0.0)) {
            report.final_lambda2 = guess[B + 3];
            throw SolverError("target moments are not realizable (nonpositive mass moment)", report);
        }
    }
    if (!(rho[B + 3] > 0.0))
        throw SolverError("target moments are not realizable (nonpositive energy moment)", report);
    if (!(guess[B + 3] < 0.0) || !guess.allFinite())
        throw DomainError("newton: initial guess must have finite entries and lambda2 < 0");

    double geo_mass = 1.0;
    for (int b = 0; b < B; ++b)
        geo_mass *= p.mass[b];
    geo_mass = std::pow(geo_mass, 1.0 / B);
    const double guess_T = -0.5 / guess[B + 3];
    const Frame frame{-guess.template segment<3>(B) / (2.0 * guess[B + 3]), std::sqrt(guess_T / geo_mass)};
    const ScaledNodes nodes(*p.grid, frame);

    const VecB<B> rho_s = moments_to_scaled<B>(rho, frame);
    const double rho_s_norm = rho_s.norm();
    const double rho_norm = rho.norm();
    VecB<B> theta = to_scaled<B>(guess, frame);

    // lambda0 enters each block as a pure scale factor, so its 1-D minimizer is explicit.
    {
        const Evaluation<B> ev = evaluate<B>(p, nodes, theta, rho_s, false);
        if (ev.finite) {
            for (int b = 0; b < B; ++b) {
                const double mu0 = ev.gradient[b] + rho_s[b];
                if (mu0 > 0.0 && std::isfinite(mu0))
                    theta[b] += std::log(rho_s[b] / mu0) / p.mass[b];
            }
        }
    }

    Evaluation<B> ev = evaluate<B>(p, nodes, theta, rho_s, true);
    if (!ev.finite)
        throw SolverError("newton: dual objective is not finite at the initial guess", report);
    report.objective_history.push_back(ev.value);

    auto residuals = [&](const Evaluation<B>& e) {
        const double scaled = e.gradient.norm() / rho_s_norm;
        const double physical = moments_to_physical<B>(e.gradient, frame).norm() / rho_norm;
        return std::max(scaled, physical);
    };

    const double eps = std::numeric_limits<double>::epsilon();
    double residual = residuals(ev);
    for (;;) {
        if (residual <= cfg.grad_tol) {
            report.converged = true;
            break;
        }
        if (report.iterations >= cfg.max_iter)
            break;
        ++report.iterations;

        MatB<B> hess = ev.hessian;
        hess.diagonal().array() += cfg.hessian_ridge;
        VecB<B> dir;
        Eigen::LLT<MatB<B>> llt(hess);
        if (llt.info() == Eigen::Success) {
            dir = -llt.solve(ev.gradient);
        }
        else {
            dir = -ev.gradient;
        }
        double slope = ev.gradient.dot(dir);
        if (!(slope < 0.0)) {
            dir = -ev.gradient;
            slope = -ev.gradient.squaredNorm();
        }

        double alpha = 1.0;
        while (!(theta[B + 3] + alpha * dir[B + 3] < 0.0))
            alpha *= 0.5;

        // Below this decrement the objective change is lost in rounding; accept steps that
        // still shrink the gradient instead of insisting on Armijo.
        const double rounding = 64.0 * eps * (std::abs(ev.value) + std::abs(theta.dot(rho_s)) + 1e-300);
        bool accepted = false;
        while (alpha >= cfg.min_step) {
            const VecB<B> trial_theta = theta + alpha * dir;
            Evaluation<B> trial = evaluate<B>(p, nodes, trial_theta, rho_s, true);
            if (trial.finite) {
                const bool armijo = trial.value <= ev.value + cfg.armijo_c * alpha * slope;
                const bool polish = -slope <= rounding && residuals(trial) < residual;
                if (armijo || polish) {
                    if (armijo && trial.value < report.objective_history.back())
                        report.objective_history.push_back(trial.value);
                    theta = trial_theta;
                    ev = std::move(trial);
                    accepted = true;
                    break;
                }
            }
            alpha *= cfg.backtrack_factor;
        }
        if (!accepted)
            break;
        residual = residuals(ev);
    }

    const VecB<B> lam = to_physical<B>(theta, frame);
    report.final_grad_norm = residual;
    report.final_lambda2 = lam[B + 3];
    if (!report.converged) {
        std::ostringstream os;
        os << "newton: no convergence after " << report.iterations << " iterations (relative residual "
           << residual << ", lambda2 " << lam[B + 3] << ")";
        throw SolverError(os.str(), report);
    }
    return lam;
}

Problem<1> single_problem(const FrequencyField& nu, double mass, const VelocityGrid& grid)
{
    Problem<1> p{{mass}, {&nu.values}, &grid};
    check_problem(p);
    return p;
}

Problem<2> pair_problem(const FrequencyField& nu12, const FrequencyField& nu21, double m1, double m2,
                        const VelocityGrid& grid)
{
    Problem<2> p{{m1, m2}, {&nu12.values, &nu21.values}, &grid};
    check_problem(p);
    return p;
}

} // namespace

DualEvaluation<5> dual_eval(const Multipliers& lam, const MomentVector5& rho, const FrequencyField& nu, double mass,
                            const VelocityGrid& grid)
{
    const auto p = single_problem(nu, mass, grid);
    const auto ev = evaluate_physical<1>(p, lam.as_vector(), rho.as_vector(), true);
    return {ev.value, ev.gradient, ev.hessian};
}

DualEvaluation<6> mixed_dual_eval(const MixedMultipliers& lam, const MixedMomentVector6& rho_bar,
                                  const FrequencyField& nu12, const FrequencyField& nu21, double m1, double m2,
                                  const VelocityGrid& grid)
{
    const auto p = pair_problem(nu12, nu21, m1, m2, grid);
    const auto ev = evaluate_physical<2>(p, lam.as_vector(), rho_bar.as_vector(), true);
    return {ev.value, ev.gradient, ev.hessian};
}

SingleTarget solve_single_target(const MomentVector5& rho_target, const FrequencyField& nu, double mass,
                                 const VelocityGrid& grid, const NewtonConfig& cfg,
                                 const std::optional<Multipliers>& initial_guess)
{
    const auto p = single_problem(nu, mass, grid);
    const Vec<5> rho = rho_target.as_vector();
    if (!rho.allFinite())
        throw DomainError("solve_single_target: target moments are not finite");
    const Vec<5> guess = initial_guess ? initial_guess->as_vector() : guess_from_moments<1>(p, rho);
    SingleTarget out;
    out.multipliers = Multipliers::from_vector(newton_solve<1>(p, rho, guess, cfg, out.report));
    return out;
}

MixedTarget solve_mixed_target(const MixedMomentVector6& rho_bar, const FrequencyField& nu12,
                               const FrequencyField& nu21, double m1, double m2, const VelocityGrid& grid,
                               const NewtonConfig& cfg, const std::optional<MixedMultipliers>& initial_guess)
{
    const auto p = pair_problem(nu12, nu21, m1, m2, grid);
    const Vec<6> rho = rho_bar.as_vector();
    if (!rho.allFinite())
        throw DomainError("solve_mixed_target: target moments are not finite");
    const Vec<6> guess = initial_guess ? initial_guess->as_vector() : guess_from_moments<2>(p, rho);
    MixedTarget out;
    out.multipliers = MixedMultipliers::from_vector(newton_solve<2>(p, rho, guess, cfg, out.report));
    return out;
}

double constraint_residual(const Multipliers& lam, const MomentVector5& rho, const FrequencyField& nu, double mass,
                           const VelocityGrid& grid)
{
    const auto p = single_problem(nu, mass, grid);
    const Vec<5> r = rho.as_vector();
    return evaluate_physical<1>(p, lam.as_vector(), r, false).gradient.norm() / r.norm();
}

double constraint_residual(const MixedMultipliers& lam, const MixedMomentVector6& rho_bar,
                           const FrequencyField& nu12, const FrequencyField& nu21, double m1, double m2,
                           const VelocityGrid& grid)
{
    const auto p = pair_problem(nu12, nu21, m1, m2, grid);
    const Vec<6> r = rho_bar.as_vector();
    return evaluate_physical<2>(p, lam.as_vector(), r, false).gradient.norm() / r.norm();
}

} // namespace bgk
