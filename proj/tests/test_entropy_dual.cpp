#include "bgk/entropy_dual.hpp"

#include "oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bgk;

namespace {

VelocityGrid box(double half_width, int n = 32)
{
    return build_grid(Vec3::Constant(-half_width), Vec3::Constant(half_width), {n, n, n});
}

VelocityGrid grid_for(std::initializer_list<ThermalSpec> specs, double c = 6.0, int n = 32)
{
    const std::vector<ThermalSpec> v(specs);
    const auto b = auto_bounds(v, c);
    return build_grid(b.v_min, b.v_max, {n, n, n});
}

template <int N, class F>
Vec<N> central_gradient(F&& value_at, const Vec<N>& x, double h)
{
    Vec<N> g;
    for (int i = 0; i < N; ++i) {
        Vec<N> up = x, down = x;
        up[i] += h;
        down[i] -= h;
        g[i] = (value_at(up) - value_at(down)) / (2.0 * h);
    }
    return g;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace

TEST_CASE("weighted entropy")
{
    const VelocityGrid g = box(1.0, 8);
    const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
    CHECK(weighted_entropy(Field::Ones(g.size()), one, g) == doctest::Approx(-8.0));
    CHECK(std::abs(weighted_entropy(Field::Constant(g.size(), std::numbers::e), one, g)) < 1e-13);
    Field with_zero = Field::Ones(g.size());
    with_zero[0] = 0.0;
    CHECK(std::isfinite(weighted_entropy(with_zero, one, g)));

    const VelocityGrid big = box(6.0);
    const Field m = maxwellian(1.0, Vec3::Zero(), 1.0, 1.0, big);
    const double reference = oracle::radial_integral(
        [](double r) {
            const double f = oracle::maxwellian_radial(r, 1.0, 1.0, 1.0);
            return f * std::log(f) - f;
        },
        12.0);
    CHECK(std::abs(weighted_entropy(m, eval_frequency(ConstantFrequency{1.0}, big), big) - reference) < 1e-5);
}

TEST_CASE("dual_eval against Gaussian integrals")
{
    const VelocityGrid g = box(6.0);
    const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
    const double pi32 = std::pow(std::numbers::pi, 1.5);
    const auto ev = dual_eval({0.0, Vec3::Zero(), -1.0}, {1.0, Vec3::Zero(), 1.0}, one, 1.0, g);
    CHECK(std::abs(ev.value - (pi32 + 1.0)) < 1e-6 * pi32);
    CHECK(ev.value == doctest::Approx(6.568328).epsilon(1e-6));
    Vec<5> expected;
    expected << pi32 - 1.0, 0, 0, 0, 1.5 * pi32 - 1.0;
    CHECK(relative_error(ev.gradient, expected) < 1e-6);
    CHECK((ev.hessian - ev.hessian.transpose()).norm() == 0.0);
}

TEST_CASE("dual gradient vanishes at self-consistent moments")
{
    const VelocityGrid g = box(6.0);
    const FrequencyField nu = eval_frequency(CoulombLikeFrequency{1.0}, g);
    const Multipliers lam{-1.0, Vec3(0.1, 0.2, -0.1), -0.7};
    const MomentVector5 rho = weighted_moments(eval_exp_lambda(lam, 1.3, g), nu, 1.3, g);
    const auto ev = dual_eval(lam, rho, nu, 1.3, g);
    CHECK(ev.gradient.norm() < 1e-13 * rho.as_vector().norm());
}

TEST_CASE("dual gradient and Hessian match finite differences")
{
    const VelocityGrid g = box(6.0);
    const FrequencyField nu = eval_frequency(CoulombLikeFrequency{1.0}, g);
    const Multipliers lam{-1.0, Vec3(0.1, 0, 0), -0.7};
    const MomentVector5 rho{0.8, Vec3(0.1, -0.05, 0.02), 1.9};
    const auto ev = dual_eval(lam, rho, nu, 1.0, g);
    const auto value_at = [&](const Vec<5>& x) { return dual_eval(Multipliers::from_vector(x), rho, nu, 1.0, g).value; };
    CHECK(relative_error(ev.gradient, central_gradient<5>(value_at, lam.as_vector(), 1e-5)) < 1e-5);

    // The Hessian carries the frequency weight: it is the derivative of the weighted gradient.
    for (int i = 0; i < 5; ++i) {
        const auto grad_at = [&](const Vec<5>& x) {
            return dual_eval(Multipliers::from_vector(x), rho, nu, 1.0, g).gradient[i];
        };
        const Vec<5> row = central_gradient<5>(grad_at, lam.as_vector(), 1e-5);
        CHECK(relative_error(ev.hessian.row(i).transpose(), row) < 1e-5);
    }
}

TEST_CASE("mixed dual")
{
    const VelocityGrid g = grid_for({{Vec3::Zero(), 1.0, 1.0}});
    const FrequencyField c1 = eval_frequency(ConstantFrequency{1.0}, g);
    const FrequencyField q2 = eval_frequency(CoulombLikeFrequency{2.0}, g);

    SUBCASE("symmetric twins")
    {
        const FrequencyField nu = eval_frequency(SoftPowerLawFrequency{1.0, 1.0}, g);
        const MixedMultipliers lam{-2.0, -2.0, Vec3(0.1, 0, 0), -0.5};
        const MixedMomentVector6 rho{0.3, 0.3, Vec3(0.1, 0, 0), 1.0};
        const auto ev = mixed_dual_eval(lam, rho, nu, nu, 1.0, 1.0, g);
        CHECK(ev.gradient[0] == doctest::Approx(ev.gradient[1]).epsilon(1e-15));
    }
    SUBCASE("stationary at its own moments")
    {
        const MixedMultipliers lam{-2.0, -3.0, Vec3(0.2, 0, 0), -0.5};
        const MixedMomentVector6 rho = mixed_moment_vector(eval_exp_lambda(lam.first(), 1.0, g),
                                                           eval_exp_lambda(lam.second(), 2.0, g), c1, q2, 1.0, 2.0, g);
        const auto ev = mixed_dual_eval(lam, rho, c1, q2, 1.0, 2.0, g);
        CHECK(ev.gradient.norm() < 1e-13 * rho.as_vector().norm());
    }
    SUBCASE("finite differences")
    {
        const MixedMultipliers lam{-2.0, -3.0, Vec3(0.2, 0, 0), -0.5};
        const MixedMomentVector6 rho{0.2, 0.1, Vec3(0.05, 0.01, 0), 0.9};
        const auto ev = mixed_dual_eval(lam, rho, c1, q2, 1.0, 2.0, g);
        const auto value_at = [&](const Vec<6>& x) {
            return mixed_dual_eval(MixedMultipliers::from_vector(x), rho, c1, q2, 1.0, 2.0, g).value;
        };
        CHECK(relative_error(ev.gradient, central_gradient<6>(value_at, lam.as_vector(), 1e-5)) < 1e-5);
        for (int i = 0; i < 6; ++i) {
            const auto grad_at = [&](const Vec<6>& x) {
                return mixed_dual_eval(MixedMultipliers::from_vector(x), rho, c1, q2, 1.0, 2.0, g).gradient[i];
            };
            CHECK(relative_error(ev.hessian.row(i).transpose(), central_gradient<6>(grad_at, lam.as_vector(), 1e-5)) <
                  1e-5);
        }
    }
}

TEST_CASE("dual domain and overflow errors")
{
    const VelocityGrid g = box(6.0, 8);
    const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
    const MomentVector5 rho{1.0, Vec3::Zero(), 3.0};
    CHECK_THROWS_AS(dual_eval({0.0, Vec3::Zero(), 0.0}, rho, one, 1.0, g), DomainError);
    CHECK_THROWS_AS(dual_eval({0.0, Vec3::Zero(), 0.5}, rho, one, 1.0, g), DomainError);
    CHECK_THROWS_AS(dual_eval({800.0, Vec3::Zero(), -0.5}, rho, one, 1.0, g), DomainError);
    // Large but representable exponents stay finite through the shifted evaluation.
    const auto ev = dual_eval({600.0, Vec3::Zero(), -0.5}, rho, one, 1.0, g);
    CHECK(std::isfinite(ev.value));
    CHECK(ev.hessian.allFinite());
    CHECK_THROWS_AS(dual_eval({0.0, Vec3::Zero(), -0.5}, rho, eval_frequency(ConstantFrequency{1.0}, box(6.0, 9)), 1.0, g),
                    ShapeError);
}

TEST_CASE("property: Hessians are positive definite and gradients consistent")
{
    const VelocityGrid g = box(7.0, 24);
    const FrequencyField soft = eval_frequency(SoftPowerLawFrequency{1.0, 1.0}, g);
    const FrequencyField coul = eval_frequency(CoulombLikeFrequency{1.0}, g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double l2 = -(0.2 + 1.8 * u(rng));
        const Vec3 l1 = 0.4 * Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
        const MixedMultipliers lam{-3.0 * u(rng), -3.0 * u(rng), l1, l2};
        const MixedMomentVector6 rho{0.5, 0.4, Vec3(0.1, 0, 0), 2.0};
        const auto ev = mixed_dual_eval(lam, rho, soft, coul, 1.0, 1.0 + 2.0 * u(rng), g);
        CHECK(ev.hessian.isApprox(ev.hessian.transpose(), 1e-14));
        CHECK(Eigen::LLT<Mat<6>>(ev.hessian).info() == Eigen::Success);
        const auto single = dual_eval(lam.first(), {0.5, Vec3::Zero(), 2.0}, coul, 1.0 + u(rng), g);
        CHECK(Eigen::LLT<Mat<5>>(single.hessian).info() == Eigen::Success);
    }
}

TEST_CASE("solve_single_target")
{
    const NewtonConfig cfg;

    SUBCASE("constant frequency reduces to the analytic Maxwellian")
    {
        const VelocityGrid g = box(6.0);
        const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
        const MomentVector5 rho = weighted_moments(maxwellian(1.0, Vec3::Zero(), 1.0, 1.0, g), one, 1.0, g);
        const SingleTarget sol = solve_single_target(rho, one, 1.0, g, cfg);
        CHECK(sol.report.converged);
        const Multipliers expected = lambda_from_macros(1.0, Vec3::Zero(), 1.0, 1.0);
        CHECK(std::abs(sol.multipliers.lambda0 - expected.lambda0) < 1e-8);
        CHECK(sol.multipliers.lambda1.norm() < 1e-8);
        CHECK(std::abs(sol.multipliers.lambda2 + 0.5) < 1e-8);
        CHECK(sol.multipliers.lambda0 == doctest::Approx(-2.756816).epsilon(1e-6));
    }
    SUBCASE("round trip through the forward map")
    {
        const Multipliers truth{-2.0, Vec3(0.3, -0.1, 0.0), -0.4};
        const ThermalState th = macros_from_lambda(truth, 1.0);
        const VelocityGrid g = grid_for({{th.u, th.T, 1.0}});
        const FrequencyField nu = eval_frequency(SoftPowerLawFrequency{1.0, 2.0}, g);
        const MomentVector5 rho = weighted_moments(eval_exp_lambda(truth, 1.0, g), nu, 1.0, g);
        const SingleTarget sol = solve_single_target(rho, nu, 1.0, g, cfg);
        CHECK((sol.multipliers.as_vector() - truth.as_vector()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(sol.multipliers.lambda2 < 0.0);
    }
    SUBCASE("bimodal input with Coulomb-like weight")
    {
        const VelocityGrid g = grid_for({{Vec3(-1, 0, 0), 0.5, 1.0}, {Vec3(1, 0, 0), 0.5, 1.0}, {Vec3::Zero(), 1.0, 1.0}});
        const FrequencyField nu = eval_frequency(CoulombLikeFrequency{1.0}, g);
        const Field f = 0.5 * maxwellian(1.0, Vec3(-1, 0, 0), 0.5, 1.0, g) + 0.5 * maxwellian(1.0, Vec3(1, 0, 0), 0.5, 1.0, g);
        const MomentVector5 rho = weighted_moments(f, nu, 1.0, g);
        const SingleTarget sol = solve_single_target(rho, nu, 1.0, g, cfg);
        CHECK(sol.report.converged);
        const MomentVector5 back = weighted_moments(eval_exp_lambda(sol.multipliers, 1.0, g), nu, 1.0, g);
        CHECK((back.as_vector() - rho.as_vector()).norm() < 1e-8 * rho.as_vector().norm());
        CHECK(constraint_residual(sol.multipliers, rho, nu, 1.0, g) <= cfg.grad_tol);

        // Descent is monotone and a perturbed start lands on the same minimizer.
        const auto& h = sol.report.objective_history;
        for (std::size_t k = 1; k < h.size(); ++k)
            CHECK(h[k] < h[k - 1]);
        Multipliers start = lambda_from_macros(1.0, Vec3(0.2, 0.1, 0), 0.7, 1.0);
        const SingleTarget other = solve_single_target(rho, nu, 1.0, g, cfg, start);
        CHECK((other.multipliers.as_vector() - sol.multipliers.as_vector()).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("solved target minimizes the weighted entropy among admissible competitors")
{
    const VelocityGrid g = box(6.0, 20);
    const FrequencyField nu = eval_frequency(CoulombLikeFrequency{1.0}, g);
    const double mass = 1.0;
    const Field f = 0.6 * maxwellian(1.0, Vec3(-0.8, 0, 0), 0.6, mass, g) + 0.4 * maxwellian(1.0, Vec3(0.9, 0.3, 0), 0.9, mass, g);
    const MomentVector5 rho = weighted_moments(f, nu, mass, g);
    const SingleTarget sol = solve_single_target(rho, nu, mass, g);
    const Field target = eval_exp_lambda(sol.multipliers, mass, g);
    const double best = weighted_entropy(target, nu, g);

    // Rows of the constraint operator: nu * a(v) * dv.
    Eigen::MatrixXd A(5, g.size());
    A.row(0) = (mass * nu.values * g.cell_volume()).matrix().transpose();
    A.row(1) = (A.row(0).array() * g.vx().transpose());
    A.row(2) = (A.row(0).array() * g.vy().transpose());
    A.row(3) = (A.row(0).array() * g.vz().transpose());
    A.row(4) = (A.row(0).array() * g.speed_sq().transpose());
    const Eigen::MatrixXd gram = A * A.transpose();

    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd p(g.size());
        for (Eigen::Index k = 0; k < p.size(); ++k)
            p[k] = normal(rng) * target[k];
        p -= A.transpose() * gram.ldlt().solve(A * p);
        const double eps = 0.5 / (p.array() / target).abs().maxCoeff();
        const Field competitor = target + eps * p.array();
        REQUIRE((competitor >= 0.0).all());
        CHECK((A * p).norm() < 1e-10 * (A * target.matrix()).norm());
        CHECK(weighted_entropy(competitor, nu, g) >= best - 1e-10);
    }
}

TEST_CASE("solve_mixed_target")
{
    const NewtonConfig cfg;

    SUBCASE("identical Maxwellians with constant frequency")
    {
        const VelocityGrid g = box(6.0);
        const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
        const Field f = maxwellian(1.0, Vec3::Zero(), 1.0, 1.0, g);
        const MixedTarget sol =
            solve_mixed_target(mixed_moment_vector(f, f, one, one, 1.0, 1.0, g), one, one, 1.0, 1.0, g, cfg);
        const Multipliers analytic = lambda_from_macros(1.0, Vec3::Zero(), 1.0, 1.0);
        CHECK(std::abs(sol.multipliers.lambda0_first - sol.multipliers.lambda0_second) < 1e-10);
        CHECK(std::abs(sol.multipliers.lambda0_first - analytic.lambda0) < 1e-8);
        CHECK(sol.multipliers.lambda1.norm() < 1e-10);
        CHECK(std::abs(sol.multipliers.lambda2 + 0.5) < 1e-8);
    }
    SUBCASE("opposite drifts cancel in the shared velocity")
    {
        const VelocityGrid g = grid_for({{Vec3(1, 0, 0), 1.0, 1.0}, {Vec3(-1, 0, 0), 1.0, 1.0}});
        const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);
        const Field f1 = maxwellian(1.0, Vec3(1, 0, 0), 1.0, 1.0, g);
        const Field f2 = maxwellian(1.0, Vec3(-1, 0, 0), 1.0, 1.0, g);
        const MixedMomentVector6 rho = mixed_moment_vector(f1, f2, one, one, 1.0, 1.0, g);
        CHECK(rho.mu1.norm() < 1e-12);
        const MixedTarget sol = solve_mixed_target(rho, one, one, 1.0, 1.0, g, cfg);
        CHECK(sol.multipliers.lambda1.norm() < 1e-10);
    }
    SUBCASE("round trip with unequal masses and frequencies")
    {
        const MixedMultipliers truth{-2.0, -4.0, Vec3(0.2, -0.1, 0.05), -0.6};
        const ThermalState t1 = macros_from_lambda(truth.first(), 1.0);
        const ThermalState t2 = macros_from_lambda(truth.second(), 3.0);
        const VelocityGrid g = grid_for({{t1.u, t1.T, 1.0}, {t2.u, t2.T, 3.0}});
        const FrequencyField nu12 = eval_frequency(SoftPowerLawFrequency{1.0, 1.0}, g);
        const FrequencyField nu21 = eval_frequency(CoulombLikeFrequency{1.0}, g);
        const MixedMomentVector6 rho = mixed_moment_vector(eval_exp_lambda(truth.first(), 1.0, g),
                                                           eval_exp_lambda(truth.second(), 3.0, g), nu12, nu21, 1.0, 3.0, g);
        const MixedTarget sol = solve_mixed_target(rho, nu12, nu21, 1.0, 3.0, g, cfg);
        CHECK((sol.multipliers.as_vector() - truth.as_vector()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(constraint_residual(sol.multipliers, rho, nu12, nu21, 1.0, 3.0, g) <= cfg.grad_tol);
        const auto& h = sol.report.objective_history;
        for (std::size_t k = 1; k < h.size(); ++k)
            CHECK(h[k] < h[k - 1]);

        // Shared drift and curvature give both targets the same velocity and temperature.
        const Macros m1 = macroscopic_moments(eval_exp_lambda(sol.multipliers.first(), 1.0, g), 1.0, g);
        const Macros m2 = macroscopic_moments(eval_exp_lambda(sol.multipliers.second(), 3.0, g), 3.0, g);
        CHECK((m1.u - m2.u).norm() < 1e-6);
        CHECK(std::abs(m1.T - m2.T) < 1e-6);
    }
}

TEST_CASE("solver failures")
{
    const VelocityGrid g = box(6.0, 16);
    const FrequencyField one = eval_frequency(ConstantFrequency{1.0}, g);

    CHECK_THROWS_AS(solve_single_target({0.0, Vec3::Zero(), 1.0}, one, 1.0, g), SolverError);
    CHECK_THROWS_AS(solve_single_target({1.0, Vec3::Zero(), -1.0}, one, 1.0, g), SolverError);
    // |mu1|^2 > mu0 mu2 cannot come from a nonnegative density.
    CHECK_THROWS_AS(solve_single_target({1.0, Vec3(2, 0, 0), 1.0}, one, 1.0, g), SolverError);

    NewtonConfig tight;
    tight.max_iter = 1;
    const Field f = 0.5 * maxwellian(1.0, Vec3(-2, 0, 0), 0.3, 1.0, g) + 0.5 * maxwellian(1.0, Vec3(2, 0, 0), 0.3, 1.0, g);
    try {
        solve_single_target(weighted_moments(f, one, 1.0, g), one, 1.0, g, tight, Multipliers{-5.0, Vec3::Zero(), -2.0});
        FAIL("expected a solver failure");
    }
    catch (const SolverError& e) {
        CHECK_FALSE(e.report().converged);
        CHECK(e.report().iterations == 1);
        CHECK(std::string(e.category()) == "solver");
    }

    NewtonConfig bad;
    bad.armijo_c = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.max_iter = 0;
    CHECK_THROWS_AS(solve_single_target(weighted_moments(f, one, 1.0, g), one, 1.0, g, bad), ConfigError);
}
