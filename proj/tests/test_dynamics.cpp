#include "bgk/simulate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bgk;

namespace {

std::shared_ptr<const VelocityGrid> shared_grid(std::initializer_list<ThermalSpec> specs, double c = 6.0, int n = 32)
{
    const std::vector<ThermalSpec> v(specs);
    const auto b = auto_bounds(v, c);
    return std::make_shared<const VelocityGrid>(b.v_min, b.v_max, std::array<int, 3>{n, n, n});
}

Field bimodal(const VelocityGrid& g, double m = 1.0)
{
    return 0.5 * maxwellian(1.0, Vec3(-1, 0, 0), 0.5, m, g) + 0.5 * maxwellian(1.0, Vec3(1, 0, 0), 0.5, m, g);
}

double l1(const Field& a, const VelocityGrid& g) { return integrate(a.abs(), g); }

MixtureState two_species(std::shared_ptr<const VelocityGrid> g, FrequencyModel cross, FrequencyModel self = ConstantFrequency{1.0})
{
    return make_state(g, {{"a", 1.0, 0}, {"b", 2.0, 1}},
                      {maxwellian(1.0, Vec3(1, 0, 0), 1.0, 1.0, *g), maxwellian(1.0, Vec3(-1, 0, 0), 2.0, 2.0, *g)},
                      {self, cross, cross, self});
}

} // namespace

TEST_CASE("make_state and validation")
{
    auto g = shared_grid({{Vec3::Zero(), 1.0, 1.0}}, 6.0, 8);
    const Field m = maxwellian(1.0, Vec3::Zero(), 1.0, 1.0, *g);
    CHECK_THROWS_AS(make_state(g, {{"a", 1.0, 0}}, {m}, {}), ConfigError);
    CHECK_THROWS_AS(make_state(g, {{"a", -1.0, 0}}, {m}, {ConstantFrequency{1.0}}), ConfigError);
    CHECK_THROWS_AS(make_state(g, {{"a", 1.0, 0}}, {m}, {ConstantFrequency{0.0}}), ConfigError);
    CHECK_THROWS_AS(make_state(g, {{"a", 1.0, 0}}, {Field(m.head(5))}, {ConstantFrequency{1.0}}), ShapeError);
    CHECK_THROWS_AS(make_state(g, {{"a", 1.0, 0}}, {-m}, {ConstantFrequency{1.0}}), DegenerateInputError);
    const MixtureState s = make_state(g, {{"a", 1.0, 0}}, {m}, {SoftPowerLawFrequency{2.0, 1.0}});
    CHECK(s.nu(0, 0).values.minCoeff() > 0.0);
}

TEST_CASE("build_targets")
{
    SUBCASE("Maxwellian is its own target")
    {
        auto g = shared_grid({{Vec3(0.5, 0, 0), 1.0, 1.0}});
        const Field m = eval_exp_lambda(lambda_from_macros(1.0, Vec3(0.5, 0, 0), 1.0, 1.0), 1.0, *g);
        const MixtureState s = make_state(g, {{"a", 1.0, 0}}, {m}, {ConstantFrequency{1.0}});
        const TargetSet t = build_targets(s);
        CHECK(((t.target(0, 0) - m).abs() / m).maxCoeff() < 1e-8);
        CHECK(t.residual(0, 0) <= NewtonConfig{}.grad_tol);
    }
    SUBCASE("identical species give identical cross targets")
    {
        auto g = shared_grid({{Vec3::Zero(), 1.0, 1.0}});
        const Field f = bimodal(*g);
        const MixtureState s = make_state(g, {{"a", 1.0, 0}, {"b", 1.0, 1}}, {f, f},
                                          std::vector<FrequencyModel>(4, CoulombLikeFrequency{1.0}));
        const TargetSet t = build_targets(s);
        CHECK(((t.target(0, 1) - t.target(1, 0)).abs() / t.target(0, 1)).maxCoeff() < 1e-8);
        CHECK(t.multipliers(0, 1).lambda1 == t.multipliers(1, 0).lambda1);
    }
    SUBCASE("constant frequency matches the closed-form Gaussian mixture")
    {
        auto g = shared_grid({{Vec3(1, 0, 0), 1.0, 1.0}, {Vec3(-1, 0, 0), 2.0, 2.0}, {Vec3(-1.0 / 3, 0, 0), 35.0 / 18, 1.0},
                              {Vec3(-1.0 / 3, 0, 0), 35.0 / 18, 2.0}},
                             8.0);
        const MixtureState s = two_species(g, ConstantFrequency{1.0});
        const TargetSet t = build_targets(s);

        // Shared u, T from total momentum and energy of two Gaussians:
        // u = (1 - 2) / 3, and 3 T + |u|^2 / 2 * 3 = E_1 + E_2 = 2 + 4.
        const Vec3 u_ref(-1.0 / 3, 0, 0);
        const double T_ref = (6.0 - 0.5 * 3.0 / 9.0) / 3.0;
        const ThermalState a = macros_from_lambda(t.multipliers(0, 1), 1.0);
        const ThermalState b = macros_from_lambda(t.multipliers(1, 0), 2.0);
        CHECK((a.u - u_ref).norm() < 1e-8);
        CHECK((b.u - u_ref).norm() < 1e-8);
        CHECK(std::abs(a.T - T_ref) < 1e-8);
        CHECK(std::abs(b.T - T_ref) < 1e-8);
        CHECK(std::abs(a.n - 1.0) < 1e-8);
        CHECK(std::abs(b.n - 1.0) < 1e-8);
        CHECK(t.residual(0, 1) <= NewtonConfig{}.grad_tol);
    }
    SUBCASE("solver failures name the pair and time")
    {
        auto g = shared_grid({{Vec3::Zero(), 1.0, 1.0}}, 6.0, 16);
        MixtureState s = make_state(g, {{"a", 1.0, 0}}, {bimodal(*g)}, {CoulombLikeFrequency{1.0}});
        s.time = 2.5;
        NewtonConfig cfg;
        cfg.max_iter = 1;
        try {
            build_targets(s, cfg);
            FAIL("expected a solver failure");
        }
        catch (const SolverError& e) {
            CHECK(std::string(e.what()).find("[pair (1,1), t=2.5]") != std::string::npos);
        }
    }
}

TEST_CASE("bgk_rhs")
{
    auto g = shared_grid({{Vec3(0.2, 0, 0), 1.0, 1.0}, {Vec3(0.2, 0, 0), 1.0, 3.0}});
    SUBCASE("global equilibrium")
    {
        const MixtureState s = make_state(g, {{"a", 1.0, 0}, {"b", 3.0, 1}},
                                          {maxwellian(1.0, Vec3(0.2, 0, 0), 1.0, 1.0, *g),
                                           maxwellian(0.5, Vec3(0.2, 0, 0), 1.0, 3.0, *g)},
                                          {ConstantFrequency{1.0}, CoulombLikeFrequency{1.0}, SoftPowerLawFrequency{1, 1},
                                           ConstantFrequency{2.0}});
        const auto q = bgk_rhs(s, build_targets(s));
        for (std::size_t i = 0; i < 2; ++i)
            CHECK(q[i].abs().maxCoeff() < 1e-8 * s.f[i].maxCoeff());
    }
    SUBCASE("nodewise expansion")
    {
        const MixtureState s = make_state(g, {{"a", 1.0, 0}, {"b", 3.0, 1}}, {bimodal(*g), bimodal(*g, 3.0)},
                                          {ConstantFrequency{1.0}, CoulombLikeFrequency{1.0}, SoftPowerLawFrequency{1, 1},
                                           ConstantFrequency{2.0}});
        const TargetSet t = build_targets(s);
        const auto q = bgk_rhs(s, t);
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<Eigen::Index> pick(0, g->size() - 1);
        for (int k = 0; k < 5; ++k) {
            const Eigen::Index v = pick(rng);
            const double by_hand = s.nu(0, 0).values[v] * (t.target(0, 0)[v] - s.f[0][v]) +
                                   s.nu(0, 1).values[v] * (t.target(0, 1)[v] - s.f[0][v]);
            CHECK(q[0][v] == doctest::Approx(by_hand).epsilon(1e-14));
        }
        TargetSet wrong = t;
        wrong.targets[1] = Field::Zero(3);
        CHECK_THROWS_AS(bgk_rhs(s, wrong), ShapeError);
    }
}

TEST_CASE("time stepping")
{
    auto g = shared_grid({{Vec3::Zero(), 1.0, 1.0}, {Vec3(-1, 0, 0), 0.5, 1.0}, {Vec3(1, 0, 0), 0.5, 1.0}}, 6.0, 24);
    const MixtureState relax = make_state(g, {{"a", 1.0, 0}}, {bimodal(*g)}, {ConstantFrequency{1.0}});

    SUBCASE("limits")
    {
        CHECK(explicit_step_limit(relax) == doctest::Approx(1.0));
        CHECK(default_time_step(relax) == doctest::Approx(0.1));
        CHECK(std::string(to_string(TimeScheme::semi_implicit)) == "semi_implicit");
    }
    SUBCASE("equilibrium is a fixed point of both schemes")
    {
        const MixtureState eq =
            make_state(g, {{"a", 1.0, 0}}, {maxwellian(1.0, Vec3::Zero(), 1.0, 1.0, *g)}, {CoulombLikeFrequency{1.0}});
        for (TimeScheme scheme : {TimeScheme::explicit_euler, TimeScheme::semi_implicit}) {
            const MixtureState next = step(eq, 0.1, scheme);
            CHECK(next.time == doctest::Approx(0.1));
            CHECK(((next.f[0] - eq.f[0]).abs()).maxCoeff() < 1e-9 * eq.f[0].maxCoeff());
        }
    }
    SUBCASE("explicit Euler follows the exponential relaxation")
    {
        MixtureState s = relax;
        TargetSet used;
        s = step(s, 0.01, TimeScheme::explicit_euler, {}, nullptr, &used);
        const Field m = used.target(0, 0);
        const double d0 = l1(relax.f[0] - m, *g);
        for (int k = 1; k < 100; ++k)
            s = step(s, 0.01, TimeScheme::explicit_euler, {}, &used, &used);
        CHECK(((used.target(0, 0) - m).abs() / m).maxCoeff() < 1e-6);
        const double ratio = l1(s.f[0] - m, *g) / d0;
        CHECK(std::abs(ratio / std::exp(-1.0) - 1.0) < 0.02);
    }
    SUBCASE("semi-implicit with a large step")
    {
        TargetSet used;
        const MixtureState next = step(relax, 10.0, TimeScheme::semi_implicit, {}, nullptr, &used);
        const Field& m = used.target(0, 0);
        const Field closed = (relax.f[0] + 10.0 * m) / 11.0;
        CHECK(((next.f[0] - closed).abs()).maxCoeff() <= 1e-15 * closed.maxCoeff());
        CHECK((next.f[0] >= 0.0).all());
        CHECK(((next.f[0] - m).abs() <= (relax.f[0] - m).abs()).all());
        CHECK((((next.f[0] - m) * (relax.f[0] - m)) >= 0.0).all());
    }
    SUBCASE("explicit step beyond the positivity limit")
    {
        try {
            step(relax, 1.5, TimeScheme::explicit_euler);
            FAIL("expected a step-size error");
        }
        catch (const StepSizeError& e) {
            CHECK(std::string(e.what()).find("node") != std::string::npos);
            CHECK(std::string(e.category()) == "step-size");
        }
        CHECK_THROWS_AS(step(relax, 0.0, TimeScheme::semi_implicit), StepSizeError);
    }
}

TEST_CASE("simulate")
{
    auto g = shared_grid({{Vec3(1, 0, 0), 1.0, 1.0}, {Vec3(-1, 0, 0), 2.0, 2.0}, {Vec3(-1.0 / 3, 0, 0), 35.0 / 18, 1.0}}, 6.0,
                         24);
    const MixtureState s0 = two_species(g, ConstantFrequency{1.0});

    SUBCASE("zero horizon records once")
    {
        const auto recs = simulate(s0, {0.1, 0.0});
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].t == 0.0);
    }
    SUBCASE("cadence and shortened final step")
    {
        int calls = 0;
        MixtureState last;
        SimulationOptions opt{0.1, 0.55};
        opt.record_every = 2;
        const auto recs = simulate(s0, opt, [&](const MixtureState&, const TargetSet&, const DiagnosticsRecord&) { ++calls; }, &last);
        REQUIRE(recs.size() == 4);
        CHECK(calls == 4);
        CHECK(recs[1].t == doctest::Approx(0.2));
        CHECK(recs[2].t == doctest::Approx(0.4));
        CHECK(recs.back().t == 0.55);
        CHECK(last.time == 0.55);
        CHECK_THROWS_AS(simulate(s0, {0.0, 1.0}), ConfigError);
        CHECK_THROWS_AS(simulate(s0, {0.1, -1.0}), ConfigError);
    }
    SUBCASE("conservation and relaxation with constant frequencies")
    {
        const auto recs = simulate(s0, {0.05, 20.0});
        const DiagnosticsRecord& a = recs.front();
        const DiagnosticsRecord& z = recs.back();
        CHECK((z.momentum - a.momentum).norm() < 1e-8 * a.momentum.norm());
        CHECK(std::abs(z.energy - a.energy) < 1e-8 * a.energy);
        double du = 1e300, dT = 1e300;
        for (const auto& r : recs) {
            const double du_k = (r.species[0].u - r.species[1].u).norm();
            const double dT_k = std::abs(r.species[0].T - r.species[1].T);
            CHECK(du_k <= du);
            CHECK(dT_k <= dT + 1e-12);
            du = du_k;
            dT = dT_k;
        }
        CHECK(du < 1e-6);
        CHECK(dT < 1e-6);
    }
}
