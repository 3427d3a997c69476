#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using namespace thermoscope;

namespace {

struct BernoulliSetup {
    ShiftSpace f = ShiftSpace::full(2);
    PotentialSequence phi = PotentialSequence::constant(f, -std::log(2.0));
    PotentialSequence psi = PotentialSequence::indicator(f, 1);
};

} // namespace

TEST(UniformGrid, EndpointsAndZero)
{
    const auto t = uniform_grid(-20, 20, 0.01);
    ASSERT_EQ(t.size(), 4001u);
    EXPECT_EQ(t.front(), -20.0);
    EXPECT_EQ(t.back(), 20.0);
    EXPECT_EQ(t[2000], 0.0);
    EXPECT_THROW(uniform_grid(1, 0, 0.1), ValidationError);
}

TEST(RateFunction, FairCoinClosedForm)
{
    BernoulliSetup b;
    const auto curve = free_energy_curve(b.f, b.phi, b.psi, uniform_grid(-20, 20, 0.01));
    EXPECT_NEAR(curve.P_phi, 0.0, 1e-15);
    EXPECT_NEAR(curve.mean, 0.5, 1e-15);
    const auto rate = legendre_transform(curve, interior_grid(SpectrumInterval{0.0, 1.0}, 201));
    ASSERT_EQ(rate.s_grid().size(), 201u);
    EXPECT_TRUE(rate.rejected().empty());
    for (std::size_t i = 0; i < rate.s_grid().size(); ++i) {
        const double s = rate.s_grid()[i];
        EXPECT_NEAR(rate.I()[i], oracle::bernoulli_rate(s), 1e-5) << "s=" << s;
    }
    EXPECT_THROW(rate.value(1.5), DomainError);
    EXPECT_THROW(rate.value(-0.01), DomainError);
}

TEST(RateFunction, ConjugateDualityProperties)
{
    gen::Rng rng(51);
    for (int trial = 0; trial < 8; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto phi = gen::real_additive(rng, s, 2);
        const auto psi = gen::real_additive(rng, s, 1);
        const auto curve = free_energy_curve(s, phi, psi, uniform_grid(-10, 10, 0.02));
        const auto probe = legendre_transform(curve, {});
        const auto rate = legendre_transform(curve, interior_grid(probe.domain(), 101));
        if (rate.degenerate())
            continue;
        // I >= 0 with I(mean) ~ 0, and I convex on the grid.
        for (double v : rate.I())
            EXPECT_GE(v, -1e-12);
        EXPECT_NEAR(rate.value(rate.mean()), 0.0, rate.grid_modulus() + 1e-12);
        for (std::size_t i = 1; i + 1 < rate.I().size(); ++i)
            EXPECT_GE(rate.I()[i - 1] - 2 * rate.I()[i] + rate.I()[i + 1], -1e-12);
        // Young: I(s) + E(t) >= s t at every grid pair.
        for (std::size_t i = 0; i < rate.s_grid().size(); i += 10)
            for (std::size_t j = 0; j < curve.t.size(); j += 50)
                EXPECT_GE(rate.I()[i] + curve.E[j], rate.s_grid()[i] * curve.t[j] - 1e-12);
        EXPECT_LE(variational_property_residual(curve, rate).residual, 1e-9);
        EXPECT_LE(variational_formula_check(s, phi, psi, rate, {-1, 0, 0.5, 2}), 1e-9);
    }
}

TEST(FreeEnergy, DerivativeMatchesFiniteDifferences)
{
    gen::Rng rng(52);
    for (int trial = 0; trial < 8; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto phi = gen::real_additive(rng, s, 2);
        const auto psi = gen::real_additive(rng, s, 2);
        const double h = 1e-4;
        for (double t : {-2.0, -0.3, 0.0, 1.1}) {
            const auto c = free_energy_curve(s, phi, psi, {t - h, t, t + h});
            EXPECT_NEAR(c.Eprime[1], (c.E[2] - c.E[0]) / (2 * h), 1e-7);
            // E is convex in t.
            EXPECT_GE(c.E[0] - 2 * c.E[1] + c.E[2], -1e-13);
        }
    }
}

TEST(RateFunction, ScalingCovariance)
{
    gen::Rng rng(53);
    const auto s = ShiftSpace::golden_mean();
    const auto phi = gen::real_additive(rng, s, 2);
    const auto psi = gen::rational_additive(rng, s, 1);
    const double a = 2.0;
    const auto scaled = PotentialSequence::affine(PotentialSequence::constant(s, 0.0), psi, a);
    const auto t = uniform_grid(-10, 10, 0.02);
    std::vector<double> t_over_a;
    for (double x : t)
        t_over_a.push_back(x / a);
    const auto c1 = free_energy_curve(s, phi, psi, t);
    const auto c2 = free_energy_curve(s, phi, scaled, t_over_a);
    const auto r1 = legendre_transform(c1, {});
    const auto r2 = legendre_transform(c2, {});
    EXPECT_NEAR(r2.domain().lo, a * r1.domain().lo, 1e-12);
    EXPECT_NEAR(r2.domain().hi, a * r1.domain().hi, 1e-12);
    for (double x : interior_grid(r1.domain(), 25))
        EXPECT_NEAR(r2.value(a * x), r1.value(x), 1e-10);
}

TEST(RateFunction, DegenerateWhenPsiIsCohomologousToConstant)
{
    const auto f = ShiftSpace::full(2);
    const auto cob = PotentialSequence::additive_from(f, 2, [](std::span<const Symbol> w) {
        return Rational(int(w[1] == 1) - int(w[0] == 1)) + Rational(1, 4);
    });
    const auto curve = free_energy_curve(f, PotentialSequence::constant(f, 0.0), cob, uniform_grid(-5, 5, 0.5));
    const auto rate = legendre_transform(curve, {0.25, 0.3});
    EXPECT_TRUE(rate.degenerate());
    EXPECT_NEAR(rate.mean(), 0.25, 1e-12);
    EXPECT_TRUE(variational_property_residual(curve, rate).degenerate);
    EXPECT_TRUE(strict_convexity_window(rate).degenerate);
}

TEST(RateFunction, ConvexityWindowAndWindowMinimum)
{
    BernoulliSetup b;
    const auto curve = free_energy_curve(b.f, b.phi, b.psi, uniform_grid(-20, 20, 0.01));
    const auto rate = legendre_transform(curve, interior_grid(SpectrumInterval{0.0, 1.0}, 201));
    const auto w = strict_convexity_window(rate);
    ASSERT_TRUE(w.window.has_value());
    EXPECT_LT(w.window->lo, 0.05);
    EXPECT_GT(w.window->hi, 0.95);

    const auto inside = min_over_window(rate, 0.4, 0.6);
    EXPECT_EQ(inside.c_star, 0.5);
    EXPECT_EQ(inside.value, 0.0);
    const auto right = min_over_window(rate, 0.7, 1.0);
    EXPECT_EQ(right.c_star, 0.7);
    EXPECT_NEAR(right.value, oracle::bernoulli_rate(0.7), 1e-5);
    const auto left = min_over_window(rate, 0.1, 0.2);
    EXPECT_EQ(left.c_star, 0.2);
    EXPECT_THROW(min_over_window(rate, 1.2, 1.5), DomainError);
    EXPECT_THROW(min_over_window(rate, 0.6, 0.5), ValidationError);
}

TEST(FreeEnergy, NonAdditiveInputsAreRefused)
{
    const auto f = ShiftSpace::full(2);
    const std::vector<Matrix> ms{Matrix{{1, 1}, {0, 1}}, Matrix{{1, 0}, {1, 1}}};
    EXPECT_THROW(free_energy_curve(f, PotentialSequence::constant(f, 0.0), PotentialSequence::cocycle_norm(ms, 1.0), {0.0}),
                 DomainError);
    EXPECT_THROW(free_energy_curve(f, PotentialSequence::constant(f, 0.0), PotentialSequence::indicator(f, 0), {1.0, 0.0}),
                 ValidationError);
}

TEST(FreeEnergy, ThreadCountDoesNotChangeValues)
{
    gen::Rng rng(54);
    const auto s = gen::shift(rng, 3);
    const auto phi = gen::real_additive(rng, s, 2);
    const auto psi = gen::real_additive(rng, s, 2);
    const auto t = uniform_grid(-3, 3, 0.05);
    const auto a = free_energy_curve(s, phi, psi, t, Executor(1));
    const auto b = free_energy_curve(s, phi, psi, t, Executor(4));
    EXPECT_EQ(a.E, b.E);
    EXPECT_EQ(a.Eprime, b.Eprime);
}
