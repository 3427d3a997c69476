#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using namespace thermoscope;

namespace {

// log spectral radius of M(a, b) = exp(g(ab)) on admissible pairs, straight from Eigen.
double range_two_pressure_oracle(const ShiftSpace& s, const AdditiveLocallyConstant& g)
{
    const int l = s.alphabet_size();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(l, l);
    for (int a = 0; a < l; ++a)
        for (int b = 0; b < l; ++b)
            if (s.allowed(a, b)) {
                const std::vector<Symbol> w{static_cast<Symbol>(a), static_cast<Symbol>(b)};
                M(a, b) = std::exp(g.at(w));
            }
    return std::log(Eigen::EigenSolver<Eigen::MatrixXd>(M).eigenvalues().cwiseAbs().maxCoeff());
}

} // namespace

TEST(Pressure, ClosedForms)
{
    const double golden = (1 + std::sqrt(5.0)) / 2;
    const auto g = ShiftSpace::golden_mean();
    EXPECT_NEAR(pressure_exact(g, PotentialSequence::constant(g, 0.0)), std::log(golden), 1e-14);
    EXPECT_NEAR(pressure_exact(ShiftSpace::full(3), PotentialSequence::constant(ShiftSpace::full(3), 0.25)),
                std::log(3.0) + 0.25, 1e-14);
    // Range 1 on a full shift: log sum_a e^{g(a)}.
    const auto f = ShiftSpace::full(2);
    const auto p = PotentialSequence::additive(f, 1, {{"0", Rational(1, 2)}, {"1", Rational(-3, 4)}});
    EXPECT_NEAR(pressure_exact(f, p), std::log(std::exp(0.5) + std::exp(-0.75)), 1e-14);
}

TEST(Pressure, MatchesSpectralRadiusOracle)
{
    gen::Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = gen::shift(rng, 4);
        const auto p = gen::real_additive(rng, s, 2, -3, 3);
        const double expected = range_two_pressure_oracle(s, *p.as<AdditiveLocallyConstant>());
        EXPECT_NEAR(pressure_exact(s, p), expected, 1e-12);
    }
}

TEST(Pressure, InvariantUnderLiftingAndShifts)
{
    gen::Rng rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto p = gen::real_additive(rng, s, 2);
        const auto& g = *p.as<AdditiveLocallyConstant>();
        const double base = pressure_exact(s, g);
        EXPECT_NEAR(pressure_exact(s, lift(s, g, 4)), base, 1e-12);
        EXPECT_NEAR(pressure_exact(s, PotentialSequence::affine(p, PotentialSequence::constant(s, 1.0), 0.5)),
                    base + 0.5, 1e-12);
    }
}

TEST(Pressure, NonAdditiveIsDomainError)
{
    const auto f = ShiftSpace::full(2);
    const std::vector<Matrix> ms{Matrix{{1, 1}, {0, 1}}, Matrix{{1, 0}, {1, 1}}};
    EXPECT_THROW(pressure_exact(f, PotentialSequence::cocycle_norm(ms, 1.0)), DomainError);
}

TEST(PressureBracket, CollatzWielandtContainsExact)
{
    gen::Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto p = gen::real_additive(rng, s, 2, -2, 2);
        const double exact = pressure_exact(s, p);
        double previous = INFINITY;
        for (int n : {2, 4, 8, 16, 32}) {
            const auto b = pressure_bracket(s, p, n, 0.0);
            ASSERT_TRUE(b.lower.has_value());
            EXPECT_LE(*b.lower, exact + 1e-12);
            EXPECT_GE(b.upper, exact - 1e-12);
            EXPECT_LE(b.width(), previous + 1e-12);
            previous = b.width();
            EXPECT_EQ(b.method, "collatz-wielandt");
        }
        EXPECT_LT(previous, 1e-2); // geometric in |lambda_2 / lambda_1|, slow for small gaps
    }
}

TEST(PressureBracket, FeketeForCocycleNorm)
{
    const auto f = ShiftSpace::full(2);
    // Scalar matrices: ||M_w|| is a product, so a_n = n log 5.
    const std::vector<Matrix> scalar{Matrix{{2, 0}, {0, 2}}, Matrix{{3, 0}, {0, 3}}};
    const auto b = pressure_bracket(f, PotentialSequence::cocycle_norm(scalar, 1.0), 10, 0.5);
    EXPECT_EQ(b.method, "fekete");
    EXPECT_NEAR(b.upper, std::log(5.0), 1e-12);
    ASSERT_TRUE(b.lower.has_value());
    EXPECT_NEAR(*b.lower, std::log(5.0) - 0.05, 1e-12);

    // Non-full base: no lower bound.
    const auto g = ShiftSpace::golden_mean();
    const auto c = pressure_bracket(g, PotentialSequence::cocycle_norm(scalar, 1.0), 10, 0.5);
    EXPECT_FALSE(c.lower.has_value());
    EXPECT_THROW(pressure_bracket(f, PotentialSequence::cocycle_norm(scalar, 1.0), 30, 0.0), BudgetExceeded);
}

TEST(Equilibrium, BernoulliIsItsOwnEquilibriumState)
{
    const auto f = ShiftSpace::full(2);
    const auto phi = PotentialSequence::additive_from(f, 1, [](std::span<const Symbol> w) {
        return std::log(w[0] == 0 ? 1.0 / 3 : 2.0 / 3);
    });
    EXPECT_NEAR(pressure_exact(f, phi), 0.0, 1e-15);
    const auto mu = equilibrium_measure(f, phi);
    EXPECT_NEAR(mu.Q()(0, 0), 1.0 / 3, 1e-14);
    EXPECT_NEAR(mu.Q()(1, 1), 2.0 / 3, 1e-14);
    EXPECT_NEAR(entropy(mu), oracle::binary_entropy(1.0 / 3), 1e-14);
    const auto cert = gibbs_certificate(f, mu, phi, 0.0, 12);
    EXPECT_NEAR(cert.K_measured, 1.0, 1e-12);
}

TEST(Equilibrium, VariationalPrincipleAndGibbsProperty)
{
    gen::Rng rng(44);
    for (int trial = 0; trial < 15; ++trial) {
        const auto s = gen::shift(rng, 3);
        const int range = rng.uniform_int(1, 3);
        const auto p = gen::real_additive(rng, s, range, -2, 2);
        const auto& g = *p.as<AdditiveLocallyConstant>();
        const double P = pressure_exact(s, p);
        const auto mu = equilibrium_measure(s, p);
        // h(mu) + int phi dmu = P(phi)
        EXPECT_NEAR(entropy(mu) + integrate(s, g, mu), P, 1e-11);
        // Shift invariance and normalisation.
        for (int n = 1; n <= 5; ++n) {
            double total = 0;
            for (const auto& w : oracle::all_words(s, n)) {
                total += mu.cylinder(w);
                double left = 0;
                for (int a = 0; a < s.alphabet_size(); ++a) {
                    std::vector<Symbol> x{static_cast<Symbol>(a)};
                    x.insert(x.end(), w.begin(), w.end());
                    if (s.admissible(x))
                        left += mu.cylinder(x);
                }
                EXPECT_NEAR(left, mu.cylinder(w), 1e-13);
            }
            EXPECT_NEAR(total, 1.0, 1e-13);
        }
        // Gibbs constant stays bounded as n grows.
        const auto cert = gibbs_certificate(s, mu, p, P, 14);
        EXPECT_TRUE(std::isfinite(cert.K_measured));
        EXPECT_LE(cert.K_by_length.back(), cert.K_measured);
        EXPECT_NEAR(cert.K_by_length[12], cert.K_by_length[13], 1e-9 * cert.K_measured);
    }
}

TEST(Equilibrium, ZeroPotentialGivesParryMeasure)
{
    const auto g = ShiftSpace::golden_mean();
    const double phi = (1 + std::sqrt(5.0)) / 2;
    const auto mu = equilibrium_measure(g, PotentialSequence::constant(g, 0.0));
    EXPECT_NEAR(mu.Q()(0, 0), 1 / phi, 1e-14);
    EXPECT_NEAR(mu.Q()(0, 1), 1 / (phi * phi), 1e-14);
    EXPECT_NEAR(mu.pi()(0), phi * phi / (1 + phi * phi), 1e-14);
    EXPECT_NEAR(entropy(mu), std::log(phi), 1e-14);
}

TEST(Kingman, AdditiveMatchesIntegralAndSubadditiveDecreases)
{
    const auto f = ShiftSpace::full(2);
    gen::Rng rng(45);
    const auto p = gen::real_additive(rng, f, 2);
    const auto mu = gen::markov(rng, f, 1);
    const double integral = integrate(f, *p.as<AdditiveLocallyConstant>(), mu);
    for (int n : {1, 4, 9})
        EXPECT_NEAR(kingman_functional(f, p, mu, n), integral, 1e-13);

    const std::vector<Matrix> ms{Matrix{{2, 1}, {0, 1}}, Matrix{{1, 0}, {1, 2}}};
    const auto cn = PotentialSequence::cocycle_norm(ms, 1.0);
    double previous = INFINITY;
    for (int n : {1, 2, 4, 8, 16}) {
        const double v = kingman_functional(f, cn, mu, n);
        EXPECT_LE(v, previous + 1e-12); // subadditive sequence along doubling
        previous = v;
    }
    const auto k = kingman_bracket(f, cn, mu, 16, 1.0);
    EXPECT_NEAR(k.upper - k.lower, 2.0 / 16, 1e-15);
}
