#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using namespace thermoscope;

namespace {

MarkovMeasure fair_coin()
{
    return MarkovMeasure::bernoulli(ShiftSpace::full(2), {Rational(1, 2), Rational(1, 2)});
}

// Brute-force mu(psi_n / n in W) with exact sums, straight from the table.
Rational brute_force(const ShiftSpace& s, const MarkovMeasure& m, const AdditiveLocallyConstant& g,
                     const DeviationWindow& W, int n)
{
    Rational total = 0;
    const auto parts = exact_parts(W);
    for (const auto& w : oracle::all_words(s, n + g.range - 1)) {
        Rational sum = 0;
        for (int j = 0; j < n; ++j)
            sum += g.exact[g.code(std::span<const Symbol>(w).subspan(static_cast<std::size_t>(j),
                                                                     static_cast<std::size_t>(g.range)))];
        sum /= n;
        bool in = false;
        for (const auto& p : parts)
            in = in || p.contains(sum);
        if (in)
            total += static_cast<int>(w.size()) >= m.order() ? oracle::cylinder(m, w) : m.cylinder_exact(w);
    }
    return total;
}

} // namespace

TEST(DeviationWindow, Construction)
{
    EXPECT_THROW(DeviationWindow::closed(0.6, 0.4), ValidationError);
    EXPECT_THROW(DeviationWindow::two_sided(0.5, 0.0), ValidationError);
    EXPECT_THROW(DeviationWindow::closed(0.4, 0.6, -0.1), ValidationError);
    const auto w = DeviationWindow::two_sided(0.5, 0.2, 0.01);
    EXPECT_TRUE(w.contains(0.31));
    EXPECT_TRUE(w.contains(0.69));
    EXPECT_FALSE(w.contains(0.5));
    EXPECT_TRUE(w.contains(-100.0));
}

TEST(Deviation, FairCoinMatchesBinomialTail)
{
    const auto f = ShiftSpace::full(2);
    const auto m = fair_coin();
    const auto psi = PotentialSequence::indicator(f, 1);
    const std::vector<int> ns{1, 2, 7, 10, 33, 100, 250};
    const auto series = exact_deviation_series(f, m, psi, DeviationWindow::closed(0.7, 1.0), ns);
    EXPECT_EQ(series.method, "dp-exact");
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const int n = ns[i];
        const int k0 = static_cast<int>(ceil_rational(Rational(7 * n, 10)));
        ASSERT_TRUE(series.prob_exact[i].has_value());
        EXPECT_EQ(*series.prob_exact[i], oracle::binomial_tail(n, k0)) << "n=" << n;
        EXPECT_NEAR(series.slope[i], log_rational(oracle::binomial_tail(n, k0)) / n, 1e-12);
    }
}

TEST(Deviation, DynamicProgramMatchesEnumerationExactly)
{
    gen::Rng rng(61);
    Enumeration en;
    en.budget = 16;
    for (int trial = 0; trial < 25; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto m = gen::markov(rng, s, rng.uniform_int(1, 2));
        const auto p = gen::rational_additive(rng, s, rng.uniform_int(1, 3));
        const auto& g = *p.as<AdditiveLocallyConstant>();
        const auto spectrum = spectrum_interval(s, g);
        const auto W = rng.coin() ? gen::window(rng, spectrum.lo, spectrum.hi)
                                  : DeviationWindow::two_sided(rng.uniform(spectrum.lo, spectrum.hi), 0.25, 0.05);
        std::vector<int> ns;
        for (int n = 1; n + g.range - 1 <= 11; ++n)
            ns.push_back(n);
        const auto series = exact_deviation_series(s, m, g, W, ns, en);
        for (std::size_t i = 0; i < ns.size(); ++i) {
            ASSERT_TRUE(series.prob_exact[i].has_value());
            const Rational expected = brute_force(s, m, g, W, ns[i]);
            ASSERT_EQ(*series.prob_exact[i], expected) << "trial " << trial << " n=" << ns[i];
            EXPECT_EQ(*enumerate_deviation_exact(s, m, g, W, ns[i], en), expected);
        }
    }
}

TEST(Deviation, FloatMassesMatchEnumeration)
{
    gen::Rng rng(62);
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = gen::shift(rng, 3);
        const auto m = gen::markov_float(rng, s, 1);
        const auto p = gen::rational_additive(rng, s, 2);
        const auto& g = *p.as<AdditiveLocallyConstant>();
        const auto spectrum = spectrum_interval(s, g);
        const auto W = gen::window(rng, spectrum.lo, spectrum.hi);
        const auto series = exact_deviation_series(s, m, g, W, {8, 12});
        EXPECT_EQ(series.method, "dp-float-mass");
        EXPECT_NEAR(series.prob[0], enumerate_deviation(s, m, g, W, 8), 1e-13);
        EXPECT_NEAR(series.prob[1], enumerate_deviation(s, m, g, W, 12), 1e-13);
    }
}

TEST(Deviation, IrrationalTablesEnumerateThenRefuse)
{
    const auto f = ShiftSpace::full(2);
    const auto psi = PotentialSequence::additive_from(f, 1, [](std::span<const Symbol> w) {
        return w[0] == 1 ? std::sqrt(2.0) : 0.0;
    });
    const auto W = DeviationWindow::closed(1.0, 2.0);
    const auto series = exact_deviation_series(f, fair_coin(), psi, W, {4, 10});
    EXPECT_EQ(series.method, "enumeration");
    // sqrt(2) k / 10 >= 1 iff k >= 8.
    EXPECT_NEAR(series.prob[1], to_double(oracle::binomial_tail(10, 8)), 1e-15);
    EXPECT_THROW(exact_deviation_series(f, fair_coin(), psi, W, {40}), BudgetExceeded);
}

TEST(Deviation, NonAdditivePsiIsDomainError)
{
    const auto f = ShiftSpace::full(2);
    const std::vector<Matrix> ms{Matrix{{1, 1}, {0, 1}}, Matrix{{1, 0}, {1, 1}}};
    EXPECT_THROW(exact_deviation_series(f, fair_coin(), PotentialSequence::cocycle_norm(ms, 1.0),
                                        DeviationWindow::closed(0, 1), {5}),
                 DomainError);
}

TEST(MonteCarlo, WilsonIntervalCoverage)
{
    const auto f = ShiftSpace::full(2);
    const auto m = fair_coin();
    const auto psi = PotentialSequence::indicator(f, 1);
    const auto W = DeviationWindow::closed(0.6, 1.0);
    const int n = 20;
    const double truth = to_double(oracle::binomial_tail(n, 12));
    int covered = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto e = monte_carlo_deviation(m, psi, W, n, 2000, seed);
        if (e.lo <= truth && truth <= e.hi)
            ++covered;
    }
    EXPECT_GE(covered, 90);
}

TEST(MonteCarlo, ReproducibleAcrossThreadCounts)
{
    const auto f = ShiftSpace::full(2);
    const auto m = fair_coin();
    const auto psi = PotentialSequence::indicator(f, 1);
    const auto W = DeviationWindow::closed(0.6, 1.0);
    const auto a = monte_carlo_deviation(m, psi, W, 30, 10000, 7, Executor(1));
    const auto b = monte_carlo_deviation(m, psi, W, 30, 10000, 7, Executor(4));
    const auto c = monte_carlo_deviation(m, psi, W, 30, 10000, 8, Executor(1));
    EXPECT_EQ(a.hits, b.hits);
    EXPECT_NE(a.hits, c.hits);
    EXPECT_THROW(monte_carlo_deviation(m, psi, W, 30, 0, 7), ValidationError);
}

TEST(MonteCarlo, WilsonEdgeCases)
{
    const auto [lo0, hi0] = wilson_interval(0, 100);
    EXPECT_EQ(lo0, 0.0);
    EXPECT_GT(hi0, 0.0);
    const auto [lo1, hi1] = wilson_interval(100, 100);
    EXPECT_EQ(hi1, 1.0);
    EXPECT_LT(lo1, 1.0);
}

TEST(Ldp, FairCoinBoundsHold)
{
    const auto f = ShiftSpace::full(2);
    const auto phi = PotentialSequence::constant(f, -std::log(2.0));
    const auto psi = PotentialSequence::indicator(f, 1);
    const auto rate = legendre_transform(free_energy_curve(f, phi, psi, uniform_grid(-20, 20, 0.01)),
                                         interior_grid(SpectrumInterval{0, 1}, 201));
    const auto W = DeviationWindow::closed(0.7, 1.0);
    const auto series = exact_deviation_series(f, fair_coin(), psi, W, {100, 200, 500, 1000, 2000});
    const auto r = ldp_bound_check(series, rate, W);
    EXPECT_TRUE(r.upper_holds);
    EXPECT_TRUE(r.lower_holds);
    EXPECT_FALSE(r.vacuous);
    EXPECT_NEAR(r.inf_closed, oracle::bernoulli_rate(0.7), 1e-5);
    EXPECT_NEAR(series.slope.back(), -oracle::bernoulli_rate(0.7), 3e-3);
    // Slopes approach -I(0.7) from below.
    for (std::size_t i = 1; i < series.slope.size(); ++i)
        EXPECT_GT(series.slope[i], series.slope[i - 1]);

    const auto mean_window = DeviationWindow::closed(0.4, 0.6);
    const auto s2 = exact_deviation_series(f, fair_coin(), psi, mean_window, {100, 500});
    EXPECT_TRUE(ldp_bound_check(s2, rate, mean_window).vacuous);
}

TEST(Ldp, IrregularBoundAndSpectrum)
{
    const auto f = ShiftSpace::full(2);
    const auto phi = PotentialSequence::constant(f, -std::log(2.0));
    const auto psi = PotentialSequence::indicator(f, 1);
    const auto rate = legendre_transform(free_energy_curve(f, phi, psi, uniform_grid(-20, 20, 0.01)),
                                         interior_grid(SpectrumInterval{0, 1}, 201));
    const auto W = DeviationWindow::two_sided(0.5, 0.2);
    const auto series = exact_deviation_series(f, fair_coin(), psi, W, {200, 500, 1000});
    EXPECT_LT(irregular_pressure_bound(std::log(2.0), series), std::log(2.0));

    std::vector<double> c;
    for (int i = 1; i <= 30; ++i)
        c.push_back(0.01 * i);
    const auto sp = entropy_spectrum(rate, std::log(2.0), c);
    EXPECT_TRUE(sp.decreasing);
    EXPECT_TRUE(sp.concave);
    for (const auto& p : sp.points) {
        ASSERT_TRUE(p.h.has_value());
        EXPECT_NEAR(*p.h, oracle::binary_entropy(0.5 + p.c), 1e-5);
    }
    const auto outside = entropy_spectrum(rate, std::log(2.0), {0.6});
    EXPECT_FALSE(outside.points[0].h.has_value());
}

TEST(Deviation, ThreadCountDoesNotChangeEnumeration)
{
    gen::Rng rng(63);
    const auto s = gen::shift(rng, 3);
    const auto m = gen::markov_float(rng, s, 1);
    const auto p = gen::real_additive(rng, s, 2);
    const auto& g = *p.as<AdditiveLocallyConstant>();
    const auto W = DeviationWindow::closed(-0.2, 0.3);
    Enumeration one, four;
    four.exec = Executor(4);
    EXPECT_EQ(enumerate_deviation(s, m, g, W, 14, one), enumerate_deviation(s, m, g, W, 14, four));
}
