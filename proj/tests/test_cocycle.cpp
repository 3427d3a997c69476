#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"

using namespace thermoscope;

namespace {

CocycleSpec triangular()
{
    return CocycleSpec(ShiftSpace::full(2), {Matrix{{1, 1}, {0, 1}}, Matrix{{1, 0}, {1, 1}}});
}

} // namespace

TEST(CocycleSpec, Validation)
{
    const auto f = ShiftSpace::full(2);
    EXPECT_THROW(CocycleSpec(f, {Matrix{{1, 0}, {0, 1}}}), ValidationError);
    EXPECT_THROW(CocycleSpec(f, {Matrix{{1, 0}, {0, 1}}, Matrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}), ValidationError);
    EXPECT_THROW(CocycleSpec(f, {Matrix::Zero(2, 2), Matrix::Zero(2, 2)}), ValidationError);
    // Nilpotent pair: every product of length 2 already vanishes.
    EXPECT_THROW(CocycleSpec(f, {Matrix{{0, 1}, {0, 0}}, Matrix{{0, 2}, {0, 0}}}), ValidationError);
    Matrix bad{{1, 0}, {0, 1}};
    bad(0, 0) = NAN;
    EXPECT_THROW(CocycleSpec(f, {bad, bad}), ValidationError);
    EXPECT_THROW(CocycleSpec(f, {Matrix::Identity(9, 9), Matrix::Identity(9, 9)}), ValidationError);
}

TEST(CocycleSpec, ProductOrderMatchesOracle)
{
    const auto spec = triangular();
    const std::vector<oracle::M2> ms{{1, 1, 0, 1}, {1, 0, 1, 1}};
    for (const auto& w : oracle::all_words(spec.base(), 6)) {
        const Matrix p = word_product(spec, Word(spec.base(), w));
        const auto q = oracle::product(ms, w);
        EXPECT_EQ(p(0, 0), q[0]);
        EXPECT_EQ(p(0, 1), q[1]);
        EXPECT_EQ(p(1, 0), q[2]);
        EXPECT_EQ(p(1, 1), q[3]);
        EXPECT_NEAR(operator_norm(p), oracle::norm2(q), 1e-12 * oracle::norm2(q));
    }
}

TEST(OperatorNorm, SubmultiplicativeOnRandomWords)
{
    gen::Rng rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        const int d = rng.uniform_int(2, 4);
        std::vector<Matrix> ms{gen::int_matrix(rng, d), gen::int_matrix(rng, d)};
        const auto f = ShiftSpace::full(2);
        for (int total = 2; total <= 8; ++total)
            for_each_word(f, total, [&](std::span<const Symbol> w) {
                for (int m = 1; m < total; ++m) {
                    const double whole = operator_norm(ordered_product(ms, w));
                    const double a = operator_norm(ordered_product(ms, w.subspan(0, static_cast<std::size_t>(m))));
                    const double b = operator_norm(ordered_product(ms, w.subspan(static_cast<std::size_t>(m))));
                    ASSERT_LE(whole, a * b * (1 + 1e-12) + 1e-12);
                }
            });
    }
}

TEST(Irreducibility, Verdicts)
{
    EXPECT_EQ(irreducibility_check(triangular()).verdict, Verdict::Irreducible);
    EXPECT_EQ(irreducibility_check(triangular()).algebra_dimension, 4);

    const auto f = ShiftSpace::full(2);
    const auto diag = irreducibility_check(CocycleSpec(f, {Matrix{{2, 0}, {0, 1}}, Matrix{{3, 0}, {0, 1}}}));
    EXPECT_EQ(diag.verdict, Verdict::Reducible);
    ASSERT_FALSE(diag.witness.empty());

    // Shared upper-triangular structure: e1 is invariant.
    const auto upper = irreducibility_check(CocycleSpec(f, {Matrix{{1, 2}, {0, 3}}, Matrix{{2, -1}, {0, 1}}}));
    ASSERT_EQ(upper.verdict, Verdict::Reducible);
    const auto& v = upper.witness.front();
    EXPECT_NEAR(std::abs(v(1)), 0.0, 1e-9);
    EXPECT_GT(std::abs(v(0)), 0.5);

    // A rotation by 90 degrees alone has no real invariant line but two complex ones.
    Matrix rot{{0, -1}, {1, 0}};
    const auto r = irreducibility_check(CocycleSpec(f, {rot, rot}));
    ASSERT_EQ(r.verdict, Verdict::Reducible);
    const Eigen::VectorXcd w = r.witness.front();
    const Eigen::VectorXcd image = rot.cast<std::complex<double>>() * w;
    // image is parallel to w
    const std::complex<double> lambda = image.dot(w) / w.squaredNorm();
    EXPECT_LT((image - std::conj(lambda) * w).norm(), 1e-9);
    EXPECT_STREQ(to_string(Verdict::Inconclusive), "inconclusive");
}

TEST(ReverseConstant, BoundsAndVanishing)
{
    const auto tri = reverse_constant(triangular(), 6);
    EXPECT_GT(tri.c_hat, 0.0);
    EXPECT_LE(tri.c_hat, 1.0);
    // More pairs can only lower the estimate.
    EXPECT_LE(reverse_constant(triangular(), 7).c_hat, reverse_constant(triangular(), 5).c_hat);

    const auto f = ShiftSpace::full(2);
    // Rank-one products that annihilate each other.
    const auto degenerate = reverse_constant(CocycleSpec(f, {Matrix{{1, 0}, {0, 0}}, Matrix{{0, 0}, {0, 1}}}), 3);
    EXPECT_EQ(degenerate.c_hat, 0.0);
    EXPECT_THROW(reverse_constant(CocycleSpec(ShiftSpace::full(4), std::vector<Matrix>(4, Matrix::Identity(2, 2))), 7),
                 BudgetExceeded);
}

TEST(CocyclePressure, ScalarCocycleMatchesAdditivePressure)
{
    const auto f = ShiftSpace::full(2);
    const CocycleSpec spec(f, {Matrix{{2, 0}, {0, 2}}, Matrix{{3, 0}, {0, 3}}});
    for (double q : {-1.0, 0.5, 2.0}) {
        const auto additive = PotentialSequence::additive_from(f, 1, [&](std::span<const Symbol> w) {
            return q * std::log(w[0] == 0 ? 2.0 : 3.0);
        });
        const double exact = pressure_exact(f, additive);
        const auto cp = cocycle_pressure(spec, q, {4, 8, 12});
        EXPECT_NEAR(cp.reverse.c_hat, 1.0, 1e-12);
        for (const auto& row : cp.rows) {
            EXPECT_NEAR(row.upper, exact, 1e-12);
            ASSERT_TRUE(row.lower.has_value());
            EXPECT_NEAR(*row.lower, exact, 1e-12);
        }
    }
}

TEST(CocyclePressure, TriangularPairUpperBoundsDecrease)
{
    const auto cp = cocycle_pressure(triangular(), 2.0, {4, 8, 12});
    ASSERT_EQ(cp.rows.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        ASSERT_TRUE(cp.rows[i].lower.has_value());
        EXPECT_LT(*cp.rows[i].lower, cp.rows[i].upper);
        EXPECT_TRUE(cp.rows[i].heuristic);
        EXPECT_EQ(cp.rows[i].flag, "heuristic");
        if (i > 0)
            EXPECT_LT(cp.rows[i].upper, cp.rows[i - 1].upper);
    }
    // Nested: later lower bounds do not drop below the first.
    EXPECT_GE(*cp.rows[2].lower, *cp.rows[0].lower);
    // Upper bound agrees with the Fekete bracket on the norm potential.
    const auto b = pressure_bracket(triangular().base(), norm_potential(triangular(), 2.0), 12, 0.0);
    EXPECT_NEAR(b.upper, cp.rows[2].upper, 1e-12);
}

TEST(CocyclePressure, Flags)
{
    const auto g = ShiftSpace::golden_mean();
    const CocycleSpec sft(g, {Matrix{{1, 1}, {0, 1}}, Matrix{{1, 0}, {1, 1}}});
    const auto cp = cocycle_pressure(sft, 1.0, {6});
    EXPECT_FALSE(cp.rows[0].lower.has_value());
    EXPECT_EQ(cp.rows[0].flag, "lower-withheld-sft");

    const auto f = ShiftSpace::full(2);
    const CocycleSpec proj(f, {Matrix{{1, 0}, {0, 0}}, Matrix{{1, 1}, {0, 0}}});
    const auto vanish = cocycle_pressure(proj, 1.0, {4}, 3);
    EXPECT_GT(vanish.reverse.c_hat, 0.0);
    const CocycleSpec annihilating(f, {Matrix{{1, 0}, {0, 0}}, Matrix{{0, 0}, {0, 1}}});
    const auto zero = cocycle_pressure(annihilating, 1.0, {4}, 3);
    EXPECT_EQ(zero.rows[0].flag, "lower-withheld-c-vanishes");
    EXPECT_THROW(cocycle_pressure(annihilating, -1.0, {4}, 3), DomainError);
    const auto q0 = cocycle_pressure(annihilating, 0.0, {4}, 3);
    EXPECT_NEAR(*q0.rows[0].lower, std::log(2.0), 1e-15);
}

TEST(Lyapunov, DeterminantSumsAndBracket)
{
    const auto f = ShiftSpace::full(2);
    const auto m = MarkovMeasure::bernoulli(f, {Rational(1, 3), Rational(2, 3)});
    // Diagonal cocycle: exponent is the larger of the two averages.
    const CocycleSpec diag(f, {Matrix{{2, 0}, {0, 1}}, Matrix{{3, 0}, {0, 1}}});
    const auto e = lyapunov_exponent(diag, m, 10);
    EXPECT_NEAR(e.value, std::log(2.0) / 3 + 2 * std::log(3.0) / 3, 1e-12);
    ASSERT_TRUE(e.lower.has_value());
    EXPECT_NEAR(*e.lower, e.value, 1e-12);

    const auto tri = lyapunov_exponent(triangular(), m, 12);
    ASSERT_TRUE(tri.lower.has_value());
    EXPECT_LT(*tri.lower, tri.upper);
    EXPECT_GT(tri.value, 0.0);
    EXPECT_TRUE(tri.heuristic);

    // The two singular-value potentials sum to log |det| along every word.
    const std::vector<Matrix> ms{Matrix{{2, 1}, {0, 1}}, Matrix{{1, 0}, {-1, 3}}};
    const auto s1 = PotentialSequence::singular_value(ms, 1);
    const auto s2 = PotentialSequence::singular_value(ms, 2);
    for (int n = 1; n <= 10; ++n)
        for_each_word(f, n, [&](std::span<const Symbol> w) {
            ASSERT_NEAR(evaluate(s1, w, n) + evaluate(s2, w, n),
                        std::log(std::fabs(ordered_product(ms, w).determinant())), 1e-9);
        });
}
