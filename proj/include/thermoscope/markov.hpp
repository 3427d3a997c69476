#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/rational.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

/// Exact rational form of a Markov measure, when one is known.
struct ExactChain {
    std::vector<std::vector<Rational>> Q;
    std::vector<Rational> pi;
};

namespace detail {

inline Eigen::VectorXd stationary_vector(const Eigen::MatrixXd& Q)
{
    const auto n = Q.rows();
    // (Q^T - I) pi = 0 with sum(pi) = 1, solved as a least-squares system.
    Eigen::MatrixXd A(n + 1, n);
    A.topRows(n) = Q.transpose() - Eigen::MatrixXd::Identity(n, n);
    A.row(n).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
    b(n) = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(b);
    return pi / pi.sum();
}

inline std::vector<Rational> exact_stationary(const std::vector<std::vector<Rational>>& Q)
{
    const std::size_t n = Q.size();
    // Rows: n-1 balance equations plus normalization.
    std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n + 1));
    for (std::size_t j = 0; j + 1 < n; ++j) {
        for (std::size_t i = 0; i < n; ++i)
            m[j][i] = Q[i][j] - (i == j ? Rational(1) : Rational(0));
        m[j][n] = 0;
    }
    for (std::size_t i = 0; i < n; ++i)
        m[n - 1][i] = 1;
    m[n - 1][n] = 1;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m[pivot][col] == 0)
            ++pivot;
        if (pivot == n)
            throw ValidationError("transition matrix has no unique stationary vector");
        std::swap(m[col], m[pivot]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || m[r][col] == 0)
                continue;
            Rational f = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= n; ++c)
                m[r][c] -= f * m[col][c];
        }
    }
    std::vector<Rational> pi(n);
    for (std::size_t i = 0; i < n; ++i)
        pi[i] = m[i][n] / m[i][i];
    return pi;
}

// Best rational approximation with bounded denominator (continued fractions).
inline Rational best_rational(double x, std::int64_t max_den)
{
    long double v = x;
    std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
    long double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
        long double a_ld = std::floor(frac);
        if (std::fabs(a_ld) > 1e15L)
            break;
        auto a = static_cast<std::int64_t>(a_ld);
        std::int64_t h2 = a * h1 + h0, k2 = a * k1 + k0;
        if (k2 > max_den)
            break;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        long double rem = frac - a_ld;
        if (rem < 1e-18L)
            break;
        frac = 1.0L / rem;
    }
    if (k1 == 0)
        return Rational(0);
    return Rational(BigInt(h1), BigInt(k1));
}

} // namespace detail

/// Stationary Markov measure of a given block order: the states are the
/// admissible k-words and Q moves u -> v when v = u[1..] + a.
class MarkovMeasure {
public:
    static constexpr double kTolerance = 1e-12;

    MarkovMeasure(BlockGraph graph, Eigen::MatrixXd Q, Eigen::VectorXd pi, std::optional<ExactChain> exact = {})
        : graph_(std::move(graph)), Q_(std::move(Q)), pi_(std::move(pi)), exact_(std::move(exact))
    {
        validate();
        build_sampler();
    }

    /// Floating measure from a transition matrix; the stationary vector is solved for.
    static MarkovMeasure from_transitions(const ShiftSpace& space, int order, Eigen::MatrixXd Q)
    {
        BlockGraph g(space, order);
        if (Q.rows() != static_cast<Eigen::Index>(g.size()) || Q.cols() != Q.rows())
            throw ValidationError("Q has the wrong shape for the block graph");
        for (Eigen::Index i = 0; i < Q.rows(); ++i) {
            double s = Q.row(i).sum();
            if (std::fabs(s - 1.0) > 1e-9)
                throw ValidationError("row " + std::to_string(i) + " of Q does not sum to 1");
            Q.row(i) /= s;
        }
        Eigen::VectorXd pi = detail::stationary_vector(Q);
        return MarkovMeasure(std::move(g), std::move(Q), std::move(pi));
    }

    /// Exact measure from rational transitions; pi is solved exactly.
    static MarkovMeasure from_exact_transitions(const ShiftSpace& space, int order, std::vector<std::vector<Rational>> Q)
    {
        BlockGraph g(space, order);
        const std::size_t n = g.size();
        if (Q.size() != n)
            throw ValidationError("Q has the wrong shape for the block graph");
        for (std::size_t i = 0; i < n; ++i) {
            if (Q[i].size() != n)
                throw ValidationError("Q has the wrong shape for the block graph");
            Rational s = 0;
            for (const auto& q : Q[i]) {
                if (q < 0)
                    throw ValidationError("negative transition probability");
                s += q;
            }
            if (s != 1)
                throw ValidationError("row " + std::to_string(i) + " of Q does not sum to exactly 1");
        }
        auto pi = detail::exact_stationary(Q);
        Eigen::MatrixXd Qd(n, n);
        Eigen::VectorXd pid(n);
        for (std::size_t i = 0; i < n; ++i) {
            pid(i) = to_double(pi[i]);
            for (std::size_t j = 0; j < n; ++j)
                Qd(i, j) = to_double(Q[i][j]);
        }
        return MarkovMeasure(std::move(g), std::move(Qd), std::move(pid), ExactChain{std::move(Q), std::move(pi)});
    }

    /// Product measure on a full shift with the given symbol probabilities.
    static MarkovMeasure bernoulli(const ShiftSpace& space, const std::vector<Rational>& p)
    {
        if (!space.is_full())
            throw ValidationError("Bernoulli measures need a full shift");
        if (static_cast<int>(p.size()) != space.alphabet_size())
            throw ValidationError("one probability per symbol required");
        std::vector<std::vector<Rational>> Q(p.size(), p);
        return from_exact_transitions(space, 1, std::move(Q));
    }

    const BlockGraph& graph() const { return graph_; }
    const ShiftSpace& space() const { return graph_.space(); }
    int order() const { return graph_.order(); }
    std::size_t states() const { return graph_.size(); }
    const Eigen::MatrixXd& Q() const { return Q_; }
    const Eigen::VectorXd& pi() const { return pi_; }
    const std::optional<ExactChain>& exact() const { return exact_; }
    bool is_exact() const { return exact_.has_value(); }

    /// mu([w]); zero for inadmissible words.
    double cylinder(std::span<const Symbol> w) const
    {
        const double lg = log_cylinder(w);
        return std::isinf(lg) ? 0.0 : std::exp(lg);
    }

    double log_cylinder(std::span<const Symbol> w) const
    {
        const auto r = static_cast<std::size_t>(order());
        if (w.empty())
            return 0.0;
        if (!space().admissible(w))
            return -std::numeric_limits<double>::infinity();
        if (w.size() < r) {
            double total = 0.0;
            for (std::size_t i = 0; i < states(); ++i) {
                const auto& u = graph_.state(i);
                if (std::equal(w.begin(), w.end(), u.begin()))
                    total += pi_(static_cast<Eigen::Index>(i));
            }
            return std::log(total);
        }
        int cur = graph_.index_of(w.subspan(0, r));
        double lg = std::log(pi_(cur));
        for (std::size_t i = 1; i + r <= w.size(); ++i) {
            int nxt = graph_.index_of(w.subspan(i, r));
            lg += std::log(Q_(cur, nxt));
            cur = nxt;
        }
        return lg;
    }

    /// Exact mu([w]); requires an exact chain.
    Rational cylinder_exact(std::span<const Symbol> w) const
    {
        if (!exact_)
            throw ValidationError("measure has no exact rational form");
        const auto r = static_cast<std::size_t>(order());
        if (w.empty())
            return Rational(1);
        if (!space().admissible(w))
            return Rational(0);
        if (w.size() < r) {
            Rational total = 0;
            for (std::size_t i = 0; i < states(); ++i) {
                const auto& u = graph_.state(i);
                if (std::equal(w.begin(), w.end(), u.begin()))
                    total += exact_->pi[i];
            }
            return total;
        }
        int cur = graph_.index_of(w.subspan(0, r));
        Rational m = exact_->pi[static_cast<std::size_t>(cur)];
        for (std::size_t i = 1; i + r <= w.size(); ++i) {
            int nxt = graph_.index_of(w.subspan(i, r));
            m *= exact_->Q[static_cast<std::size_t>(cur)][static_cast<std::size_t>(nxt)];
            cur = nxt;
        }
        return m;
    }

    /// Draws a word of the given length from the measure.
    template <class Rng>
    void sample(Rng& rng, std::size_t length, std::vector<Symbol>& out) const
    {
        out.clear();
        const auto r = static_cast<std::size_t>(order());
        int cur = draw(rng, pi_cdf_);
        const auto& first = graph_.state(static_cast<std::size_t>(cur));
        out.insert(out.end(), first.begin(), first.begin() + static_cast<std::ptrdiff_t>(std::min(r, length)));
        while (out.size() < length) {
            const auto& succ = graph_.successors(static_cast<std::size_t>(cur));
            int k = draw(rng, row_cdf_[static_cast<std::size_t>(cur)]);
            cur = succ[static_cast<std::size_t>(k)];
            out.push_back(graph_.state(static_cast<std::size_t>(cur)).back());
        }
    }

private:
    void validate() const
    {
        const auto n = static_cast<Eigen::Index>(graph_.size());
        if (Q_.rows() != n || Q_.cols() != n || pi_.size() != n)
            throw ValidationError("Markov measure dimensions do not match its block graph");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(pi_(i) > 0.0))
                throw ValidationError("stationary vector must be entrywise positive");
            const auto& succ = graph_.successors(static_cast<std::size_t>(i));
            for (Eigen::Index j = 0; j < n; ++j) {
                bool edge = std::find(succ.begin(), succ.end(), static_cast<int>(j)) != succ.end();
                if (edge && !(Q_(i, j) > 0.0))
                    throw ValidationError("Q must be positive on every admissible transition");
                if (!edge && Q_(i, j) != 0.0)
                    throw ValidationError("Q must vanish off the admissible transitions");
            }
            if (std::fabs(Q_.row(i).sum() - 1.0) > kTolerance)
                throw ValidationError("rows of Q must sum to 1");
        }
        Eigen::RowVectorXd drift = pi_.transpose() * Q_ - pi_.transpose();
        if (drift.cwiseAbs().maxCoeff() > kTolerance)
            throw ValidationError("pi is not stationary for Q");
        if (std::fabs(pi_.sum() - 1.0) > kTolerance)
            throw ValidationError("pi must sum to 1");
    }

    void build_sampler()
    {
        const std::size_t n = graph_.size();
        pi_cdf_.resize(n);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            pi_cdf_[i] = (acc += pi_(static_cast<Eigen::Index>(i)));
        row_cdf_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            acc = 0.0;
            for (int j : graph_.successors(i))
                row_cdf_[i].push_back(acc += Q_(static_cast<Eigen::Index>(i), j));
        }
    }

    template <class Rng>
    static int draw(Rng& rng, const std::vector<double>& cdf)
    {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * cdf.back();
        for (std::size_t k = 0; k + 1 < cdf.size(); ++k)
            if (u < cdf[k])
                return static_cast<int>(k);
        return static_cast<int>(cdf.size() - 1);
    }

    BlockGraph graph_;
    Eigen::MatrixXd Q_;
    Eigen::VectorXd pi_;
    std::optional<ExactChain> exact_;
    std::vector<double> pi_cdf_;
    std::vector<std::vector<double>> row_cdf_;
};

/// Recognizes a floating measure whose transitions are small-denominator
/// rationals (within `tolerance`) and returns the verified exact measure.
inline std::optional<MarkovMeasure> recognize_exact(const MarkovMeasure& m, std::int64_t max_den = 100000,
                                                    double tolerance = 1e-14)
{
    if (m.is_exact())
        return m;
    const std::size_t n = m.states();
    std::vector<std::vector<Rational>> Q(n, std::vector<Rational>(n));
    for (std::size_t i = 0; i < n; ++i) {
        Rational row = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double q = m.Q()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (q == 0.0)
                continue;
            Rational r = detail::best_rational(q, max_den);
            if (std::fabs(to_double(r) - q) > tolerance || r <= 0)
                return std::nullopt;
            Q[i][j] = r;
            row += r;
        }
        if (row != 1)
            return std::nullopt;
    }
    auto exact = MarkovMeasure::from_exact_transitions(m.space(), m.order(), std::move(Q));
    if ((exact.pi() - m.pi()).cwiseAbs().maxCoeff() > 1e-10)
        return std::nullopt;
    return exact;
}

} // namespace thermoscope
