#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/markov.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/rate.hpp"
#include "thermoscope/rational.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

/// Closed interval; either end may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// A closed interval, or the pair of closed half-lines |x - center| >= c,
/// together with an enlargement delta.
struct DeviationWindow {
    std::vector<Interval> parts;
    double delta = 0.0;

    static DeviationWindow closed(double lo, double hi, double delta = 0.0)
    {
        if (!(lo <= hi))
            throw ValidationError("window endpoints out of order");
        check_delta(delta);
        return {{{lo, hi}}, delta};
    }

    static DeviationWindow two_sided(double center, double c, double delta = 0.0)
    {
        if (!(c > 0))
            throw ValidationError("two-sided window needs c > 0");
        check_delta(delta);
        const double inf = std::numeric_limits<double>::infinity();
        return {{{-inf, center - c}, {center + c, inf}}, delta};
    }

    /// The delta-neighbourhood, part by part.
    std::vector<Interval> enlarged() const
    {
        std::vector<Interval> out = parts;
        for (auto& p : out) {
            p.lo -= delta;
            p.hi += delta;
        }
        return out;
    }

    bool contains(double x) const
    {
        for (const auto& p : enlarged())
            if (p.contains(x))
                return true;
        return false;
    }

private:
    static void check_delta(double delta)
    {
        if (!(delta >= 0))
            throw ValidationError("window enlargement must be >= 0");
    }
};

/// Endpoint of an enlarged window part as an exact rational (nullopt = infinite).
struct ExactInterval {
    std::optional<Rational> lo;
    std::optional<Rational> hi;

    bool contains(const Rational& x) const { return (!lo || *lo <= x) && (!hi || x <= *hi); }
};

inline std::vector<ExactInterval> exact_parts(const DeviationWindow& w)
{
    std::vector<ExactInterval> out;
    const Rational d = decimal_rational(w.delta);
    for (const auto& p : w.parts) {
        ExactInterval e;
        if (std::isfinite(p.lo))
            e.lo = decimal_rational(p.lo) - d;
        if (std::isfinite(p.hi))
            e.hi = decimal_rational(p.hi) + d;
        out.push_back(e);
    }
    return out;
}

/// mu(psi_n / n in J) for each n, with slopes (1/n) log prob.
struct DeviationSeries {
    std::vector<int> n;
    std::vector<double> prob;
    std::vector<double> log_prob;
    std::vector<double> slope;
    std::vector<std::optional<Rational>> prob_exact;
    double L_estimate = 0.0;
    std::string method;
};

/// -max slope over the second half of the (sorted) horizon list.
inline double limsup_rate(const std::vector<double>& slope)
{
    if (slope.empty())
        return std::numeric_limits<double>::quiet_NaN();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = slope.size() / 2; i < slope.size(); ++i)
        best = std::max(best, slope[i]);
    return -best;
}

namespace detail {

// Integer sum levels: psi_n * D = gd * level + n * min_G.
struct LevelTable {
    BigInt D = 1;
    BigInt min_G = 0;
    BigInt gd = 1;
    std::vector<std::int64_t> step; // per k-block code, level increment
    std::int64_t max_step = 0;
};

inline std::optional<LevelTable> level_table(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    LevelTable t;
    std::vector<std::uint64_t> codes;
    for_each_word(space, g.range, [&](std::span<const Symbol> w) { codes.push_back(g.code(w)); });
    for (auto c : codes) {
        t.D = lcm_big(t.D, boost::multiprecision::denominator(g.exact[c]));
        if (t.D > BigInt(1000000000000ll))
            return std::nullopt;
    }
    std::vector<BigInt> G(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const Rational scaled = g.exact[codes[i]] * t.D;
        G[i] = boost::multiprecision::numerator(scaled);
    }
    t.min_G = *std::min_element(G.begin(), G.end());
    BigInt gd = 0;
    for (const auto& x : G)
        gd = boost::multiprecision::gcd(gd, BigInt(x - t.min_G));
    t.gd = gd == 0 ? BigInt(1) : gd;
    t.step.assign(g.values.size(), 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const BigInt s = (G[i] - t.min_G) / t.gd;
        if (s > BigInt(1000000))
            return std::nullopt;
        t.step[codes[i]] = s.convert_to<std::int64_t>();
        t.max_step = std::max(t.max_step, t.step[codes[i]]);
    }
    return t;
}

// Merged inclusive level ranges [first, last] with psi_n / n inside the window.
inline std::vector<std::pair<std::int64_t, std::int64_t>> level_ranges(const LevelTable& t,
                                                                       const std::vector<ExactInterval>& parts, int n,
                                                                       std::int64_t max_level)
{
    std::vector<std::pair<std::int64_t, std::int64_t>> r;
    const Rational nn(n);
    for (const auto& p : parts) {
        std::int64_t first = 0;
        std::int64_t last = max_level;
        if (p.lo) {
            const BigInt c = ceil_rational((*p.lo * nn * Rational(t.D) - nn * Rational(t.min_G)) / Rational(t.gd));
            if (c > BigInt(max_level))
                continue;
            first = c < 0 ? 0 : c.convert_to<std::int64_t>();
        }
        if (p.hi) {
            const BigInt f = floor_rational((*p.hi * nn * Rational(t.D) - nn * Rational(t.min_G)) / Rational(t.gd));
            if (f < 0)
                continue;
            last = f > BigInt(max_level) ? max_level : f.convert_to<std::int64_t>();
        }
        if (first <= last)
            r.emplace_back(first, last);
    }
    std::sort(r.begin(), r.end());
    std::vector<std::pair<std::int64_t, std::int64_t>> merged;
    for (const auto& x : r) {
        if (!merged.empty() && x.first <= merged.back().second + 1)
            merged.back().second = std::max(merged.back().second, x.second);
        else
            merged.push_back(x);
    }
    return merged;
}

inline std::vector<Symbol> tail(std::span<const Symbol> w, int len)
{
    return std::vector<Symbol>(w.end() - len, w.end());
}

// Level-set dynamic programme over B-blocks, B = max(order, range). After
// processing L symbols the level holds psi_{L-range+1}.
template <class Mass, class MassModel>
void level_dp(const ShiftSpace& space, const MarkovMeasure& m, const AdditiveLocallyConstant& g, const LevelTable& t,
              const std::vector<ExactInterval>& parts, const std::vector<int>& wanted, MassModel&& model,
              std::vector<std::optional<Mass>>& out_sum)
{
    const int r = m.order();
    const int k = g.range;
    const int B = std::max(r, k);
    const BlockGraph graph(space, B);
    const std::size_t S = graph.size();

    std::vector<int> r_index(S);
    std::vector<std::int64_t> last_step(S);
    for (std::size_t s = 0; s < S; ++s) {
        const auto& w = graph.state(s);
        r_index[s] = m.graph().index_of(tail(w, r));
        last_step[s] = t.step[g.code(tail(w, k))];
    }

    const int n_max = *std::max_element(wanted.begin(), wanted.end());
    const std::int64_t width = static_cast<std::int64_t>(n_max) * t.max_step + 1;
    std::vector<std::vector<Mass>> cur(S, std::vector<Mass>(static_cast<std::size_t>(width), Mass(0)));
    std::vector<std::vector<Mass>> nxt = cur;

    // Initial B-words: mass and the levels of their first B - k + 1 terms.
    int terms = B - k + 1;
    std::int64_t top = static_cast<std::int64_t>(terms) * t.max_step;
    for (std::size_t s = 0; s < S; ++s) {
        const auto& w = graph.state(s);
        std::int64_t level = 0;
        for (int j = 0; j + k <= B; ++j)
            level += t.step[g.code(std::span<const Symbol>(w).subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(k)))];
        cur[s][static_cast<std::size_t>(level)] = model(w);
    }

    auto collect = [&](int n) {
        if (std::find(wanted.begin(), wanted.end(), n) == wanted.end())
            return;
        Mass total(0);
        for (const auto& [first, last] : level_ranges(t, parts, n, top))
            for (std::size_t s = 0; s < S; ++s)
                for (std::int64_t l = first; l <= last; ++l)
                    total += cur[s][static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < wanted.size(); ++i)
            if (wanted[i] == n)
                out_sum[i] = total;
    };
    collect(terms);

    while (terms < n_max) {
        for (std::size_t s = 0; s < S; ++s)
            std::fill(nxt[s].begin(), nxt[s].begin() + static_cast<std::ptrdiff_t>(top + t.max_step + 1), Mass(0));
        for (std::size_t s = 0; s < S; ++s) {
            const auto& row = cur[s];
            for (int v : graph.successors(s)) {
                const auto factor = model.transition(r_index[s], r_index[static_cast<std::size_t>(v)]);
                auto& dst = nxt[static_cast<std::size_t>(v)];
                const auto shift = static_cast<std::size_t>(last_step[static_cast<std::size_t>(v)]);
                for (std::int64_t l = 0; l <= top; ++l) {
                    const auto& x = row[static_cast<std::size_t>(l)];
                    if (x != 0)
                        model.accumulate(dst[static_cast<std::size_t>(l) + shift], x, factor);
                }
            }
        }
        std::swap(cur, nxt);
        ++terms;
        top += t.max_step;
        collect(terms);
    }
}

struct ExactMass {
    const MarkovMeasure* m;
    int r;
    BigInt D_pi = 1;
    BigInt D_Q = 1;
    std::vector<BigInt> pi_int;
    std::vector<std::vector<BigInt>> Q_int;

    explicit ExactMass(const MarkovMeasure& measure) : m(&measure), r(measure.order())
    {
        const auto& ex = *measure.exact();
        for (const auto& p : ex.pi)
            D_pi = lcm_big(D_pi, boost::multiprecision::denominator(p));
        for (const auto& row : ex.Q)
            for (const auto& q : row)
                if (q != 0)
                    D_Q = lcm_big(D_Q, boost::multiprecision::denominator(q));
        for (const auto& p : ex.pi)
            pi_int.push_back(boost::multiprecision::numerator(Rational(p * D_pi)));
        for (const auto& row : ex.Q) {
            Q_int.emplace_back();
            for (const auto& q : row)
                Q_int.back().push_back(boost::multiprecision::numerator(Rational(q * D_Q)));
        }
    }

    // Numerator of mu([w]) over D_pi * D_Q^(|w| - r).
    BigInt operator()(const std::vector<Symbol>& w) const
    {
        std::span<const Symbol> ws(w);
        int u = m->graph().index_of(ws.first(static_cast<std::size_t>(r)));
        BigInt x = pi_int[static_cast<std::size_t>(u)];
        for (std::size_t j = static_cast<std::size_t>(r); j < w.size(); ++j) {
            const int v = m->graph().index_of(ws.subspan(j + 1 - static_cast<std::size_t>(r), static_cast<std::size_t>(r)));
            x *= Q_int[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
            u = v;
        }
        return x;
    }
    const BigInt& transition(int u, int v) const { return Q_int[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)]; }
    static void accumulate(BigInt& dst, const BigInt& x, const BigInt& factor)
    {
        if (factor == 1)
            dst += x;
        else
            dst += x * factor;
    }
};

struct FloatMass {
    const MarkovMeasure* m;
    int r;

    long double operator()(const std::vector<Symbol>& w) const
    {
        std::span<const Symbol> ws(w);
        int u = m->graph().index_of(ws.first(static_cast<std::size_t>(r)));
        long double x = m->pi()(u);
        for (std::size_t j = static_cast<std::size_t>(r); j < w.size(); ++j) {
            const int v = m->graph().index_of(ws.subspan(j + 1 - static_cast<std::size_t>(r), static_cast<std::size_t>(r)));
            x *= m->Q()(u, v);
            u = v;
        }
        return x;
    }
    long double transition(int u, int v) const { return m->Q()(u, v); }
    static void accumulate(long double& dst, long double x, long double factor) { dst += x * factor; }
};

} // namespace detail

/// mu(psi_n / n in W) by exhaustive enumeration of (n + range - 1)-words.
/// Exact when both the measure and the table are exact; `exact` selects it.
inline std::optional<Rational> enumerate_deviation_exact(const ShiftSpace& space, const MarkovMeasure& m,
                                                         const AdditiveLocallyConstant& g, const DeviationWindow& W,
                                                         int n, const Enumeration& en = {})
{
    if (!m.is_exact())
        return std::nullopt;
    const int len = n + g.range - 1;
    require_budget(len, en.budget, "deviation enumeration");
    const auto parts = exact_parts(W);
    const Rational nn(n);
    auto partials = partitioned_fold<Rational>(space, len, en.exec, [&](Rational& acc, std::span<const Symbol> w) {
        Rational sum = 0;
        for (int j = 0; j < n; ++j)
            sum += g.exact[g.code(w.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(g.range)))];
        const Rational avg = sum / nn;
        for (const auto& p : parts)
            if (p.contains(avg)) {
                acc += m.cylinder_exact(w);
                break;
            }
    });
    Rational total = 0;
    for (const auto& p : partials)
        total += p;
    return total;
}

inline double enumerate_deviation(const ShiftSpace& space, const MarkovMeasure& m, const AdditiveLocallyConstant& g,
                                  const DeviationWindow& W, int n, const Enumeration& en = {})
{
    const int len = n + g.range - 1;
    require_budget(len, en.budget, "deviation enumeration");
    auto partials = partitioned_fold<CompensatedSum>(space, len, en.exec,
                                                     [&](CompensatedSum& acc, std::span<const Symbol> w) {
        double sum = 0.0;
        for (int j = 0; j < n; ++j)
            sum += g.at(w.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(g.range)));
        if (W.contains(sum / n))
            acc.add(m.cylinder(w));
    });
    CompensatedSum total;
    for (const auto& p : partials)
        total.add(p);
    return total.value();
}

/// Deviation probabilities for additive psi. Rational tables go through the
/// integer level-set DP (big-integer masses when the measure is exact);
/// otherwise exhaustive enumeration within the budget, else refusal.
inline DeviationSeries exact_deviation_series(const ShiftSpace& space, const MarkovMeasure& m,
                                              const AdditiveLocallyConstant& g, const DeviationWindow& W,
                                              std::vector<int> n_list, const Enumeration& en = {})
{
    if (n_list.empty())
        throw ValidationError("n_list is empty");
    std::sort(n_list.begin(), n_list.end());
    n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
    if (n_list.front() < 1)
        throw ValidationError("horizons must be >= 1");
    if (!(m.space() == space))
        throw ValidationError("measure lives on a different shift");

    DeviationSeries out;
    out.n = n_list;
    out.prob.assign(n_list.size(), 0.0);
    out.log_prob.assign(n_list.size(), 0.0);
    out.prob_exact.assign(n_list.size(), std::nullopt);
    const auto parts = exact_parts(W);
    const int B = std::max(m.order(), g.range);
    const int first_dp = B - g.range + 1;

    auto table = detail::level_table(space, g);
    std::vector<int> dp_ns;
    std::vector<std::size_t> dp_slots;
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (table && n_list[i] >= first_dp) {
            dp_ns.push_back(n_list[i]);
            dp_slots.push_back(i);
            continue;
        }
        // Short horizons and irrational tables go through enumeration.
        const int n = n_list[i];
        if (auto e = table ? enumerate_deviation_exact(space, m, g, W, n, en) : std::nullopt) {
            out.prob_exact[i] = *e;
            out.prob[i] = to_double(*e);
            out.log_prob[i] = log_rational(*e);
        } else {
            out.prob[i] = enumerate_deviation(space, m, g, W, n, en);
            out.log_prob[i] = std::log(out.prob[i]);
        }
    }
    if (!table && n_list.back() + g.range - 1 > std::min(en.budget, kHardBudgetCap))
        throw BudgetExceeded("psi has no small rational form and n exceeds the enumeration budget; "
                             "use monte_carlo_deviation instead");

    if (!dp_ns.empty()) {
        const auto states = BlockGraph(space, B).size();
        const double cells = static_cast<double>(states) * (static_cast<double>(dp_ns.back()) * table->max_step + 1);
        if (cells > 5e7)
            throw BudgetExceeded("deviation DP table too large");
        if (m.is_exact()) {
            detail::ExactMass mass(m);
            std::vector<std::optional<BigInt>> sums(dp_ns.size());
            detail::level_dp<BigInt>(space, m, g, *table, parts, dp_ns, mass, sums);
            for (std::size_t j = 0; j < dp_ns.size(); ++j) {
                const int L = dp_ns[j] + g.range - 1;
                const int len = std::max(L, B);
                BigInt den = mass.D_pi * boost::multiprecision::pow(mass.D_Q, static_cast<unsigned>(len - m.order()));
                const Rational p(*sums[j], den);
                const auto i = dp_slots[j];
                out.prob_exact[i] = p;
                out.prob[i] = to_double(p);
                out.log_prob[i] = log_big(*sums[j]) - log_big(den);
            }
            out.method = "dp-exact";
        } else {
            detail::FloatMass mass{&m, m.order()};
            std::vector<std::optional<long double>> sums(dp_ns.size());
            detail::level_dp<long double>(space, m, g, *table, parts, dp_ns, mass, sums);
            for (std::size_t j = 0; j < dp_ns.size(); ++j) {
                const auto i = dp_slots[j];
                const long double p = std::min<long double>(1.0L, *sums[j]);
                out.prob[i] = static_cast<double>(p);
                out.log_prob[i] = static_cast<double>(std::log(p));
            }
            out.method = "dp-float-mass";
        }
    } else {
        out.method = table ? "enumeration-exact" : "enumeration";
    }
    for (std::size_t i = 0; i < n_list.size(); ++i)
        out.slope.push_back(out.log_prob[i] / n_list[i]);
    out.L_estimate = limsup_rate(out.slope);
    return out;
}

inline DeviationSeries exact_deviation_series(const ShiftSpace& space, const MarkovMeasure& m,
                                              const PotentialSequence& psi, const DeviationWindow& W,
                                              std::vector<int> n_list, const Enumeration& en = {})
{
    auto g = to_additive(space, psi);
    if (!g)
        throw DomainError("exact deviation series needs a locally constant psi; use monte_carlo_deviation");
    return exact_deviation_series(space, m, *g, W, std::move(n_list), en);
}

/// Frequency of psi_n / n in W over sampled paths, with a 95% Wilson interval.
struct MonteCarloEstimate {
    int n = 0;
    std::uint64_t samples = 0;
    std::uint64_t hits = 0;
    std::uint64_t seed = 0;
    double frequency = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

inline std::pair<double, double> wilson_interval(std::uint64_t hits, std::uint64_t samples, double z = 1.959963984540054)
{
    if (samples == 0)
        return {0.0, 1.0};
    const double N = static_cast<double>(samples);
    const double p = static_cast<double>(hits) / N;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / N;
    const double center = (p + z2 / (2 * N)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / N + z2 / (4 * N * N)) / denom;
    const double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
    const double hi = hits == samples ? 1.0 : std::min(1.0, center + half);
    return {lo, hi};
}

inline constexpr std::size_t kMonteCarloShards = 64;

inline MonteCarloEstimate monte_carlo_deviation(const MarkovMeasure& m, const PotentialSequence& psi,
                                                const DeviationWindow& W, int n, std::uint64_t samples,
                                                std::uint64_t seed, const Executor& exec = Executor{})
{
    if (n < 1)
        throw ValidationError("n must be >= 1");
    if (samples == 0)
        throw ValidationError("samples must be positive");
    std::vector<std::uint64_t> shard_seeds(kMonteCarloShards);
    std::uint64_t state = seed;
    for (auto& s : shard_seeds)
        s = splitmix64(state);
    const std::size_t length = static_cast<std::size_t>(n + psi.extension());
    auto hits = exec.map<std::uint64_t>(kMonteCarloShards, [&](std::size_t shard) {
        std::uint64_t count = samples / kMonteCarloShards + (shard < samples % kMonteCarloShards ? 1 : 0);
        std::mt19937_64 rng(shard_seeds[shard]);
        std::vector<Symbol> path;
        std::uint64_t h = 0;
        for (std::uint64_t i = 0; i < count; ++i) {
            m.sample(rng, length, path);
            if (W.contains(evaluate(psi, path, n) / n))
                ++h;
        }
        return h;
    });
    MonteCarloEstimate e;
    e.n = n;
    e.samples = samples;
    e.seed = seed;
    for (auto h : hits)
        e.hits += h;
    e.frequency = static_cast<double>(e.hits) / static_cast<double>(samples);
    std::tie(e.lo, e.hi) = wilson_interval(e.hits, samples);
    return e;
}

/// Large-deviation bounds at the largest horizon:
/// slope <= -inf_J I + tol and slope >= -inf_{int J} I - tol,
/// tol = c1 log(n) / n + grid modulus.
struct LdpReport {
    int n = 0;
    double slope = 0.0;
    double inf_closed = 0.0;
    double inf_interior = 0.0;
    double tolerance = 0.0;
    bool upper_holds = false;
    bool lower_holds = false;
    bool vacuous = false; // the window holds the mean
};

inline LdpReport ldp_bound_check(const DeviationSeries& series, const RateFunction& rate, const DeviationWindow& W,
                                 double c1 = 3.0)
{
    if (series.n.empty())
        throw ValidationError("empty deviation series");
    LdpReport r;
    r.n = series.n.back();
    r.slope = series.slope.back();
    const double inf = std::numeric_limits<double>::infinity();
    r.inf_closed = inf;
    r.inf_interior = inf;
    for (const auto& p : W.enlarged()) {
        if (p.hi < rate.domain().lo || p.lo > rate.domain().hi)
            continue;
        const auto best = min_over_window(rate, p.lo, p.hi);
        r.inf_closed = std::min(r.inf_closed, best.value);
        if (p.lo < p.hi)
            r.inf_interior = std::min(r.inf_interior, best.value);
        if (p.contains(rate.mean()))
            r.vacuous = true;
    }
    r.tolerance = c1 * std::log(static_cast<double>(r.n)) / r.n + rate.grid_modulus();
    r.upper_holds = r.slope <= -r.inf_closed + r.tolerance;
    r.lower_holds = r.inf_interior == inf || r.slope >= -r.inf_interior - r.tolerance;
    return r;
}

/// Upper bound P_top - L for the pressure of the irregular set.
inline double irregular_pressure_bound(double P_top, const DeviationSeries& series)
{
    return P_top - series.L_estimate;
}

/// h(c) = h_top - min{I(mean + c), I(mean - c)} over branches in the domain.
struct SpectrumPoint {
    double c = 0.0;
    std::optional<double> h;
    bool right_in_domain = false;
    bool left_in_domain = false;
};

struct EntropySpectrum {
    std::vector<SpectrumPoint> points;
    bool decreasing = true;
    bool concave = true;
};

inline EntropySpectrum entropy_spectrum(const RateFunction& rate, double h_top, const std::vector<double>& c_grid,
                                        double concavity_tolerance = 1e-8)
{
    EntropySpectrum out;
    for (double c : c_grid) {
        if (c < 0)
            throw ValidationError("c grid must be non-negative");
        SpectrumPoint p;
        p.c = c;
        const double m = rate.mean();
        std::optional<double> best;
        if (rate.in_domain(m + c)) {
            p.right_in_domain = true;
            best = rate.value(m + c);
        }
        if (rate.in_domain(m - c)) {
            p.left_in_domain = true;
            const double v = rate.value(m - c);
            best = best ? std::min(*best, v) : v;
        }
        if (best)
            p.h = h_top - *best;
        out.points.push_back(p);
    }
    std::vector<const SpectrumPoint*> defined;
    for (const auto& p : out.points)
        if (p.h && p.c > 0)
            defined.push_back(&p);
    for (std::size_t i = 1; i < defined.size(); ++i)
        if (!(*defined[i]->h < *defined[i - 1]->h))
            out.decreasing = false;
    for (std::size_t i = 2; i < defined.size(); ++i)
        if (*defined[i]->h - 2 * *defined[i - 1]->h + *defined[i - 2]->h > concavity_tolerance)
            out.concave = false;
    return out;
}

} // namespace thermoscope
