#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/linalg.hpp"
#include "thermoscope/markov.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/rational.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

class PotentialSequence;

/// phi_n = S_n g with g a function of the first `range` symbols. Values are
/// indexed by the base-l code of the block; inadmissible blocks hold NaN.
struct AdditiveLocallyConstant {
    int alphabet_size = 0;
    int range = 1;
    std::vector<double> values;
    std::vector<Rational> exact; // decimal (or user-given) rational form of each value

    std::uint64_t code(std::span<const Symbol> block) const
    {
        std::uint64_t c = 0;
        for (Symbol s : block)
            c = c * static_cast<std::uint64_t>(alphabet_size) + s;
        return c;
    }
    double at(std::span<const Symbol> block) const { return values[code(block)]; }
};

/// phi_n(x) = q log ||M_{iota_n(x)}||.
struct CocycleNorm {
    std::vector<Matrix> matrices;
    double q = 1.0;
};

/// psi_n(x) = log sigma_j(M_{iota_n(x)}) for 2x2 matrices, j in {1, 2}.
struct SingularValue {
    std::vector<Matrix> matrices;
    int index = 1;
};

/// psi_n(x) = log mu([iota_n(x)]).
struct Smb {
    std::shared_ptr<const MarkovMeasure> measure;
};

/// base + t * other.
struct AffineCombination {
    std::shared_ptr<const PotentialSequence> base;
    std::shared_ptr<const PotentialSequence> other;
    double t = 0.0;
};

/// A sequence of potentials {phi_n} in one of its computable forms.
class PotentialSequence {
public:
    using Kind = std::variant<AdditiveLocallyConstant, CocycleNorm, SingularValue, Smb, AffineCombination>;

    explicit PotentialSequence(Kind kind) : kind_(std::move(kind)) {}

    /// Table keyed by k-word strings; every admissible k-word must be present.
    static PotentialSequence additive(const ShiftSpace& space, int range, const std::map<std::string, Rational>& table)
    {
        if (range < 1 || range > 16)
            throw ValidationError("additive range must be in [1, 16]");
        AdditiveLocallyConstant a;
        a.alphabet_size = space.alphabet_size();
        a.range = range;
        std::uint64_t codes = 1;
        for (int i = 0; i < range; ++i)
            codes *= static_cast<std::uint64_t>(space.alphabet_size());
        if (codes > (1u << 22))
            throw BudgetExceeded("additive table too large");
        a.values.assign(codes, std::numeric_limits<double>::quiet_NaN());
        a.exact.assign(codes, Rational(0));
        for (const auto& [key, value] : table) {
            if (static_cast<int>(key.size()) != range)
                throw ValidationError("table key '" + key + "' does not have length " + std::to_string(range));
            Word w = Word::parse(space, key);
            const auto c = a.code(w.symbols());
            a.values[c] = to_double(value);
            a.exact[c] = value;
        }
        bool missing = false;
        std::string first_missing;
        for_each_word(space, range, [&](std::span<const Symbol> w) {
            if (std::isnan(a.values[a.code(w)]) && !missing) {
                missing = true;
                first_missing = symbols_to_string(w);
            }
        });
        if (missing)
            throw ValidationError("table has no value for admissible word '" + first_missing + "'");
        return PotentialSequence(std::move(a));
    }

    /// Additive potential whose block values come from a function of the block.
    template <class F>
    static PotentialSequence additive_from(const ShiftSpace& space, int range, F&& value_of)
    {
        std::map<std::string, Rational> table;
        for_each_word(space, range, [&](std::span<const Symbol> w) {
            using R = decltype(value_of(w));
            if constexpr (std::is_same_v<R, Rational>)
                table[symbols_to_string(w)] = value_of(w);
            else
                table[symbols_to_string(w)] = decimal_rational(static_cast<double>(value_of(w)));
        });
        return additive(space, range, table);
    }

    static PotentialSequence constant(const ShiftSpace& space, double c)
    {
        return additive_from(space, 1, [c](std::span<const Symbol>) { return c; });
    }

    /// 1_[a] as a range-1 additive potential.
    static PotentialSequence indicator(const ShiftSpace& space, Symbol a)
    {
        return additive_from(space, 1, [a](std::span<const Symbol> w) { return Rational(w[0] == a ? 1 : 0); });
    }

    static PotentialSequence cocycle_norm(std::vector<Matrix> matrices, double q)
    {
        check_matrices(matrices);
        return PotentialSequence(CocycleNorm{std::move(matrices), q});
    }

    static PotentialSequence singular_value(std::vector<Matrix> matrices, int index)
    {
        check_matrices(matrices);
        if (matrices.front().rows() != 2)
            throw ValidationError("singular-value potentials are defined for 2x2 matrices");
        if (index != 1 && index != 2)
            throw ValidationError("singular value index must be 1 or 2");
        return PotentialSequence(SingularValue{std::move(matrices), index});
    }

    static PotentialSequence smb(MarkovMeasure measure)
    {
        return PotentialSequence(Smb{std::make_shared<const MarkovMeasure>(std::move(measure))});
    }

    static PotentialSequence affine(PotentialSequence base, PotentialSequence other, double t)
    {
        return PotentialSequence(AffineCombination{std::make_shared<const PotentialSequence>(std::move(base)),
                                                   std::make_shared<const PotentialSequence>(std::move(other)), t});
    }

    const Kind& kind() const { return kind_; }

    template <class T>
    const T* as() const
    {
        return std::get_if<T>(&kind_);
    }

    /// Symbols beyond n needed to pin phi_n down: range - 1 for additive kinds.
    int extension() const
    {
        return std::visit(
            [](const auto& k) -> int {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, AdditiveLocallyConstant>)
                    return k.range - 1;
                else if constexpr (std::is_same_v<K, AffineCombination>)
                    return std::max(k.base->extension(), k.other->extension());
                else
                    return 0;
            },
            kind_);
    }

    bool is_additive() const { return std::holds_alternative<AdditiveLocallyConstant>(kind_); }

private:
    static void check_matrices(const std::vector<Matrix>& matrices)
    {
        if (matrices.empty())
            throw ValidationError("matrix list must not be empty");
        const auto d = matrices.front().rows();
        if (d < 1 || d > kMaxCocycleDimension)
            throw ValidationError("matrix dimension must be in [1, 8]");
        for (const auto& m : matrices)
            if (m.rows() != d || m.cols() != d)
                throw ValidationError("all matrices must be square with the same dimension");
    }

    Kind kind_;
};

/// phi_n on a word of length >= n + extension(); no admissibility check.
inline double evaluate(const PotentialSequence& P, std::span<const Symbol> w, int n)
{
    return std::visit(
        [&](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, AdditiveLocallyConstant>) {
                const auto range = static_cast<std::size_t>(k.range);
                double sum = 0.0;
                for (int j = 0; j < n; ++j)
                    sum += k.at(w.subspan(static_cast<std::size_t>(j), range));
                return sum;
            } else if constexpr (std::is_same_v<K, CocycleNorm>) {
                const double norm = operator_norm(ordered_product(k.matrices, w.first(static_cast<std::size_t>(n))));
                if (norm == 0.0)
                    return k.q > 0 ? -std::numeric_limits<double>::infinity()
                                   : (k.q == 0 ? 0.0 : std::numeric_limits<double>::infinity());
                return k.q * std::log(norm);
            } else if constexpr (std::is_same_v<K, SingularValue>) {
                auto [s1, s2] = singular_values_2x2(ordered_product(k.matrices, w.first(static_cast<std::size_t>(n))));
                return std::log(k.index == 1 ? s1 : s2);
            } else if constexpr (std::is_same_v<K, Smb>) {
                return k.measure->log_cylinder(w.first(static_cast<std::size_t>(n)));
            } else {
                return evaluate(*k.base, w, n) + k.t * evaluate(*k.other, w, n);
            }
        },
        P.kind());
}

struct CylinderValue {
    double inf = 0.0;
    double sup = 0.0;
};

/// inf and sup of phi_n over the cylinder [w]; the two agree once
/// |w| >= n + extension(). Throws if |w| < n or w is inadmissible.
inline CylinderValue eval_on_cylinder(const ShiftSpace& space, const PotentialSequence& P,
                                      std::span<const Symbol> w, int n)
{
    if (n < 1)
        throw ValidationError("n must be >= 1");
    if (static_cast<int>(w.size()) < n)
        throw ValidationError("word too short for the requested n");
    if (!space.admissible(w))
        throw ValidationError("inadmissible word '" + symbols_to_string(w) + "'");
    const int needed = n + P.extension();
    if (static_cast<int>(w.size()) >= needed) {
        const double v = evaluate(P, w, n);
        return {v, v};
    }
    CylinderValue out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for_each_extension(space, w, needed, [&](std::span<const Symbol> x) {
        const double v = evaluate(P, x, n);
        out.inf = std::min(out.inf, v);
        out.sup = std::max(out.sup, v);
    });
    return out;
}

/// n inferred as |w| - extension().
inline CylinderValue eval_on_cylinder(const ShiftSpace& space, const PotentialSequence& P, const Word& w)
{
    const int n = static_cast<int>(w.size()) - P.extension();
    if (n < 1)
        throw ValidationError("word too short for this potential's range");
    return eval_on_cylinder(space, P, w.symbols(), n);
}

/// Re-expresses an additive potential on blocks of a larger range.
inline AdditiveLocallyConstant lift(const ShiftSpace& space, const AdditiveLocallyConstant& a, int range)
{
    if (range < a.range)
        throw ValidationError("cannot lift to a smaller range");
    if (range == a.range)
        return a;
    AdditiveLocallyConstant out;
    out.alphabet_size = a.alphabet_size;
    out.range = range;
    std::uint64_t codes = 1;
    for (int i = 0; i < range; ++i)
        codes *= static_cast<std::uint64_t>(a.alphabet_size);
    out.values.assign(codes, std::numeric_limits<double>::quiet_NaN());
    out.exact.assign(codes, Rational(0));
    for_each_word(space, range, [&](std::span<const Symbol> w) {
        const auto c = out.code(w);
        const auto src = a.code(w.first(static_cast<std::size_t>(a.range)));
        out.values[c] = a.values[src];
        out.exact[c] = a.exact[src];
    });
    return out;
}

/// x + t y on the common range.
inline AdditiveLocallyConstant combine(const ShiftSpace& space, const AdditiveLocallyConstant& x,
                                       const AdditiveLocallyConstant& y, double t)
{
    const int range = std::max(x.range, y.range);
    auto a = lift(space, x, range);
    auto b = lift(space, y, range);
    const Rational t_exact = decimal_rational(t);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (std::isnan(a.values[i]))
            continue;
        a.values[i] = a.values[i] + t * b.values[i];
        a.exact[i] = a.exact[i] + t_exact * b.exact[i];
    }
    return a;
}

/// The additive form of P when P is additive or an affine combination of additive kinds.
inline std::optional<AdditiveLocallyConstant> to_additive(const ShiftSpace& space, const PotentialSequence& P)
{
    if (auto a = P.as<AdditiveLocallyConstant>())
        return *a;
    if (auto c = P.as<AffineCombination>()) {
        auto x = to_additive(space, *c->base);
        auto y = to_additive(space, *c->other);
        if (x && y)
            return combine(space, *x, *y, c->t);
    }
    return std::nullopt;
}

/// Writes P = A + N with A additive and N constant on n-cylinders; returns A
/// (nullopt when P has no additive part).
inline std::optional<AdditiveLocallyConstant> additive_part(const ShiftSpace& space, const PotentialSequence& P)
{
    if (auto a = P.as<AdditiveLocallyConstant>())
        return *a;
    if (auto c = P.as<AffineCombination>()) {
        auto x = additive_part(space, *c->base);
        auto y = additive_part(space, *c->other);
        if (x && y)
            return combine(space, *x, *y, c->t);
        if (x)
            return x;
        if (y) {
            AdditiveLocallyConstant zero = *y;
            for (std::size_t i = 0; i < zero.values.size(); ++i)
                if (!std::isnan(zero.values[i])) {
                    zero.values[i] = 0.0;
                    zero.exact[i] = 0;
                }
            return combine(space, zero, *y, c->t);
        }
    }
    return std::nullopt;
}

/// Enumeration settings shared by cylinder-sum operations.
struct Enumeration {
    int budget = kDefaultBudget;
    Executor exec{};
};

/// Empirical almost-additivity defect: the largest
/// |phi_{m+n} - phi_m - phi_n o sigma^m| over all words with 1 <= m <= m_max
/// and 1 <= n <= n_max. A lower bound for the best constant C.
inline double almost_additivity_defect(const ShiftSpace& space, const PotentialSequence& P, int m_max, int n_max,
                                       const Enumeration& en = {})
{
    if (m_max < 1 || n_max < 1)
        throw ValidationError("m_max and n_max must be >= 1");
    const int ext = P.extension();
    require_budget(m_max + n_max + ext, en.budget, "almost_additivity_defect");
    double worst = 0.0;
    for (int m = 1; m <= m_max; ++m) {
        for (int n = 1; n <= n_max; ++n) {
            auto partials = partitioned_fold<double>(space, m + n + ext, en.exec,
                                                     [&](double& acc, std::span<const Symbol> w) {
                const double whole = evaluate(P, w, m + n);
                const double head = evaluate(P, w, m);
                const double tail = evaluate(P, w.subspan(static_cast<std::size_t>(m)), n);
                const double d = std::fabs(whole - head - tail);
                if (std::isfinite(d))
                    acc = std::max(acc, d);
                else if (std::isfinite(whole) || std::isfinite(head) || std::isfinite(tail))
                    acc = std::numeric_limits<double>::infinity();
            });
            for (double p : partials)
                worst = std::max(worst, p);
        }
    }
    return worst;
}

/// Defect over all splits with m + n <= n_max.
inline double almost_additivity_defect(const ShiftSpace& space, const PotentialSequence& P, int n_max,
                                       const Enumeration& en = {})
{
    if (n_max < 2)
        throw ValidationError("n_max must be >= 2");
    const int ext = P.extension();
    require_budget(n_max + ext, en.budget, "almost_additivity_defect");
    double worst = 0.0;
    for (int total = 2; total <= n_max; ++total) {
        auto partials = partitioned_fold<double>(space, total + ext, en.exec,
                                                 [&](double& acc, std::span<const Symbol> w) {
            const double whole = evaluate(P, w, total);
            for (int m = 1; m < total; ++m) {
                const double d = std::fabs(whole - evaluate(P, w, m)
                                           - evaluate(P, w.subspan(static_cast<std::size_t>(m)), total - m));
                if (std::isfinite(d))
                    acc = std::max(acc, d);
            }
        });
        for (double p : partials)
            worst = std::max(worst, p);
    }
    return worst;
}

/// gamma_n(Phi, 2^-k): the largest oscillation of phi_n over an (n+k)-cylinder.
struct DistortionReport {
    int n = 0;
    int delta_exponent = 0;
    double gamma = 0.0;
};

namespace detail {

// Oscillation of S_n g over (n+k)-cylinders for g of range K. Only the last
// K-1 fixed symbols and the free tail matter.
inline double additive_gamma(const ShiftSpace& space, const AdditiveLocallyConstant& g, int n, int k)
{
    const int K = g.range;
    const int fixed_len = n + k;
    const int needed = n + K - 1;
    if (fixed_len >= needed)
        return 0.0;
    const int j0 = std::max(0, fixed_len - K + 1);
    const int prefix_len = fixed_len - j0;
    const int total_len = needed - j0;
    double worst = 0.0;
    for_each_word(space, prefix_len, [&](std::span<const Symbol> p) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for_each_extension(space, p, total_len, [&](std::span<const Symbol> x) {
            double s = 0.0;
            for (int j = j0; j < n; ++j)
                s += g.at(x.subspan(static_cast<std::size_t>(j - j0), static_cast<std::size_t>(K)));
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        });
        worst = std::max(worst, hi - lo);
    });
    return worst;
}

} // namespace detail

inline DistortionReport distortion_gamma(const ShiftSpace& space, const PotentialSequence& P, int n, int k)
{
    if (n < 1 || k < 1)
        throw ValidationError("n and k must be >= 1");
    DistortionReport r{n, k, 0.0};
    // The non-additive remainder is constant on n-cylinders, so only the
    // additive part can oscillate.
    if (auto a = additive_part(space, P))
        r.gamma = detail::additive_gamma(space, *a, n, k);
    return r;
}

/// Locally constant approximation g_N(w) = phi_N([w]) / N with its measured
/// uniform defect max_n (1/n) ||phi_n - S_n g_N||.
struct ApproximationLevel {
    int level = 0;
    PotentialSequence g;
    double defect = 0.0;
    std::vector<int> probe_lengths;
};

struct ApproximationFamily {
    std::vector<ApproximationLevel> levels;
};

inline PotentialSequence approximation_at(const ShiftSpace& space, const PotentialSequence& P, int N)
{
    if (N < 1)
        throw ValidationError("approximation level must be >= 1");
    std::map<std::string, Rational> table;
    for_each_word(space, N, [&](std::span<const Symbol> w) {
        const auto cv = eval_on_cylinder(space, P, w, N);
        table[symbols_to_string(w)] = decimal_rational(0.5 * (cv.inf + cv.sup) / N);
    });
    return PotentialSequence::additive(space, N, table);
}

inline ApproximationFamily approximation_family(const ShiftSpace& space, const PotentialSequence& P,
                                                const std::vector<int>& levels, const Enumeration& en = {})
{
    ApproximationFamily fam;
    for (int N : levels) {
        PotentialSequence g = approximation_at(space, P, N);
        const auto& table = *g.as<AdditiveLocallyConstant>();
        ApproximationLevel lvl{N, g, 0.0, {}};
        const int tail = std::max(N - 1, P.extension());
        for (int n : {N, 2 * N, 4 * N}) {
            if (n + tail > std::min(en.budget, kHardBudgetCap))
                continue;
            lvl.probe_lengths.push_back(n);
            auto partials = partitioned_fold<double>(space, n + tail, en.exec,
                                                     [&](double& acc, std::span<const Symbol> w) {
                double birkhoff = 0.0;
                for (int j = 0; j < n; ++j)
                    birkhoff += table.at(w.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(N)));
                acc = std::max(acc, std::fabs(evaluate(P, w, n) - birkhoff));
            });
            for (double p : partials)
                lvl.defect = std::max(lvl.defect, p / n);
        }
        if (lvl.probe_lengths.empty())
            throw BudgetExceeded("approximation level " + std::to_string(N) + " has no probe length within budget");
        fam.levels.push_back(std::move(lvl));
    }
    return fam;
}

/// Cycle-mean criterion for cohomology to a constant on the locally constant
/// approximation: the interval of periodic averages collapses.
struct CohomologyVerdict {
    bool cohomologous = false;
    SpectrumInterval interval;
};

/// Periodic-average interval [min, max] of an additive potential, from the
/// cycle means of its block graph.
inline SpectrumInterval spectrum_interval(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    BlockGraph graph(space, g.range);
    std::vector<WeightedEdge> edges;
    for (std::size_t u = 0; u < graph.size(); ++u)
        for (int v : graph.successors(u))
            edges.push_back({static_cast<int>(u), v, g.at(graph.state(u))});
    return graph_cycle_mean_extremes(static_cast<int>(graph.size()), edges);
}

inline CohomologyVerdict cohomologous_to_constant(const ShiftSpace& space, const PotentialSequence& P,
                                                  double tolerance, int level = 4)
{
    std::optional<AdditiveLocallyConstant> g = to_additive(space, P);
    if (!g)
        g = *approximation_at(space, P, level).as<AdditiveLocallyConstant>();
    CohomologyVerdict v;
    v.interval = spectrum_interval(space, *g);
    v.cohomologous = v.interval.width() < tolerance;
    return v;
}

} // namespace thermoscope
