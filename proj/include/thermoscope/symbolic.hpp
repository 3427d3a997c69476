#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/rational.hpp"

namespace thermoscope {

using Symbol = std::uint8_t;

/// Longest enumeration ever attempted, whatever the configured budget.
inline constexpr int kHardBudgetCap = 28;
inline constexpr int kDefaultBudget = 24;

/// Symbols are written as single characters: 0-9 then a-z.
inline char symbol_char(Symbol s)
{
    return s < 10 ? static_cast<char>('0' + s) : static_cast<char>('a' + (s - 10));
}

inline Symbol char_symbol(char c)
{
    if (c >= '0' && c <= '9')
        return static_cast<Symbol>(c - '0');
    if (c >= 'a' && c <= 'z')
        return static_cast<Symbol>(10 + (c - 'a'));
    throw ValidationError(std::string("invalid symbol character '") + c + "'");
}

inline std::string symbols_to_string(std::span<const Symbol> w)
{
    std::string s;
    s.reserve(w.size());
    for (Symbol x : w)
        s.push_back(symbol_char(x));
    return s;
}

/// One-sided topologically mixing subshift of finite type.
class ShiftSpace {
public:
    ShiftSpace(int alphabet_size, std::vector<std::vector<int>> transitions)
        : size_(alphabet_size)
    {
        if (alphabet_size < 1 || alphabet_size > 36)
            throw ValidationError("alphabet_size must be in [1, 36]");
        if (static_cast<int>(transitions.size()) != alphabet_size)
            throw ValidationError("transitions must have alphabet_size rows");
        allowed_.assign(static_cast<std::size_t>(size_ * size_), 0);
        for (int a = 0; a < size_; ++a) {
            if (static_cast<int>(transitions[a].size()) != alphabet_size)
                throw ValidationError("transitions row " + std::to_string(a) + " has wrong length");
            for (int b = 0; b < size_; ++b) {
                int v = transitions[a][b];
                if (v != 0 && v != 1)
                    throw ValidationError("transition entries must be 0 or 1");
                allowed_[a * size_ + b] = static_cast<std::uint8_t>(v);
            }
        }
        for (int a = 0; a < size_; ++a) {
            bool row = false, col = false;
            for (int b = 0; b < size_; ++b) {
                row = row || allowed(a, b);
                col = col || allowed(b, a);
            }
            if (!row || !col)
                throw ValidationError("symbol " + std::to_string(a) + " has an empty row or column");
        }
        primitivity_exponent_ = compute_primitivity_exponent();
        if (primitivity_exponent_ == 0)
            throw ValidationError("transition matrix is not primitive (shift is not topologically mixing)");
    }

    static ShiftSpace full(int alphabet_size)
    {
        return ShiftSpace(alphabet_size,
                          std::vector<std::vector<int>>(alphabet_size, std::vector<int>(alphabet_size, 1)));
    }

    static ShiftSpace golden_mean() { return ShiftSpace(2, {{1, 1}, {1, 0}}); }

    int alphabet_size() const { return size_; }

    bool allowed(int a, int b) const { return allowed_[a * size_ + b] != 0; }

    bool is_full() const
    {
        return std::all_of(allowed_.begin(), allowed_.end(), [](std::uint8_t v) { return v != 0; });
    }

    /// Smallest K with transitions^K entrywise positive.
    int primitivity_exponent() const { return primitivity_exponent_; }

    std::vector<std::vector<int>> transitions() const
    {
        std::vector<std::vector<int>> t(size_, std::vector<int>(size_));
        for (int a = 0; a < size_; ++a)
            for (int b = 0; b < size_; ++b)
                t[a][b] = allowed(a, b) ? 1 : 0;
        return t;
    }

    bool admissible(std::span<const Symbol> w) const
    {
        for (Symbol s : w)
            if (s >= size_)
                return false;
        for (std::size_t i = 1; i < w.size(); ++i)
            if (!allowed(w[i - 1], w[i]))
                return false;
        return true;
    }

    friend bool operator==(const ShiftSpace& x, const ShiftSpace& y)
    {
        return x.size_ == y.size_ && x.allowed_ == y.allowed_;
    }

private:
    // Boolean powers up to the Wielandt bound (l-1)^2 + 1; 0 if never positive.
    int compute_primitivity_exponent() const
    {
        const int n = size_;
        const int bound = (n - 1) * (n - 1) + 1;
        std::vector<std::uint8_t> power = allowed_;
        for (int k = 1; k <= bound; ++k) {
            if (std::all_of(power.begin(), power.end(), [](std::uint8_t v) { return v != 0; }))
                return k;
            std::vector<std::uint8_t> next(power.size(), 0);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (power[i * n + j])
                        for (int m = 0; m < n; ++m)
                            if (allowed(j, m))
                                next[i * n + m] = 1;
            power.swap(next);
        }
        return 0;
    }

    int size_;
    std::vector<std::uint8_t> allowed_;
    int primitivity_exponent_ = 0;
};

/// Admissible finite word; identifies the cylinder it defines.
class Word {
public:
    Word() = default;

    Word(const ShiftSpace& space, std::vector<Symbol> symbols) : symbols_(std::move(symbols))
    {
        if (symbols_.empty())
            throw ValidationError("a word has length at least 1");
        if (!space.admissible(symbols_))
            throw ValidationError("inadmissible word '" + symbols_to_string(symbols_) + "'");
    }

    static Word parse(const ShiftSpace& space, std::string_view text)
    {
        std::vector<Symbol> s;
        s.reserve(text.size());
        for (char c : text)
            s.push_back(char_symbol(c));
        return Word(space, std::move(s));
    }

    std::size_t size() const { return symbols_.size(); }
    Symbol operator[](std::size_t i) const { return symbols_[i]; }
    std::span<const Symbol> symbols() const { return symbols_; }
    std::string to_string() const { return symbols_to_string(symbols_); }

    friend bool operator==(const Word&, const Word&) = default;

private:
    std::vector<Symbol> symbols_;
};

/// Lazily enumerates admissible words of a fixed length in lexicographic order.
class WordEnumerator {
public:
    WordEnumerator(const ShiftSpace& space, int n) : space_(&space), n_(n)
    {
        if (n < 1)
            throw ValidationError("word length must be >= 1");
        current_.assign(static_cast<std::size_t>(n), 0);
        fill_minimal(0);
        done_ = false;
    }

    bool done() const { return done_; }
    std::span<const Symbol> current() const { return current_; }

    void advance()
    {
        for (int i = n_ - 1; i >= 0; --i) {
            for (int s = current_[i] + 1; s < space_->alphabet_size(); ++s) {
                if (i == 0 || space_->allowed(current_[i - 1], s)) {
                    current_[i] = static_cast<Symbol>(s);
                    fill_minimal(i + 1);
                    return;
                }
            }
        }
        done_ = true;
    }

private:
    void fill_minimal(int from)
    {
        for (int i = from; i < n_; ++i) {
            int s = 0;
            if (i > 0)
                while (!space_->allowed(current_[i - 1], s))
                    ++s;
            current_[i] = static_cast<Symbol>(s);
        }
    }

    const ShiftSpace* space_;
    int n_;
    std::vector<Symbol> current_;
    bool done_ = true;
};

/// Every admissible word of length n, in lexicographic order.
inline std::vector<Word> enumerate_words(const ShiftSpace& space, int n)
{
    std::vector<Word> out;
    for (WordEnumerator e(space, n); !e.done(); e.advance())
        out.emplace_back(space, std::vector<Symbol>(e.current().begin(), e.current().end()));
    return out;
}

namespace detail {

template <class Visit>
void extend_words(const ShiftSpace& space, std::vector<Symbol>& buf, std::size_t n, Visit& visit)
{
    if (buf.size() == n) {
        visit(std::span<const Symbol>(buf));
        return;
    }
    const int last = buf.empty() ? -1 : buf.back();
    for (int s = 0; s < space.alphabet_size(); ++s) {
        if (last >= 0 && !space.allowed(last, s))
            continue;
        buf.push_back(static_cast<Symbol>(s));
        extend_words(space, buf, n, visit);
        buf.pop_back();
    }
}

} // namespace detail

/// Calls visit(span) for each admissible word of length n extending `prefix`,
/// lexicographically. The prefix itself must be admissible.
template <class Visit>
void for_each_extension(const ShiftSpace& space, std::span<const Symbol> prefix, int n, Visit&& visit)
{
    if (static_cast<int>(prefix.size()) > n)
        return;
    std::vector<Symbol> buf(prefix.begin(), prefix.end());
    buf.reserve(static_cast<std::size_t>(n));
    detail::extend_words(space, buf, static_cast<std::size_t>(n), visit);
}

template <class Visit>
void for_each_word(const ShiftSpace& space, int n, Visit&& visit)
{
    for_each_extension(space, std::span<const Symbol>{}, n, visit);
}

/// Number of admissible words of length n: sum of entries of transitions^(n-1).
inline std::uint64_t word_count(const ShiftSpace& space, int n)
{
    if (n < 1)
        throw ValidationError("word length must be >= 1");
    const int l = space.alphabet_size();
    std::vector<std::uint64_t> ending(static_cast<std::size_t>(l), 1);
    for (int step = 1; step < n; ++step) {
        std::vector<std::uint64_t> next(static_cast<std::size_t>(l), 0);
        for (int a = 0; a < l; ++a)
            for (int b = 0; b < l; ++b)
                if (space.allowed(a, b) && __builtin_add_overflow(next[b], ending[a], &next[b]))
                    throw BudgetExceeded("word count overflows 64 bits");
        ending.swap(next);
    }
    std::uint64_t total = 0;
    for (auto c : ending)
        if (__builtin_add_overflow(total, c, &total))
            throw BudgetExceeded("word count overflows 64 bits");
    return total;
}

/// Fixed prefix partition of the length-n words, independent of thread count.
inline std::vector<std::vector<Symbol>> prefix_partition(const ShiftSpace& space, int n, std::uint64_t min_parts = 64)
{
    int p = 1;
    while (p < n && p < 12 && word_count(space, p) < min_parts)
        ++p;
    p = std::min(p, n);
    std::vector<std::vector<Symbol>> parts;
    for_each_word(space, p, [&](std::span<const Symbol> w) { parts.emplace_back(w.begin(), w.end()); });
    return parts;
}

/// Map-reduce over all admissible words of length n. Each partition is folded
/// sequentially into its own accumulator; the partial accumulators are
/// returned in partition order for a deterministic final reduction.
template <class Acc, class Visit>
std::vector<Acc> partitioned_fold(const ShiftSpace& space, int n, const Executor& exec, Visit visit)
{
    const auto parts = prefix_partition(space, n);
    return exec.map<Acc>(parts.size(), [&](std::size_t i) {
        Acc acc{};
        for_each_extension(space, parts[i], n, [&](std::span<const Symbol> w) { visit(acc, w); });
        return acc;
    });
}

/// Refuses enumeration lengths beyond the budget.
inline void require_budget(int length, int budget, const char* what)
{
    const int limit = std::min(budget, kHardBudgetCap);
    if (length > limit)
        throw BudgetExceeded(std::string(what) + ": enumeration length " + std::to_string(length)
                             + " exceeds budget " + std::to_string(limit));
}

/// Admissible k-blocks as states of a higher-block graph.
class BlockGraph {
public:
    BlockGraph(const ShiftSpace& space, int order) : space_(space), order_(order)
    {
        if (order < 1)
            throw ValidationError("block order must be >= 1");
        std::uint64_t codes = 1;
        for (int i = 0; i < order; ++i) {
            codes *= static_cast<std::uint64_t>(space.alphabet_size());
            if (codes > (1u << 22))
                throw BudgetExceeded("block order too large for the alphabet");
        }
        index_of_code_.assign(codes, -1);
        for_each_word(space, order, [&](std::span<const Symbol> w) {
            index_of_code_[code(w)] = static_cast<int>(states_.size());
            states_.emplace_back(w.begin(), w.end());
        });
        successors_.resize(states_.size());
        for (std::size_t i = 0; i < states_.size(); ++i) {
            const auto& u = states_[i];
            for (int a = 0; a < space.alphabet_size(); ++a) {
                if (!space.allowed(u.back(), a))
                    continue;
                std::vector<Symbol> v(u.begin() + 1, u.end());
                v.push_back(static_cast<Symbol>(a));
                successors_[i].push_back(index_of(v));
            }
        }
    }

    const ShiftSpace& space() const { return space_; }
    int order() const { return order_; }
    std::size_t size() const { return states_.size(); }
    const std::vector<Symbol>& state(std::size_t i) const { return states_[i]; }
    const std::vector<int>& successors(std::size_t i) const { return successors_[i]; }

    std::uint64_t code(std::span<const Symbol> w) const
    {
        std::uint64_t c = 0;
        for (Symbol s : w)
            c = c * static_cast<std::uint64_t>(space_.alphabet_size()) + s;
        return c;
    }

    /// State index of a k-word, or -1 if inadmissible.
    int index_of(std::span<const Symbol> w) const
    {
        if (static_cast<int>(w.size()) != order_)
            throw ValidationError("block length mismatch");
        for (Symbol s : w)
            if (s >= space_.alphabet_size())
                return -1;
        return index_of_code_[code(w)];
    }

private:
    ShiftSpace space_;
    int order_;
    std::vector<std::vector<Symbol>> states_;
    std::vector<int> index_of_code_;
    std::vector<std::vector<int>> successors_;
};

/// Closed interval of ergodic averages [lo, hi].
struct SpectrumInterval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
    bool degenerate(double tolerance = 0.0) const { return hi - lo <= tolerance; }
};

struct WeightedEdge {
    int from;
    int to;
    double weight;
};

namespace detail {

// Karp's minimum cycle mean on a strongly connected graph.
template <class Scalar>
Scalar karp_min_mean(int nodes, const std::vector<int>& from, const std::vector<int>& to,
                     const std::vector<Scalar>& weight)
{
    std::vector<std::vector<std::optional<Scalar>>> dist(static_cast<std::size_t>(nodes) + 1,
                                                         std::vector<std::optional<Scalar>>(nodes));
    dist[0][0] = Scalar(0);
    for (int k = 1; k <= nodes; ++k) {
        for (std::size_t e = 0; e < from.size(); ++e) {
            const auto& d = dist[k - 1][from[e]];
            if (!d)
                continue;
            Scalar cand = *d + weight[e];
            auto& slot = dist[k][to[e]];
            if (!slot || cand < *slot)
                slot = cand;
        }
    }
    std::optional<Scalar> best;
    for (int v = 0; v < nodes; ++v) {
        if (!dist[nodes][v])
            continue;
        std::optional<Scalar> worst;
        for (int k = 0; k < nodes; ++k) {
            if (!dist[k][v])
                continue;
            Scalar m = (*dist[nodes][v] - *dist[k][v]) / Scalar(nodes - k);
            if (!worst || m > *worst)
                worst = m;
        }
        if (worst && (!best || *worst < *best))
            best = worst;
    }
    if (!best)
        throw ValidationError("graph has no cycle reachable from node 0");
    return *best;
}

template <class Scalar>
SpectrumInterval karp_extremes(int nodes, const std::vector<WeightedEdge>& edges)
{
    std::vector<int> from, to;
    std::vector<Scalar> w, neg;
    for (const auto& e : edges) {
        from.push_back(e.from);
        to.push_back(e.to);
        Scalar s;
        if constexpr (std::is_same_v<Scalar, Rational>)
            s = Rational(e.weight); // exact dyadic value of the double
        else
            s = e.weight;
        w.push_back(s);
        neg.push_back(-s);
    }
    Scalar lo = karp_min_mean(nodes, from, to, w);
    Scalar hi = -karp_min_mean(nodes, from, to, neg);
    if constexpr (std::is_same_v<Scalar, Rational>)
        return {to_double(lo), to_double(hi)};
    else
        return {lo, hi};
}

} // namespace detail

/// Min and max cycle means of a strongly connected weighted graph. Exact
/// rational arithmetic on the (dyadic) input weights for graphs of at most
/// `exact_node_limit` nodes, floating point beyond.
inline SpectrumInterval graph_cycle_mean_extremes(int nodes, const std::vector<WeightedEdge>& edges,
                                                  int exact_node_limit = 64)
{
    if (nodes < 1)
        throw ValidationError("graph must have at least one node");
    if (nodes <= exact_node_limit)
        return detail::karp_extremes<Rational>(nodes, edges);
    return detail::karp_extremes<double>(nodes, edges);
}

/// Min/max cycle mean of transition weights weights[a][b] on the admissible
/// transitions of the shift: the endpoints of the set of ergodic averages of
/// the induced locally constant observable.
inline SpectrumInterval cycle_mean_extremes(const ShiftSpace& space, const std::vector<std::vector<double>>& weights)
{
    const int l = space.alphabet_size();
    if (static_cast<int>(weights.size()) != l)
        throw ValidationError("weights must be alphabet_size x alphabet_size");
    std::vector<WeightedEdge> edges;
    for (int a = 0; a < l; ++a) {
        if (static_cast<int>(weights[a].size()) != l)
            throw ValidationError("weights must be alphabet_size x alphabet_size");
        for (int b = 0; b < l; ++b) {
            if (!space.allowed(a, b))
                continue;
            if (!std::isfinite(weights[a][b]))
                throw ValidationError("weight on an admissible transition must be finite");
            edges.push_back({a, b, weights[a][b]});
        }
    }
    return graph_cycle_mean_extremes(l, edges);
}

} // namespace thermoscope
