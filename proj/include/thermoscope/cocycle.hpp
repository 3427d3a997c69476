#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/linalg.hpp"
#include "thermoscope/markov.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

/// One d x d real matrix per symbol of the base shift.
class CocycleSpec {
public:
    /// Products must not all vanish up to this length.
    static constexpr int kProbeHorizon = 8;

    CocycleSpec(ShiftSpace base, std::vector<Matrix> matrices) : base_(std::move(base)), matrices_(std::move(matrices))
    {
        if (static_cast<int>(matrices_.size()) != base_.alphabet_size())
            throw ValidationError("need exactly one matrix per symbol");
        const auto d = matrices_.front().rows();
        if (d < 1 || d > kMaxCocycleDimension)
            throw ValidationError("matrix dimension must be in [1, 8]");
        for (const auto& m : matrices_) {
            if (m.rows() != d || m.cols() != d)
                throw ValidationError("all matrices must be square with the same dimension");
            if (!m.allFinite())
                throw ValidationError("matrix entries must be finite");
        }
        // Nonzero products at the horizon imply nonzero products at every shorter length.
        int horizon = kProbeHorizon;
        while (horizon > 1 && word_count(base_, horizon) > 1000000)
            --horizon;
        bool nonzero = false;
        for_each_word(base_, horizon, [&](std::span<const Symbol> w) {
            if (!nonzero && ordered_product(matrices_, w).cwiseAbs().maxCoeff() > 0.0)
                nonzero = true;
        });
        if (!nonzero)
            throw ValidationError("every product of length " + std::to_string(horizon) + " vanishes");
    }

    const ShiftSpace& base() const { return base_; }
    const std::vector<Matrix>& matrices() const { return matrices_; }
    int dimension() const { return static_cast<int>(matrices_.front().rows()); }

private:
    ShiftSpace base_;
    std::vector<Matrix> matrices_;
};

/// M_w = M_{w_n} ... M_{w_1}.
inline Matrix word_product(const CocycleSpec& spec, const Word& w)
{
    if (!spec.base().admissible(w.symbols()))
        throw ValidationError("inadmissible word '" + w.to_string() + "'");
    return ordered_product(spec.matrices(), w.symbols());
}

enum class Verdict { Irreducible, Reducible, Inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Irreducible:
        return "irreducible";
    case Verdict::Reducible:
        return "reducible";
    default:
        return "inconclusive";
    }
}

struct IrreducibilityReport {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<Eigen::VectorXcd> witness; // basis of a common invariant subspace
    int algebra_dimension = 0;
};

namespace detail {

// Grows an orthonormal basis of vectorised matrices; returns false when x is
// already in the span.
inline bool extend_basis(std::vector<Eigen::VectorXd>& basis, const Matrix& x, double tolerance)
{
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
    const double scale = v.norm();
    if (scale == 0.0)
        return false;
    v /= scale;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& b : basis)
            v -= b.dot(v) * b;
    const double rest = v.norm();
    if (rest <= tolerance)
        return false;
    basis.push_back(v / rest);
    return true;
}

inline Matrix unvec(const Eigen::VectorXd& v, Eigen::Index d)
{
    Matrix m(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i)
            m(i, j) = v(j * d + i);
    return m;
}

// Is v an eigenvector of every matrix?
inline bool common_eigenvector(const std::vector<Matrix>& ms, const Eigen::VectorXcd& v, double tolerance)
{
    for (const auto& m : ms) {
        const Eigen::MatrixXcd mc = m.cast<std::complex<double>>();
        const Eigen::VectorXcd mv = mc * v;
        const std::complex<double> rayleigh = v.dot(mv) / v.dot(v);
        const double scale = std::max(1.0, m.norm());
        if ((mv - rayleigh * v).norm() > tolerance * scale * v.norm())
            return false;
    }
    return true;
}

} // namespace detail

/// Burnside test on the algebra generated by the matrices (words of length
/// <= d^2 including the identity), then a search for a common eigenvector
/// as an explicit invariant line.
inline IrreducibilityReport irreducibility_check(const CocycleSpec& spec, double tolerance = 1e-9)
{
    const int d = spec.dimension();
    if (d > 4)
        throw ValidationError("irreducibility check supports d <= 4");
    IrreducibilityReport rep;
    std::vector<Eigen::VectorXd> basis;
    std::vector<Matrix> frontier{Matrix::Identity(d, d)};
    detail::extend_basis(basis, frontier.front(), tolerance);
    for (int length = 1; length <= d * d && !frontier.empty(); ++length) {
        std::vector<Matrix> next;
        for (const auto& f : frontier)
            for (const auto& m : spec.matrices()) {
                Matrix x = (m * f).eval();
                if (detail::extend_basis(basis, x, tolerance))
                    next.push_back(detail::unvec(basis.back(), d));
            }
        frontier = std::move(next);
    }
    rep.algebra_dimension = static_cast<int>(basis.size());
    if (rep.algebra_dimension == d * d) {
        rep.verdict = Verdict::Irreducible;
        return rep;
    }
    // Eigenvectors of each generator (and of a generic combination) as
    // candidates for a shared invariant line.
    std::vector<Matrix> candidates = spec.matrices();
    Matrix mix = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < spec.matrices().size(); ++i)
        mix += (1.0 + 0.6180339887498949 * static_cast<double>(i)) * spec.matrices()[i];
    candidates.push_back(mix);
    for (const auto& c : candidates) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(c), true);
        for (Eigen::Index j = 0; j < es.eigenvectors().cols(); ++j) {
            Eigen::VectorXcd v = es.eigenvectors().col(j);
            if (detail::common_eigenvector(spec.matrices(), v, 1e-8)) {
                // Rotate so the largest entry is real and positive.
                Eigen::Index arg = 0;
                v.cwiseAbs().maxCoeff(&arg);
                v *= std::abs(v(arg)) / v(arg);
                v.normalize();
                rep.witness.push_back(v);
                rep.verdict = Verdict::Reducible;
                return rep;
            }
        }
    }
    rep.verdict = Verdict::Inconclusive;
    return rep;
}

/// c_hat = min ||M_{uv}|| / (||M_u|| ||M_v||) over admissible uv with
/// 1 <= |u|, |v| <= L. An estimate of the reverse submultiplicativity
/// constant, not a proven bound.
struct ReverseConstant {
    double c_hat = 1.0;
    int pair_length = 0;
};

inline ReverseConstant reverse_constant(const CocycleSpec& spec, int L)
{
    if (L < 1)
        throw ValidationError("pair length must be >= 1");
    struct Entry {
        Symbol first;
        Symbol last;
        Matrix product;
        double norm;
    };
    std::vector<Entry> words;
    for (int len = 1; len <= L; ++len) {
        if (word_count(spec.base(), len) > 4096)
            throw BudgetExceeded("too many words for the reverse constant at this pair length");
        for_each_word(spec.base(), len, [&](std::span<const Symbol> w) {
            Matrix p = ordered_product(spec.matrices(), w);
            words.push_back({w.front(), w.back(), p, operator_norm(p)});
        });
    }
    ReverseConstant rc{1.0, L};
    for (const auto& u : words) {
        if (u.norm == 0.0)
            continue;
        for (const auto& v : words) {
            if (v.norm == 0.0 || !spec.base().allowed(u.last, v.first))
                continue;
            const double ratio = operator_norm((v.product * u.product).eval()) / (u.norm * v.norm);
            rc.c_hat = std::min(rc.c_hat, ratio);
        }
    }
    return rc;
}

/// One row of the cocycle pressure series. `lower` is withheld when c_hat
/// vanishes or when the base is not a full shift.
struct CocycleBracket {
    int n = 0;
    double upper = 0.0;
    std::optional<double> lower;
    bool heuristic = false; // depends on c_hat
    std::string flag;
};

struct CocyclePressure {
    double q = 0.0;
    ReverseConstant reverse;
    std::vector<CocycleBracket> rows;
};

/// a_n = log sum_{|w| = n} ||M_w||^q.
inline double cocycle_partition_log(const CocycleSpec& spec, double q, int n, const Enumeration& en = {})
{
    require_budget(n, en.budget, "cocycle_pressure");
    auto partials = partitioned_fold<LogSumExp>(spec.base(), n, en.exec, [&](LogSumExp& acc, std::span<const Symbol> w) {
        const double norm = operator_norm(ordered_product(spec.matrices(), w));
        if (norm == 0.0) {
            if (q < 0)
                throw DomainError("a product vanishes, so negative q is undefined");
            if (q == 0)
                acc.add(0.0);
            return;
        }
        acc.add(q * std::log(norm));
    });
    LogSumExp total;
    for (const auto& p : partials)
        total.add(p);
    return total.value();
}

inline CocyclePressure cocycle_pressure(const CocycleSpec& spec, double q, const std::vector<int>& n_list,
                                        int pair_length = 6, const Enumeration& en = {}, double vanishing = 1e-12)
{
    CocyclePressure out;
    out.q = q;
    out.reverse = reverse_constant(spec, pair_length);
    const double log_c = out.reverse.c_hat > vanishing ? std::log(out.reverse.c_hat) : -std::numeric_limits<double>::infinity();
    const bool full = spec.base().is_full();
    for (int n : n_list) {
        if (n < 1)
            throw ValidationError("horizons must be >= 1");
        const double a = cocycle_partition_log(spec, q, n, en);
        CocycleBracket row;
        row.n = n;
        if (q >= 0) {
            // Submultiplicativity makes a_n subadditive on any shift of finite type.
            row.upper = a / n;
            if (!full) {
                row.flag = "lower-withheld-sft";
            } else if (q == 0) {
                row.lower = a / n;
            } else if (std::isfinite(log_c)) {
                row.lower = (a + q * log_c) / n;
                row.heuristic = true;
                row.flag = "heuristic";
            } else {
                row.flag = "lower-withheld-c-vanishes";
            }
        } else {
            if (std::isfinite(log_c)) {
                row.upper = (a + q * log_c) / n;
                row.heuristic = true;
                row.flag = "heuristic";
            } else {
                row.upper = std::numeric_limits<double>::infinity();
                row.flag = "upper-withheld-c-vanishes";
            }
            if (full)
                row.lower = a / n;
            else
                row.flag += row.flag.empty() ? "lower-withheld-sft" : ";lower-withheld-sft";
        }
        out.rows.push_back(row);
    }
    return out;
}

/// (1/n) sum_w mu([w]) log ||M_w|| with the bracket
/// [(a_n + log c_hat)/n, a_n/n] for the top Lyapunov exponent.
struct LyapunovEstimate {
    int n = 0;
    double value = 0.0;
    std::optional<double> lower;
    double upper = 0.0;
    ReverseConstant reverse;
    bool heuristic = true;
};

inline LyapunovEstimate lyapunov_exponent(const CocycleSpec& spec, const MarkovMeasure& m, int n, int pair_length = 6,
                                          const Enumeration& en = {}, double vanishing = 1e-12)
{
    if (n < 1)
        throw ValidationError("n must be >= 1");
    if (!(m.space() == spec.base()))
        throw ValidationError("measure lives on a different shift");
    require_budget(n, en.budget, "lyapunov_exponent");
    auto partials = partitioned_fold<CompensatedSum>(spec.base(), n, en.exec,
                                                     [&](CompensatedSum& acc, std::span<const Symbol> w) {
        const double mass = m.cylinder(w);
        if (mass == 0.0)
            return;
        const double norm = operator_norm(ordered_product(spec.matrices(), w));
        acc.add(norm == 0.0 ? -std::numeric_limits<double>::infinity() : mass * std::log(norm));
    });
    CompensatedSum total;
    for (const auto& p : partials)
        total.add(p);
    LyapunovEstimate e;
    e.n = n;
    e.value = total.value() / n;
    e.upper = e.value;
    e.reverse = reverse_constant(spec, pair_length);
    if (e.reverse.c_hat > vanishing)
        e.lower = e.value + std::log(e.reverse.c_hat) / n;
    return e;
}

/// Scalar potential q log ||M_w|| as a potential sequence.
inline PotentialSequence norm_potential(const CocycleSpec& spec, double q)
{
    return PotentialSequence::cocycle_norm(spec.matrices(), q);
}

} // namespace thermoscope
