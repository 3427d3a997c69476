#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
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

/// Weighted block matrix of a range-k potential: A(u, v) = exp(g(u) - shift)
/// on block-graph edges, with `shift` = max g keeping entries in range.
struct TransferMatrix {
    BlockGraph graph;
    Eigen::MatrixXd A;
    double shift = 0.0;
};

inline TransferMatrix transfer_matrix(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    BlockGraph graph(space, g.range);
    const auto n = static_cast<Eigen::Index>(graph.size());
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < graph.size(); ++u)
        shift = std::max(shift, g.at(graph.state(u)));
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t u = 0; u < graph.size(); ++u) {
        const double w = std::exp(g.at(graph.state(u)) - shift);
        for (int v : graph.successors(u))
            A(static_cast<Eigen::Index>(u), v) = w;
    }
    return {std::move(graph), std::move(A), shift};
}

/// Pressure and Perron eigendata of a locally constant potential.
struct PerronSolution {
    double pressure = 0.0;
    PerronData data;
};

inline PerronSolution solve_pressure(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    auto tm = transfer_matrix(space, g);
    PerronSolution s;
    s.data = perron(tm.A);
    s.pressure = s.data.log_root + tm.shift;
    return s;
}

inline double pressure_exact(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    return solve_pressure(space, g).pressure;
}

inline double pressure_exact(const ShiftSpace& space, const PotentialSequence& P)
{
    auto g = to_additive(space, P);
    if (!g)
        throw DomainError("exact pressure needs a locally constant potential");
    return pressure_exact(space, *g);
}

/// Stationary weights pi_u = l_u r_u / (l . r) from Perron eigendata.
inline Eigen::VectorXd perron_stationary(const PerronData& d)
{
    Eigen::VectorXd pi = d.left.cwiseProduct(d.right);
    return pi / pi.sum();
}

/// Equilibrium state of a locally constant potential as a Markov measure on
/// blocks of its range: Q(u, v) = A(u, v) r(v) / (lambda r(u)).
inline MarkovMeasure equilibrium_measure(const ShiftSpace& space, const AdditiveLocallyConstant& g)
{
    auto tm = transfer_matrix(space, g);
    const PerronData d = perron(tm.A);
    const auto n = tm.A.rows();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index u = 0; u < n; ++u) {
        CompensatedSum row;
        for (int v : tm.graph.successors(static_cast<std::size_t>(u))) {
            Q(u, v) = tm.A(u, v) * d.right(v);
            row.add(Q(u, v));
        }
        Q.row(u) /= row.value();
    }
    return MarkovMeasure(std::move(tm.graph), std::move(Q), perron_stationary(d));
}

inline MarkovMeasure equilibrium_measure(const ShiftSpace& space, const PotentialSequence& P)
{
    auto g = to_additive(space, P);
    if (!g)
        throw DomainError("equilibrium measures are built for locally constant potentials");
    return equilibrium_measure(space, *g);
}

/// h = -sum_i pi_i sum_j Q_ij log Q_ij.
inline double entropy(const MarkovMeasure& m)
{
    CompensatedSum h;
    for (std::size_t u = 0; u < m.states(); ++u) {
        const auto i = static_cast<Eigen::Index>(u);
        for (int v : m.graph().successors(u)) {
            const double q = m.Q()(i, v);
            if (q > 0.0)
                h.add(-m.pi()(i) * q * std::log(q));
        }
    }
    return h.value();
}

/// Integral of a locally constant g against m, summed over g's blocks.
inline double integrate(const ShiftSpace& space, const AdditiveLocallyConstant& g, const MarkovMeasure& m)
{
    CompensatedSum s;
    for_each_word(space, g.range, [&](std::span<const Symbol> w) { s.add(m.cylinder(w) * g.at(w)); });
    return s.value();
}

/// (1/n) int phi_n dm as an exact cylinder sum; independent of n for additive kinds.
inline double kingman_functional(const ShiftSpace& space, const PotentialSequence& P, const MarkovMeasure& m, int n,
                                 const Enumeration& en = {})
{
    if (auto g = to_additive(space, P))
        return integrate(space, *g, m);
    if (n < 1)
        throw ValidationError("n must be >= 1");
    const int len = n + P.extension();
    require_budget(len, en.budget, "kingman_functional");
    auto partials = partitioned_fold<CompensatedSum>(space, len, en.exec,
                                                     [&](CompensatedSum& acc, std::span<const Symbol> w) {
        const double mass = m.cylinder(w);
        if (mass > 0.0)
            acc.add(mass * evaluate(P, w, n));
    });
    CompensatedSum total;
    for (const auto& p : partials)
        total.add(p);
    return total.value() / n;
}

/// Kingman functional at finite n with the almost-additivity bracket value +- C/n.
struct KingmanEstimate {
    int n = 0;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline KingmanEstimate kingman_bracket(const ShiftSpace& space, const PotentialSequence& P, const MarkovMeasure& m,
                                       int n, double C_used, const Enumeration& en = {})
{
    const double v = kingman_functional(space, P, m, n, en);
    return {n, v, v - C_used / n, v + C_used / n};
}

/// Pressure bracket at horizon n. `method` names the argument behind it.
struct PressureBracket {
    int n = 0;
    std::optional<double> lower;
    double upper = 0.0;
    std::optional<double> exact;
    std::string method;

    double width() const { return lower ? upper - *lower : std::numeric_limits<double>::infinity(); }
};

namespace detail {

// Collatz-Wielandt bounds on the Perron root from x = A^n 1:
// min_i (A^n x)_i / x_i <= lambda^n <= max_i (A^n x)_i / x_i.
inline std::pair<double, double> collatz_wielandt_log_bounds(const Eigen::MatrixXd& A, int n)
{
    Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
    double log_scale_x = 0.0;
    for (int i = 0; i < n; ++i) {
        x = A * x;
        const double s = x.maxCoeff();
        x /= s;
        log_scale_x += std::log(s);
    }
    Eigen::VectorXd y = x;
    double log_scale_y = 0.0;
    for (int i = 0; i < n; ++i) {
        y = A * y;
        const double s = y.maxCoeff();
        y /= s;
        log_scale_y += std::log(s);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double r = std::log(y(i)) - std::log(x(i));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {(lo + log_scale_y) / n, (hi + log_scale_y) / n};
}

} // namespace detail

/// Locally constant potentials get a Collatz-Wielandt bracket on the
/// transfer matrix. Other kinds get Fekete bounds from
/// a_n = log sum_{|w|=n} exp(sup_[w] phi_n): (a_n + C)/n above, and
/// (a_n - C)/n below on full shifts only, since a general shift of finite
/// type does not allow free concatenation.
inline PressureBracket pressure_bracket(const ShiftSpace& space, const PotentialSequence& P, int n, double C_used,
                                        const Enumeration& en = {})
{
    if (n < 1)
        throw ValidationError("n must be >= 1");
    if (C_used < 0)
        throw ValidationError("C_used must be >= 0");
    PressureBracket b;
    b.n = n;
    if (auto g = to_additive(space, P)) {
        auto tm = transfer_matrix(space, *g);
        auto [lo, hi] = detail::collatz_wielandt_log_bounds(tm.A, n);
        b.lower = lo + tm.shift;
        b.upper = hi + tm.shift;
        b.exact = pressure_exact(space, *g);
        b.method = "collatz-wielandt";
        return b;
    }
    const int ext = P.extension();
    require_budget(n + ext, en.budget, "pressure_bracket");
    auto partials = partitioned_fold<LogSumExp>(space, n, en.exec, [&](LogSumExp& acc, std::span<const Symbol> w) {
        if (ext == 0) {
            acc.add(evaluate(P, w, n));
            return;
        }
        double sup = -std::numeric_limits<double>::infinity();
        for_each_extension(space, w, n + ext, [&](std::span<const Symbol> x) { sup = std::max(sup, evaluate(P, x, n)); });
        acc.add(sup);
    });
    LogSumExp total;
    for (const auto& p : partials)
        total.add(p);
    const double a_n = total.value();

    double C_up = C_used;
    double C_down = C_used;
    if (auto c = P.as<CocycleNorm>()) {
        if (c->q >= 0)
            C_up = 0.0;
        if (c->q <= 0)
            C_down = 0.0;
    }
    b.upper = (a_n + C_up) / n;
    if (space.is_full())
        b.lower = (a_n - C_down) / n;
    b.method = "fekete";
    return b;
}

/// Gibbs ratios mu([w]) / exp(-nP + phi_n(w)) over all words up to n_max.
struct GibbsCertificate {
    int n_max = 0;
    double P = 0.0;
    double K_measured = 1.0;
    std::vector<double> K_by_length; // entry n-1 is the constant over words of length exactly n
};

inline GibbsCertificate gibbs_certificate(const ShiftSpace& space, const MarkovMeasure& m, const PotentialSequence& P,
                                          double pressure, int n_max, const Enumeration& en = {})
{
    if (n_max < 1)
        throw ValidationError("n_max must be >= 1");
    const int ext = P.extension();
    require_budget(n_max + ext, en.budget, "gibbs_certificate");
    GibbsCertificate cert;
    cert.n_max = n_max;
    cert.P = pressure;
    for (int n = 1; n <= n_max; ++n) {
        auto partials = partitioned_fold<double>(space, n, en.exec, [&](double& acc, std::span<const Symbol> w) {
            const double log_mass = m.log_cylinder(w);
            auto check = [&](double phi) {
                const double r = log_mass - (-n * pressure + phi);
                acc = std::max(acc, std::fabs(r));
            };
            if (ext == 0) {
                check(evaluate(P, w, n));
            } else {
                for_each_extension(space, w, n + ext, [&](std::span<const Symbol> x) { check(evaluate(P, x, n)); });
            }
        });
        double worst = 0.0;
        for (double p : partials)
            worst = std::max(worst, p);
        cert.K_by_length.push_back(std::exp(worst));
        cert.K_measured = std::max(cert.K_measured, std::exp(worst));
    }
    return cert;
}

} // namespace thermoscope
