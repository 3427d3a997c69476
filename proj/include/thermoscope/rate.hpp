#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "thermoscope/error.hpp"
#include "thermoscope/parallel.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/thermo.hpp"

namespace thermoscope {

/// t_min, t_min + step, ... up to t_max (inclusive within half a step).
inline std::vector<double> uniform_grid(double t_min, double t_max, double step)
{
    if (!(step > 0) || !(t_max >= t_min))
        throw ValidationError("grid needs t_min <= t_max and step > 0");
    const auto count = static_cast<long>(std::floor((t_max - t_min) / step + 0.5)) + 1;
    if (count > 10000000)
        throw ValidationError("grid has too many points");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
        double t = t_min + static_cast<double>(i) * step;
        if (std::fabs(t) < 1e-9 * step)
            t = 0.0;
        grid[static_cast<std::size_t>(i)] = t;
    }
    return grid;
}

/// E(t) = P(phi + t psi) - P(phi) with E'(t) = int psi d mu_{phi + t psi}.
struct FreeEnergyCurve {
    std::vector<double> t;
    std::vector<double> E;
    std::vector<double> Eprime;
    double P_phi = 0.0;
    double mean = 0.0; // E'(0)
    int block_order = 1;
};

namespace detail {

struct PairOnCommonRange {
    AdditiveLocallyConstant phi;
    AdditiveLocallyConstant psi;
};

inline PairOnCommonRange common_range(const ShiftSpace& space, const PotentialSequence& Phi,
                                      const PotentialSequence& Psi)
{
    auto phi = to_additive(space, Phi);
    auto psi = to_additive(space, Psi);
    if (!phi || !psi)
        throw DomainError("free energy needs locally constant potentials; pass an approximation level first");
    const int range = std::max(phi->range, psi->range);
    return {lift(space, *phi, range), lift(space, *psi, range)};
}

// E and E' at one t from the Perron data of phi + t psi.
inline std::pair<double, double> tilted(const ShiftSpace& space, const PairOnCommonRange& pair, double t)
{
    AdditiveLocallyConstant g = pair.phi;
    for (std::size_t i = 0; i < g.values.size(); ++i)
        if (!std::isnan(g.values[i]))
            g.values[i] += t * pair.psi.values[i];
    auto sol = solve_pressure(space, g);
    const Eigen::VectorXd pi = perron_stationary(sol.data);
    BlockGraph graph(space, g.range);
    CompensatedSum mean;
    for (std::size_t u = 0; u < graph.size(); ++u)
        mean.add(pi(static_cast<Eigen::Index>(u)) * pair.psi.at(graph.state(u)));
    return {sol.pressure, mean.value()};
}

} // namespace detail

inline FreeEnergyCurve free_energy_curve(const ShiftSpace& space, const PotentialSequence& Phi,
                                         const PotentialSequence& Psi, const std::vector<double>& t_grid,
                                         const Executor& exec = Executor{})
{
    if (t_grid.empty())
        throw ValidationError("t grid is empty");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw ValidationError("t grid must be strictly increasing");
    const auto pair = detail::common_range(space, Phi, Psi);
    FreeEnergyCurve c;
    c.block_order = pair.phi.range;
    auto base = detail::tilted(space, pair, 0.0);
    c.P_phi = base.first;
    c.mean = base.second;
    auto points = exec.map<std::pair<double, double>>(t_grid.size(), [&](std::size_t i) {
        return t_grid[i] == 0.0 ? base : detail::tilted(space, pair, t_grid[i]);
    });
    c.t = t_grid;
    for (const auto& [p, d] : points) {
        c.E.push_back(p - c.P_phi);
        c.Eprime.push_back(d);
    }
    return c;
}

/// Discrete convex conjugate of a free-energy curve, evaluated on s_grid.
class RateFunction {
public:
    RateFunction(FreeEnergyCurve curve, const std::vector<double>& s_grid) : curve_(std::move(curve))
    {
        const auto [lo, hi] = std::minmax_element(curve_.Eprime.begin(), curve_.Eprime.end());
        domain_ = {*lo, *hi};
        mean_ = curve_.mean;
        for (std::size_t i = 0; i + 1 < curve_.t.size(); ++i)
            grid_modulus_ = std::max(grid_modulus_,
                                     (curve_.t[i + 1] - curve_.t[i]) * std::fabs(curve_.Eprime[i + 1] - curve_.Eprime[i]));
        for (double s : s_grid) {
            if (in_domain(s)) {
                s_.push_back(s);
                I_.push_back(conjugate(s));
            } else {
                rejected_.push_back(s);
            }
        }
    }

    const std::vector<double>& s_grid() const { return s_; }
    const std::vector<double>& I() const { return I_; }
    const std::vector<double>& rejected() const { return rejected_; }
    double mean() const { return mean_; }
    const SpectrumInterval& domain() const { return domain_; }
    /// max over grid cells of dt * dE': bounds the discrete conjugation error.
    double grid_modulus() const { return grid_modulus_; }
    const FreeEnergyCurve& curve() const { return curve_; }

    bool in_domain(double s) const { return domain_.contains(s); }
    bool degenerate(double tolerance = 1e-9) const { return domain_.degenerate(tolerance); }

    /// I(s); throws DomainError outside [min E', max E'].
    double value(double s) const
    {
        if (!in_domain(s))
            throw DomainError("s is outside the effective domain of the rate function");
        return conjugate(s);
    }

    /// Grid t attaining the conjugate at s (smallest t on ties).
    double argmax_t(double s) const { return curve_.t[argmax(s)]; }

private:
    std::size_t argmax(double s) const
    {
        std::size_t best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < curve_.t.size(); ++i) {
            const double v = s * curve_.t[i] - curve_.E[i];
            if (v > best_value) {
                best_value = v;
                best = i;
            }
        }
        return best;
    }

    double conjugate(double s) const
    {
        const std::size_t i = argmax(s);
        return s * curve_.t[i] - curve_.E[i];
    }

    FreeEnergyCurve curve_;
    SpectrumInterval domain_;
    double mean_ = 0.0;
    double grid_modulus_ = 0.0;
    std::vector<double> s_;
    std::vector<double> I_;
    std::vector<double> rejected_;
};

/// `points` equally spaced interior points of the slope interval.
inline std::vector<double> interior_grid(const SpectrumInterval& domain, int points)
{
    std::vector<double> s;
    if (points < 1 || domain.degenerate(1e-9))
        return s;
    for (int j = 1; j <= points; ++j)
        s.push_back(domain.lo + (domain.hi - domain.lo) * j / (points + 1));
    return s;
}

inline RateFunction legendre_transform(FreeEnergyCurve curve, const std::vector<double>& s_grid)
{
    return RateFunction(std::move(curve), s_grid);
}

struct ResidualReport {
    double residual = 0.0;
    bool degenerate = false;
};

/// max over grid t of |I(E'(t)) - (t E'(t) - E(t))|.
inline ResidualReport variational_property_residual(const FreeEnergyCurve& curve, const RateFunction& rate)
{
    ResidualReport r;
    if (rate.degenerate()) {
        r.degenerate = true;
        return r;
    }
    for (std::size_t i = 0; i < curve.t.size(); ++i) {
        const double s = curve.Eprime[i];
        if (!rate.in_domain(s))
            continue;
        const double expected = curve.t[i] * s - curve.E[i];
        r.residual = std::max(r.residual, std::fabs(rate.value(s) - expected));
    }
    return r;
}

/// max over probes t of |I(E'(t)) - (P(phi) - h(mu_t) - int phi d mu_t)|
/// with mu_t the equilibrium state of phi + t psi.
inline double variational_formula_check(const ShiftSpace& space, const PotentialSequence& Phi,
                                        const PotentialSequence& Psi, const RateFunction& rate,
                                        const std::vector<double>& t_probes)
{
    const auto pair = detail::common_range(space, Phi, Psi);
    const double P_phi = pressure_exact(space, pair.phi);
    double worst = 0.0;
    for (double t : t_probes) {
        const auto tilt = combine(space, pair.phi, pair.psi, t);
        const MarkovMeasure mu = equilibrium_measure(space, tilt);
        const double slope = integrate(space, pair.psi, mu);
        const double rhs = P_phi - entropy(mu) - integrate(space, pair.phi, mu);
        worst = std::max(worst, std::fabs(rate.value(slope) - rhs));
    }
    return worst;
}

/// Symmetric window of s-grid points around the mean where the discrete
/// second differences of I exceed theta.
struct ConvexityWindow {
    std::optional<SpectrumInterval> window;
    bool degenerate = false;
};

inline ConvexityWindow strict_convexity_window(const RateFunction& rate, double theta = 1e-8)
{
    ConvexityWindow out;
    const auto& s = rate.s_grid();
    const auto& I = rate.I();
    if (rate.degenerate() || s.size() < 3) {
        out.degenerate = true;
        return out;
    }
    std::size_t center = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (std::fabs(s[i] - rate.mean()) < std::fabs(s[center] - rate.mean()))
            center = i;
    auto convex_at = [&](std::size_t i) {
        return i > 0 && i + 1 < s.size() && I[i - 1] - 2 * I[i] + I[i + 1] > theta;
    };
    if (!convex_at(center)) {
        out.degenerate = true;
        return out;
    }
    std::size_t k = 0;
    while (center >= k + 1 && convex_at(center - k - 1) && convex_at(center + k + 1))
        ++k;
    out.window = SpectrumInterval{s[center - k], s[center + k]};
    return out;
}

struct WindowMinimum {
    double c_star = 0.0;
    double value = 0.0;
};

/// Minimum of I over a closed interval J: the mean when J contains it,
/// otherwise the endpoint of J nearest the mean.
inline WindowMinimum min_over_window(const RateFunction& rate, double lo, double hi)
{
    if (lo > hi)
        throw ValidationError("window endpoints out of order");
    const auto& d = rate.domain();
    if (hi < d.lo || lo > d.hi)
        throw DomainError("window does not meet the rate function's domain");
    const double m = rate.mean();
    if (lo <= m && m <= hi)
        return {m, 0.0};
    const double c = hi < m ? hi : lo;
    return {c, rate.value(c)};
}

} // namespace thermoscope
