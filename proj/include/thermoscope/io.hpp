#pragma once

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "thermoscope/cocycle.hpp"
#include "thermoscope/deviation.hpp"
#include "thermoscope/error.hpp"
#include "thermoscope/markov.hpp"
#include "thermoscope/potential.hpp"
#include "thermoscope/rational.hpp"
#include "thermoscope/symbolic.hpp"

namespace thermoscope {

using Json = nlohmann::json;

/// Shortest round-trip decimal, '.' decimal point, locale independent.
inline std::string format_number(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    if (x == 0.0)
        x = 0.0; // no "-0"
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Rows of numbers with a header, LF line endings.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void row(const std::vector<std::string>& cells)
    {
        if (cells.size() != header_.size())
            throw Error("csv row has the wrong number of cells");
        rows_.push_back(cells);
    }

    void row(const std::vector<double>& values)
    {
        std::vector<std::string> cells;
        for (double v : values)
            cells.push_back(format_number(v));
        row(cells);
    }

    std::string str() const
    {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i)
                    out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_)
            line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error("cannot write '" + path + "'");
    f << content;
}

/// FNV-1a 64 of the canonical (key-sorted, compact) JSON text.
inline std::string config_hash(const Json& j)
{
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// JSON number, or a string for non-finite values.
inline Json json_number(double x)
{
    if (x == 0.0)
        return 0.0;
    if (std::isfinite(x))
        return x;
    return format_number(x);
}

namespace json_detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what)
{
    throw ValidationError(path + ": " + what);
}

inline const Json& field(const Json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object())
        fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end())
        fail(path + "." + key, "missing");
    return *it;
}

inline const Json* optional_field(const Json& j, const std::string& key, const std::string& path)
{
    if (!j.is_object())
        fail(path, "expected an object");
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline Rational rational(const Json& j, const std::string& path)
{
    try {
        if (j.is_number_integer())
            return Rational(j.get<long long>());
        if (j.is_number())
            return decimal_rational(j.get<double>());
        if (j.is_string())
            return parse_rational(j.get<std::string>());
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
    fail(path, "expected a number or a rational string");
}

inline double number(const Json& j, const std::string& path)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string())
        return to_double(rational(j, path));
    fail(path, "expected a number");
}

inline long long integer(const Json& j, const std::string& path)
{
    if (!j.is_number_integer())
        fail(path, "expected an integer");
    return j.get<long long>();
}

inline std::vector<int> int_list(const Json& j, const std::string& path)
{
    if (!j.is_array())
        fail(path, "expected an array");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(static_cast<int>(integer(j[i], path + "[" + std::to_string(i) + "]")));
    return out;
}

inline std::vector<double> number_list(const Json& j, const std::string& path)
{
    if (!j.is_array())
        fail(path, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

} // namespace json_detail

/// {"alphabet": l, "transitions": [[...]]}, or the shorthands
/// "golden_mean" and "full:l".
inline ShiftSpace shift_from_json(const Json& j, const std::string& path = "shift")
{
    using namespace json_detail;
    try {
        if (j.is_string()) {
            const auto s = j.get<std::string>();
            if (s == "golden_mean")
                return ShiftSpace::golden_mean();
            if (s.rfind("full:", 0) == 0)
                return ShiftSpace::full(std::stoi(s.substr(5)));
            fail(path, "unknown shift shorthand '" + s + "'");
        }
        const int l = static_cast<int>(integer(field(j, "alphabet", path), path + ".alphabet"));
        if (const Json* t = optional_field(j, "transitions", path)) {
            if (!t->is_array())
                fail(path + ".transitions", "expected a matrix");
            std::vector<std::vector<int>> rows;
            for (std::size_t i = 0; i < t->size(); ++i)
                rows.push_back(int_list((*t)[i], path + ".transitions[" + std::to_string(i) + "]"));
            return ShiftSpace(l, rows);
        }
        return ShiftSpace::full(l);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0)
            throw;
        fail(path, msg);
    } catch (const std::logic_error&) {
        fail(path, "malformed shift");
    }
}

inline Json shift_to_json(const ShiftSpace& s)
{
    return {{"alphabet", s.alphabet_size()}, {"transitions", s.transitions()}};
}

inline Matrix matrix_from_json(const Json& j, const std::string& path)
{
    using namespace json_detail;
    if (!j.is_array() || j.empty())
        fail(path, "expected a non-empty square matrix");
    const auto d = static_cast<Eigen::Index>(j.size());
    if (d > kMaxCocycleDimension)
        fail(path, "matrix dimension above 8");
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const auto row = number_list(j[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
        if (static_cast<Eigen::Index>(row.size()) != d)
            fail(path + "[" + std::to_string(i) + "]", "row length differs from the matrix size");
        for (Eigen::Index c = 0; c < d; ++c)
            m(i, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

inline std::vector<Matrix> matrices_from_json(const Json& j, const std::string& path)
{
    if (!j.is_array() || j.empty())
        json_detail::fail(path, "expected a non-empty list of matrices");
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json r = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            r.push_back(m(i, c));
        rows.push_back(r);
    }
    return rows;
}

/// {"order": k, "states": ["00", ...], "Q": [[...]], "pi": [...]}. Rational
/// strings or integers everywhere in Q make the measure exact; pi is then
/// re-derived and any given pi must agree with it.
inline MarkovMeasure measure_from_json(const ShiftSpace& space, const Json& j, const std::string& path = "measure")
{
    using namespace json_detail;
    const int order = static_cast<int>(integer(field(j, "order", path), path + ".order"));
    if (order < 1)
        fail(path + ".order", "must be >= 1");
    BlockGraph graph(space, order);
    if (const Json* states = optional_field(j, "states", path)) {
        if (!states->is_array() || states->size() != graph.size())
            fail(path + ".states", "must list the " + std::to_string(graph.size()) + " admissible blocks in order");
        for (std::size_t i = 0; i < graph.size(); ++i)
            if (!(*states)[i].is_string() || (*states)[i].get<std::string>() != symbols_to_string(graph.state(i)))
                fail(path + ".states[" + std::to_string(i) + "]",
                     "expected '" + symbols_to_string(graph.state(i)) + "'");
    }
    const Json& q = field(j, "Q", path);
    if (!q.is_array() || q.size() != graph.size())
        fail(path + ".Q", "expected a " + std::to_string(graph.size()) + "-row matrix");
    bool exact = true;
    std::vector<std::vector<Rational>> Qr(graph.size());
    Eigen::MatrixXd Qd(graph.size(), graph.size());
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const std::string rp = path + ".Q[" + std::to_string(i) + "]";
        if (!q[i].is_array() || q[i].size() != graph.size())
            fail(rp, "row has the wrong length");
        for (std::size_t c = 0; c < graph.size(); ++c) {
            const Json& x = q[i][c];
            const std::string cp = rp + "[" + std::to_string(c) + "]";
            if (!(x.is_string() || x.is_number_integer()))
                exact = false;
            Qr[i].push_back(rational(x, cp));
            Qd(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number(x, cp);
        }
    }
    try {
        std::optional<MarkovMeasure> m;
        if (exact)
            m.emplace(MarkovMeasure::from_exact_transitions(space, order, Qr));
        else
            m.emplace(MarkovMeasure::from_transitions(space, order, Qd));
        if (const Json* pi = optional_field(j, "pi", path)) {
            const auto given = number_list(*pi, path + ".pi");
            if (given.size() != graph.size())
                fail(path + ".pi", "wrong length");
            for (std::size_t i = 0; i < given.size(); ++i)
                if (std::fabs(given[i] - m->pi()(static_cast<Eigen::Index>(i))) > 1e-9)
                    fail(path + ".pi[" + std::to_string(i) + "]", "is not stationary for Q");
        }
        return std::move(*m);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0)
            throw;
        fail(path, msg);
    }
}

inline Json measure_to_json(const MarkovMeasure& m)
{
    Json states = Json::array();
    Json Q = Json::array();
    Json pi = Json::array();
    for (std::size_t i = 0; i < m.states(); ++i) {
        states.push_back(symbols_to_string(m.graph().state(i)));
        Json row = Json::array();
        for (std::size_t c = 0; c < m.states(); ++c) {
            if (m.exact())
                row.push_back(m.exact()->Q[i][c].str());
            else
                row.push_back(m.Q()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
        }
        Q.push_back(row);
        pi.push_back(m.pi()(static_cast<Eigen::Index>(i)));
    }
    return {{"order", m.order()}, {"states", states}, {"Q", Q}, {"pi", pi}};
}

/// Potential specs: {"kind": "AdditiveLocallyConstant", "range": k, "table": {"011": -0.3, ...}},
/// {"kind": "CocycleNorm", "matrices": [...], "q": q}, {"kind": "SingularValue", "matrices": [...], "index": j},
/// {"kind": "SMB", "measure": {...}}, {"kind": "AffineCombination", "base": {...}, "other": {...}, "t": t}.
inline PotentialSequence potential_from_json(const ShiftSpace& space, const Json& j, const std::string& path)
{
    using namespace json_detail;
    const Json& kind_j = field(j, "kind", path);
    if (!kind_j.is_string())
        fail(path + ".kind", "expected a string");
    const auto kind = kind_j.get<std::string>();
    try {
        if (kind == "AdditiveLocallyConstant") {
            const int range = static_cast<int>(integer(field(j, "range", path), path + ".range"));
            const Json& t = field(j, "table", path);
            if (!t.is_object())
                fail(path + ".table", "expected an object keyed by words");
            std::map<std::string, Rational> table;
            for (auto it = t.begin(); it != t.end(); ++it)
                table[it.key()] = rational(it.value(), path + ".table." + it.key());
            return PotentialSequence::additive(space, range, table);
        }
        if (kind == "CocycleNorm") {
            auto ms = matrices_from_json(field(j, "matrices", path), path + ".matrices");
            if (static_cast<int>(ms.size()) != space.alphabet_size())
                fail(path + ".matrices", "need one matrix per symbol");
            return PotentialSequence::cocycle_norm(std::move(ms), number(field(j, "q", path), path + ".q"));
        }
        if (kind == "SingularValue") {
            auto ms = matrices_from_json(field(j, "matrices", path), path + ".matrices");
            if (static_cast<int>(ms.size()) != space.alphabet_size())
                fail(path + ".matrices", "need one matrix per symbol");
            return PotentialSequence::singular_value(std::move(ms),
                                                     static_cast<int>(integer(field(j, "index", path), path + ".index")));
        }
        if (kind == "SMB")
            return PotentialSequence::smb(measure_from_json(space, field(j, "measure", path), path + ".measure"));
        if (kind == "AffineCombination")
            return PotentialSequence::affine(potential_from_json(space, field(j, "base", path), path + ".base"),
                                             potential_from_json(space, field(j, "other", path), path + ".other"),
                                             number(field(j, "t", path), path + ".t"));
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0)
            throw;
        fail(path, msg);
    }
    fail(path + ".kind", "unknown kind '" + kind + "'");
}

/// {"dimension": d, "matrices": [...], "shift": ...}; the shift defaults to `fallback`.
inline CocycleSpec cocycle_from_json(const Json& j, const ShiftSpace& fallback, const std::string& path = "cocycle")
{
    using namespace json_detail;
    ShiftSpace base = fallback;
    if (const Json* s = optional_field(j, "shift", path))
        base = shift_from_json(*s, path + ".shift");
    auto ms = matrices_from_json(field(j, "matrices", path), path + ".matrices");
    if (const Json* d = optional_field(j, "dimension", path))
        if (integer(*d, path + ".dimension") != ms.front().rows())
            fail(path + ".dimension", "does not match the matrices");
    try {
        return CocycleSpec(std::move(base), std::move(ms));
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
}

inline DeviationWindow window_from_json(const Json& j, const std::string& path)
{
    using namespace json_detail;
    double delta = 0.0;
    if (const Json* d = optional_field(j, "delta", path))
        delta = number(*d, path + ".delta");
    try {
        if (const Json* c = optional_field(j, "two_sided", path)) {
            // Centre filled in later from the mean when absent.
            double center = std::numeric_limits<double>::quiet_NaN();
            if (const Json* m = optional_field(j, "center", path))
                center = number(*m, path + ".center");
            DeviationWindow w = DeviationWindow::two_sided(0.0, number(*c, path + ".two_sided"), delta);
            if (!std::isnan(center))
                w = DeviationWindow::two_sided(center, number(*c, path + ".two_sided"), delta);
            return w;
        }
        return DeviationWindow::closed(number(field(j, "lo", path), path + ".lo"),
                                       number(field(j, "hi", path), path + ".hi"), delta);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0)
            throw;
        fail(path, msg);
    }
}

/// A deviation window as written in the config, with the centre of
/// two-sided windows resolved against the mean when not given.
struct WindowSpec {
    DeviationWindow window;
    bool two_sided = false;
    bool centered_on_mean = false;
    double c = 0.0;

    DeviationWindow resolve(double mean) const
    {
        if (!centered_on_mean)
            return window;
        return DeviationWindow::two_sided(mean, c, window.delta);
    }
};

struct Grids {
    double t_min = -20.0;
    double t_max = 20.0;
    double t_step = 0.01;
    int s_points = 201;
    std::vector<int> n_list{100, 200, 500, 1000, 2000};
    std::vector<double> c_grid;
};

struct MonteCarloSpec {
    int n = 50;
    std::uint64_t samples = 100000;
};

struct CocycleRun {
    CocycleSpec spec;
    std::vector<double> q_list{1.0};
    std::vector<int> n_list{4, 8, 12};
    int pair_length = 6;
    int lyapunov_n = 12;
    std::optional<MarkovMeasure> measure;
};

struct ExperimentConfig {
    Json source;
    ShiftSpace shift = ShiftSpace::full(2);
    std::optional<PotentialSequence> phi;
    std::optional<PotentialSequence> psi;
    Grids grids;
    std::vector<WindowSpec> windows;
    std::optional<int> budget;
    std::optional<std::uint64_t> seed;
    std::optional<MonteCarloSpec> monte_carlo;
    std::optional<CocycleRun> cocycle;
    std::vector<int> bracket_n{8, 16, 20};
    std::optional<double> bracket_C;
    std::vector<double> probe_t{-1.0, 0.0, 1.0, 2.0};
    int approximation_level = 0; // > 0 replaces non-additive phi/psi by g_N
};

inline ExperimentConfig config_from_json(const Json& j)
{
    using namespace json_detail;
    const std::string root = "config";
    if (!j.is_object())
        fail(root, "expected an object");
    ExperimentConfig cfg;
    cfg.source = j;
    cfg.shift = shift_from_json(field(j, "shift", root), root + ".shift");
    if (const Json* p = optional_field(j, "phi", root))
        cfg.phi = potential_from_json(cfg.shift, *p, root + ".phi");
    if (const Json* p = optional_field(j, "psi", root))
        cfg.psi = potential_from_json(cfg.shift, *p, root + ".psi");
    if (const Json* g = optional_field(j, "grids", root)) {
        const std::string gp = root + ".grids";
        if (const Json* x = optional_field(*g, "t_min", gp))
            cfg.grids.t_min = number(*x, gp + ".t_min");
        if (const Json* x = optional_field(*g, "t_max", gp))
            cfg.grids.t_max = number(*x, gp + ".t_max");
        if (const Json* x = optional_field(*g, "t_step", gp))
            cfg.grids.t_step = number(*x, gp + ".t_step");
        if (const Json* x = optional_field(*g, "s_points", gp))
            cfg.grids.s_points = static_cast<int>(integer(*x, gp + ".s_points"));
        if (const Json* x = optional_field(*g, "n_list", gp))
            cfg.grids.n_list = int_list(*x, gp + ".n_list");
        if (const Json* x = optional_field(*g, "c_grid", gp))
            cfg.grids.c_grid = number_list(*x, gp + ".c_grid");
        if (!(cfg.grids.t_min < cfg.grids.t_max))
            fail(gp, "t_min must be below t_max");
        if (!(cfg.grids.t_step > 0))
            fail(gp + ".t_step", "must be positive");
        if (cfg.grids.s_points < 1)
            fail(gp + ".s_points", "must be >= 1");
        for (std::size_t i = 1; i < cfg.grids.n_list.size(); ++i)
            if (cfg.grids.n_list[i] <= cfg.grids.n_list[i - 1])
                fail(gp + ".n_list", "must be strictly increasing");
        for (std::size_t i = 1; i < cfg.grids.c_grid.size(); ++i)
            if (cfg.grids.c_grid[i] <= cfg.grids.c_grid[i - 1])
                fail(gp + ".c_grid", "must be strictly increasing");
    }
    if (cfg.grids.c_grid.empty())
        for (int i = 1; i <= 30; ++i)
            cfg.grids.c_grid.push_back(0.01 * i);
    if (const Json* ws = optional_field(j, "windows", root)) {
        if (!ws->is_array())
            fail(root + ".windows", "expected an array");
        for (std::size_t i = 0; i < ws->size(); ++i) {
            const std::string wp = root + ".windows[" + std::to_string(i) + "]";
            WindowSpec spec{window_from_json((*ws)[i], wp)};
            if (const Json* c = optional_field((*ws)[i], "two_sided", wp)) {
                spec.two_sided = true;
                spec.c = number(*c, wp + ".two_sided");
                spec.centered_on_mean = optional_field((*ws)[i], "center", wp) == nullptr;
            }
            cfg.windows.push_back(spec);
        }
    }
    if (const Json* b = optional_field(j, "budget", root)) {
        const auto v = integer(*b, root + ".budget");
        if (v < 1 || v > kHardBudgetCap)
            fail(root + ".budget", "must be in [1, " + std::to_string(kHardBudgetCap) + "]");
        cfg.budget = static_cast<int>(v);
    }
    if (const Json* s = optional_field(j, "seed", root)) {
        if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long long>() >= 0))
            fail(root + ".seed", "expected a non-negative integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    if (const Json* mc = optional_field(j, "monte_carlo", root)) {
        const std::string mp = root + ".monte_carlo";
        MonteCarloSpec spec;
        if (const Json* x = optional_field(*mc, "n", mp))
            spec.n = static_cast<int>(integer(*x, mp + ".n"));
        if (const Json* x = optional_field(*mc, "samples", mp)) {
            const auto v = integer(*x, mp + ".samples");
            if (v < 1)
                fail(mp + ".samples", "must be positive");
            spec.samples = static_cast<std::uint64_t>(v);
        }
        if (spec.n < 1)
            fail(mp + ".n", "must be >= 1");
        cfg.monte_carlo = spec;
    }
    if (const Json* c = optional_field(j, "cocycle", root)) {
        const std::string cp = root + ".cocycle";
        CocycleRun run{cocycle_from_json(*c, cfg.shift, cp)};
        if (const Json* x = optional_field(*c, "q_list", cp))
            run.q_list = number_list(*x, cp + ".q_list");
        if (const Json* x = optional_field(*c, "n_list", cp))
            run.n_list = int_list(*x, cp + ".n_list");
        if (const Json* x = optional_field(*c, "pair_length", cp))
            run.pair_length = static_cast<int>(integer(*x, cp + ".pair_length"));
        if (const Json* x = optional_field(*c, "lyapunov_n", cp))
            run.lyapunov_n = static_cast<int>(integer(*x, cp + ".lyapunov_n"));
        if (const Json* x = optional_field(*c, "measure", cp))
            run.measure = measure_from_json(run.spec.base(), *x, cp + ".measure");
        cfg.cocycle = std::move(run);
    }
    if (const Json* b = optional_field(j, "bracket", root)) {
        const std::string bp = root + ".bracket";
        if (const Json* x = optional_field(*b, "n_list", bp))
            cfg.bracket_n = int_list(*x, bp + ".n_list");
        if (const Json* x = optional_field(*b, "C", bp)) {
            cfg.bracket_C = number(*x, bp + ".C");
            if (*cfg.bracket_C < 0)
                fail(bp + ".C", "must be >= 0");
        }
    }
    if (const Json* p = optional_field(j, "probe_t", root))
        cfg.probe_t = number_list(*p, root + ".probe_t");
    if (const Json* a = optional_field(j, "approximation_level", root)) {
        cfg.approximation_level = static_cast<int>(integer(*a, root + ".approximation_level"));
        if (cfg.approximation_level < 0)
            fail(root + ".approximation_level", "must be >= 0");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ValidationError("cannot read config '" + path + "'");
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ValidationError("config: malformed JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

} // namespace thermoscope
