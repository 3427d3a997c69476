#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "thermoscope/thermoscope.hpp"

namespace ts = thermoscope;
using ts::Json;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<int> budget;
};

struct Context {
    ts::ExperimentConfig cfg;
    std::string out;
    ts::Enumeration en;
    std::optional<std::uint64_t> seed;
    std::string hash;

    std::string path(const std::string& name) const { return (std::filesystem::path(out) / name).string(); }

    Json report_header() const
    {
        return {{"config_hash", hash}, {"budget", en.budget}};
    }
};

int resolve_budget(const Options& o, const ts::ExperimentConfig& cfg)
{
    int b = ts::kDefaultBudget;
    if (o.budget) {
        b = *o.budget;
    } else if (cfg.budget) {
        b = *cfg.budget;
    } else if (const char* env = std::getenv("THERMOSCOPE_BUDGET")) {
        try {
            b = std::stoi(env);
        } catch (const std::exception&) {
            throw ts::ValidationError("THERMOSCOPE_BUDGET is not an integer");
        }
    }
    if (b < 1 || b > ts::kHardBudgetCap)
        throw ts::ValidationError("budget must be in [1, " + std::to_string(ts::kHardBudgetCap) + "]");
    return b;
}

Context make_context(const Options& o)
{
    if (o.config.empty())
        throw ts::ValidationError("--config is required");
    Context c{ts::load_config(o.config), o.out, {}, {}, {}};
    c.en.budget = resolve_budget(o, c.cfg);
    c.en.exec = ts::Executor(o.threads);
    c.seed = o.seed ? o.seed : c.cfg.seed;
    c.hash = ts::config_hash(c.cfg.source);
    std::filesystem::create_directories(c.out);
    return c;
}

// Locally constant form, through g_N when an approximation level is configured.
ts::PotentialSequence locally_constant(const Context& c, const ts::PotentialSequence& p, const char* name)
{
    if (ts::to_additive(c.cfg.shift, p))
        return p;
    if (c.cfg.approximation_level > 0)
        return ts::approximation_at(c.cfg.shift, p, c.cfg.approximation_level);
    throw ts::DomainError(std::string(name) + " is not locally constant; set approximation_level");
}

ts::PotentialSequence phi_of(const Context& c)
{
    if (!c.cfg.phi)
        return ts::PotentialSequence::constant(c.cfg.shift, 0.0);
    return *c.cfg.phi;
}

ts::PotentialSequence psi_of(const Context& c)
{
    if (!c.cfg.psi)
        throw ts::ValidationError("config.psi: missing");
    return *c.cfg.psi;
}

ts::RateFunction build_rate(const Context& c, const ts::PotentialSequence& phi, const ts::PotentialSequence& psi)
{
    const auto& g = c.cfg.grids;
    auto curve = ts::free_energy_curve(c.cfg.shift, phi, psi, ts::uniform_grid(g.t_min, g.t_max, g.t_step), c.en.exec);
    const auto [lo, hi] = std::minmax_element(curve.Eprime.begin(), curve.Eprime.end());
    auto s = ts::interior_grid({*lo, *hi}, g.s_points);
    return ts::legendre_transform(std::move(curve), s);
}

Json interval_json(const ts::SpectrumInterval& i)
{
    return Json::array({ts::json_number(i.lo), ts::json_number(i.hi)});
}

std::string cell(const std::optional<double>& x)
{
    return x ? ts::format_number(*x) : std::string();
}

int cmd_pressure(const Context& c)
{
    const auto phi = phi_of(c);
    const auto additive = ts::to_additive(c.cfg.shift, phi);
    double C = 0.0;
    std::string C_source = "additive";
    if (!additive) {
        if (c.cfg.bracket_C) {
            C = *c.cfg.bracket_C;
            C_source = "config";
        } else {
            const int n_max = std::min(12, std::min(c.en.budget, ts::kHardBudgetCap) - phi.extension());
            C = ts::almost_additivity_defect(c.cfg.shift, phi, n_max, c.en);
            C_source = "measured-lower-estimate";
        }
    }
    ts::CsvWriter csv({"n", "lower", "upper", "exact"});
    Json rows = Json::array();
    std::optional<double> exact;
    for (int n : c.cfg.bracket_n) {
        const auto b = ts::pressure_bracket(c.cfg.shift, phi, n, C, c.en);
        exact = b.exact;
        csv.row(std::vector<std::string>{std::to_string(n), cell(b.lower), ts::format_number(b.upper), cell(b.exact)});
        Json r = {{"n", n}, {"upper", ts::json_number(b.upper)}, {"method", b.method}};
        r["lower"] = b.lower ? ts::json_number(*b.lower) : Json(nullptr);
        rows.push_back(r);
    }
    ts::write_file(c.path("pressure.csv"), csv.str());
    Json rep = c.report_header();
    rep["horizons"] = {{"bracket_n", c.cfg.bracket_n}};
    rep["exact"] = exact ? ts::json_number(*exact) : Json(nullptr);
    rep["C_used"] = C;
    rep["C_source"] = C_source;
    rep["brackets"] = rows;
    ts::write_file(c.path("pressure.json"), rep.dump(2) + "\n");
    return 0;
}

int cmd_free_energy(const Context& c)
{
    const auto phi = locally_constant(c, phi_of(c), "phi");
    const auto psi = locally_constant(c, psi_of(c), "psi");
    const auto& g = c.cfg.grids;
    auto curve = ts::free_energy_curve(c.cfg.shift, phi, psi, ts::uniform_grid(g.t_min, g.t_max, g.t_step), c.en.exec);
    ts::CsvWriter csv({"t", "E", "Eprime"});
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        csv.row(std::vector<double>{curve.t[i], curve.E[i], curve.Eprime[i]});
    ts::write_file(c.path("free_energy.csv"), csv.str());
    return 0;
}

int cmd_rate(const Context& c)
{
    const auto phi = locally_constant(c, phi_of(c), "phi");
    const auto psi = locally_constant(c, psi_of(c), "psi");
    const auto rate = build_rate(c, phi, psi);
    ts::CsvWriter csv({"s", "I"});
    for (std::size_t i = 0; i < rate.s_grid().size(); ++i)
        csv.row(std::vector<double>{rate.s_grid()[i], rate.I()[i]});
    ts::write_file(c.path("rate.csv"), csv.str());

    Json rep = c.report_header();
    const auto& g = c.cfg.grids;
    rep["horizons"] = {{"t_min", g.t_min}, {"t_max", g.t_max}, {"t_step", g.t_step}, {"s_points", g.s_points}};
    rep["mean"] = rate.mean();
    rep["domain"] = interval_json(rate.domain());
    rep["grid_modulus"] = rate.grid_modulus();
    rep["rejected_s"] = rate.rejected().size();
    const auto a_i = ts::variational_property_residual(rate.curve(), rate);
    rep["degenerate"] = a_i.degenerate;
    if (a_i.degenerate) {
        rep["variational_property_residual"] = nullptr;
        rep["variational_formula_residual"] = nullptr;
        rep["I_at_mean"] = nullptr;
    } else {
        rep["variational_property_residual"] = a_i.residual;
        rep["variational_formula_residual"] =
            ts::variational_formula_check(c.cfg.shift, phi, psi, rate, c.cfg.probe_t);
        rep["probe_t"] = c.cfg.probe_t;
        rep["I_at_mean"] = ts::json_number(rate.value(rate.mean()));
    }
    const auto w = ts::strict_convexity_window(rate);
    rep["convexity_window"] = w.window ? interval_json(*w.window) : Json(nullptr);
    rep["convexity_degenerate"] = w.degenerate;
    ts::write_file(c.path("rate_report.json"), rep.dump(2) + "\n");
    return 0;
}

Json window_json(const ts::DeviationWindow& w)
{
    Json parts = Json::array();
    for (const auto& p : w.parts)
        parts.push_back(Json::array({ts::json_number(p.lo), ts::json_number(p.hi)}));
    return {{"parts", parts}, {"delta", w.delta}};
}

int cmd_ldp(const Context& c)
{
    const auto phi = locally_constant(c, phi_of(c), "phi");
    const auto psi = locally_constant(c, psi_of(c), "psi");
    if (c.cfg.windows.empty())
        throw ts::ValidationError("config.windows: at least one window is required");
    if (c.cfg.monte_carlo && !c.seed)
        throw ts::ValidationError("config.seed: Monte Carlo needs a seed (config or --seed)");
    const auto rate = build_rate(c, phi, psi);
    const double P_top = ts::pressure_exact(c.cfg.shift, phi);
    const auto floating = ts::equilibrium_measure(c.cfg.shift, phi);
    const auto exact = ts::recognize_exact(floating);
    const ts::MarkovMeasure& mu = exact ? *exact : floating;

    Json rep = c.report_header();
    rep["horizons"] = {{"n_list", c.cfg.grids.n_list}};
    rep["P_top"] = P_top;
    rep["mean"] = rate.mean();
    rep["measure_exact"] = exact.has_value();
    Json windows = Json::array();
    for (std::size_t i = 0; i < c.cfg.windows.size(); ++i) {
        const auto W = c.cfg.windows[i].resolve(rate.mean());
        const auto series = ts::exact_deviation_series(c.cfg.shift, mu, psi, W, c.cfg.grids.n_list, c.en);
        ts::CsvWriter csv({"n", "prob_log", "slope"});
        for (std::size_t j = 0; j < series.n.size(); ++j)
            csv.row(std::vector<std::string>{std::to_string(series.n[j]), ts::format_number(series.log_prob[j]),
                                             ts::format_number(series.slope[j])});
        ts::write_file(c.path(i == 0 ? "deviations.csv" : "deviations_w" + std::to_string(i) + ".csv"), csv.str());

        const auto check = ts::ldp_bound_check(series, rate, W);
        Json w = window_json(W);
        w["method"] = series.method;
        w["L_estimate"] = ts::json_number(series.L_estimate);
        w["irregular_pressure_bound"] = ts::json_number(ts::irregular_pressure_bound(P_top, series));
        w["vacuous"] = check.vacuous;
        w["ldp"] = {{"n", check.n},
                    {"slope", ts::json_number(check.slope)},
                    {"inf_I_closed", ts::json_number(check.inf_closed)},
                    {"inf_I_interior", ts::json_number(check.inf_interior)},
                    {"tolerance", check.tolerance},
                    {"upper_holds", check.upper_holds},
                    {"lower_holds", check.lower_holds}};
        if (c.cfg.monte_carlo) {
            const auto mc = ts::monte_carlo_deviation(mu, psi, W, c.cfg.monte_carlo->n, c.cfg.monte_carlo->samples,
                                                      *c.seed, c.en.exec);
            w["monte_carlo"] = {{"n", mc.n},         {"samples", mc.samples}, {"hits", mc.hits}, {"seed", mc.seed},
                                {"frequency", mc.frequency}, {"wilson_lo", mc.lo}, {"wilson_hi", mc.hi}};
        }
        windows.push_back(w);
    }
    rep["windows"] = windows;
    ts::write_file(c.path("ldp_report.json"), rep.dump(2) + "\n");
    return 0;
}

int cmd_spectrum(const Context& c)
{
    const auto zero = ts::PotentialSequence::constant(c.cfg.shift, 0.0);
    const auto psi = locally_constant(c, psi_of(c), "psi");
    const auto rate = build_rate(c, zero, psi);
    const double h_top = ts::pressure_exact(c.cfg.shift, zero);
    const auto spec = ts::entropy_spectrum(rate, h_top, c.cfg.grids.c_grid);
    ts::CsvWriter csv({"c", "h"});
    Json outside = Json::array();
    for (const auto& p : spec.points) {
        csv.row(std::vector<std::string>{ts::format_number(p.c), cell(p.h)});
        if (!p.left_in_domain || !p.right_in_domain)
            outside.push_back(p.c);
    }
    ts::write_file(c.path("spectrum.csv"), csv.str());
    Json rep = c.report_header();
    rep["h_top"] = h_top;
    rep["mean"] = rate.mean();
    rep["decreasing"] = spec.decreasing;
    rep["concave"] = spec.concave;
    rep["branch_outside_domain"] = outside;
    ts::write_file(c.path("spectrum_report.json"), rep.dump(2) + "\n");
    return 0;
}

int cmd_cocycle(const Context& c)
{
    if (!c.cfg.cocycle)
        throw ts::ValidationError("config.cocycle: missing");
    const auto& run = *c.cfg.cocycle;
    Json rep = c.report_header();
    rep["horizons"] = {{"n_list", run.n_list}, {"pair_length", run.pair_length}, {"lyapunov_n", run.lyapunov_n}};
    if (run.spec.dimension() <= 4) {
        const auto ir = ts::irreducibility_check(run.spec);
        Json witness = Json::array();
        for (const auto& v : ir.witness) {
            Json vec = Json::array();
            for (Eigen::Index i = 0; i < v.size(); ++i)
                vec.push_back(Json::array({v(i).real(), v(i).imag()}));
            witness.push_back(vec);
        }
        rep["irreducibility"] = {{"verdict", ts::to_string(ir.verdict)},
                                 {"algebra_dimension", ir.algebra_dimension},
                                 {"witness", witness}};
    } else {
        rep["irreducibility"] = nullptr;
    }
    ts::CsvWriter csv({"q", "n", "upper", "lower", "flag"});
    Json pressures = Json::array();
    for (double q : run.q_list) {
        const auto p = ts::cocycle_pressure(run.spec, q, run.n_list, run.pair_length, c.en);
        for (const auto& r : p.rows)
            csv.row(std::vector<std::string>{ts::format_number(q), std::to_string(r.n), ts::format_number(r.upper),
                                             cell(r.lower), r.flag});
        pressures.push_back({{"q", q}, {"c_hat", p.reverse.c_hat}});
    }
    ts::write_file(c.path("cocycle.csv"), csv.str());
    rep["pressure"] = pressures;
    const auto mme = ts::equilibrium_measure(run.spec.base(), ts::PotentialSequence::constant(run.spec.base(), 0.0));
    const ts::MarkovMeasure& mu = run.measure ? *run.measure : mme;
    const auto ly = ts::lyapunov_exponent(run.spec, mu, run.lyapunov_n, run.pair_length, c.en);
    rep["lyapunov"] = {{"n", ly.n},
                       {"value", ts::json_number(ly.value)},
                       {"upper", ts::json_number(ly.upper)},
                       {"lower", ly.lower ? ts::json_number(*ly.lower) : Json(nullptr)},
                       {"c_hat", ly.reverse.c_hat},
                       {"heuristic", ly.heuristic}};
    ts::write_file(c.path("cocycle_report.json"), rep.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"thermoscope: pressure, rate functions and deviations for shifts of finite type"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    int budget = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment config (JSON)")->required();
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--seed", seed, "Monte Carlo seed (overrides the config)");
        sub->add_option("--budget", budget, "maximum enumeration length");
    };
    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Context&);
    };
    const Command commands[] = {
        {"pressure", "exact pressure and bracket series", cmd_pressure},
        {"free-energy", "free energy curve E(t)", cmd_free_energy},
        {"rate", "rate function and its property report", cmd_rate},
        {"ldp", "deviation probabilities and bound checks", cmd_ldp},
        {"spectrum", "entropy spectrum h(c)", cmd_spectrum},
        {"cocycle", "matrix cocycle pressure and Lyapunov brackets", cmd_cocycle},
    };
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        add_common(sub);
        subs.emplace_back(sub, &cmd);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        for (auto [sub, cmd] : subs) {
            if (!sub->parsed())
                continue;
            if (sub->count("--seed"))
                opt.seed = seed;
            if (sub->count("--budget"))
                opt.budget = budget;
            return cmd->run(make_context(opt));
        }
    } catch (const ts::BudgetExceeded& e) {
        std::cerr << "budget refusal: " << e.what() << "\n";
        return 3;
    } catch (const ts::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const ts::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
