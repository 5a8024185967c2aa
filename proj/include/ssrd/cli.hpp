#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "calibration.hpp"
#include "cds_pricer.hpp"
#include "cir.hpp"
#include "expansion.hpp"
#include "market_data.hpp"
#include "monte_carlo.hpp"
#include "report.hpp"

namespace ssrd::cli {

enum ExitCode { ok = 0, failure = 1, input_error = 2, not_converged = 3 };

struct Options {
    std::string command;
    std::string curve, quotes, config, out;
    std::optional<int> order;
    std::string weights = "invtenor";
    std::string correlated = "yes";
    std::uint64_t seed = 20240408;
    bool no_timings = false;
};

/// Everything a config file can set, after defaults.
struct Settings {
    PricingConfig pricing;
    std::map<std::string, double> model;  // r0, alpha1, ..., rho, sigma_hat1
    std::vector<double> tenors{1, 2, 3, 4, 5};
    std::optional<double> t_max;
    std::string currency = "USD";
    BootstrapMode bootstrap_mode = BootstrapMode::standard;
    long mc_paths = 200000;
    double mc_step = 0.01;
    bool mc_antithetic = true;
    int rate_starts = 5;

    bool has(const std::string& k) const { return model.count(k) > 0; }
    double get(const std::string& k) const {
        auto it = model.find(k);
        if (it == model.end()) throw InputError("config is missing '" + k + "'");
        return it->second;
    }
};

inline const std::vector<std::string>& model_keys() {
    static const std::vector<std::string> keys{"r0",     "alpha1", "beta1",   "sigma1", "sigma_hat1",
                                               "alpha2", "beta2",  "sigma2", "lambda0", "rho"};
    return keys;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& f : detail::split(s, ',')) out.push_back(detail::parse_double(f, key));
    return out;
}

inline Settings load_settings(const Options& o) {
    Settings s;
    if (!o.config.empty()) {
        auto kv = read_key_values(o.config);
        apply_config(s.pricing, kv);
        for (const auto& k : model_keys()) {
            auto it = kv.find(k);
            if (it != kv.end()) {
                s.model[k] = detail::parse_double(it->second, k);
                kv.erase(it);
            }
        }
        auto take = [&](const char* key) -> std::optional<std::string> {
            auto it = kv.find(key);
            if (it == kv.end()) return std::nullopt;
            auto v = it->second;
            kv.erase(it);
            return v;
        };
        if (auto v = take("tenors")) s.tenors = parse_list(*v, "tenors");
        if (auto v = take("t_max")) s.t_max = detail::parse_double(*v, "t_max");
        if (auto v = take("currency")) s.currency = *v;
        if (auto v = take("bootstrap_mode")) {
            if (*v == "standard") s.bootstrap_mode = BootstrapMode::standard;
            else if (*v == "literal") s.bootstrap_mode = BootstrapMode::literal;
            else throw InputError("unknown bootstrap_mode '" + *v + "'");
        }
        if (auto v = take("mc_paths")) s.mc_paths = detail::parse_int(*v, "mc_paths");
        if (auto v = take("mc_step")) s.mc_step = detail::parse_double(*v, "mc_step");
        if (auto v = take("mc_antithetic")) s.mc_antithetic = (*v == "yes" || *v == "true" || *v == "1");
        if (auto v = take("rate_starts")) s.rate_starts = detail::parse_int(*v, "rate_starts");
        if (!kv.empty()) throw InputError("unknown config key '" + kv.begin()->first + "'");
    }
    if (const char* env = std::getenv("SSRD_QUAD_NODES")) s.pricing.quad_nodes = detail::parse_int(env, "SSRD_QUAD_NODES");
    if (o.order) s.pricing.order = *o.order;
    s.pricing.validate();
    return s;
}

inline std::vector<std::pair<std::string, std::string>> echo(const Settings& s, const Options& o) {
    auto cfg = echo_config(s.pricing);
    std::string tenors;
    for (std::size_t i = 0; i < s.tenors.size(); ++i) tenors += (i ? "," : "") + detail::general(s.tenors[i]);
    cfg.emplace_back("tenors", tenors);
    cfg.emplace_back("t_max", s.t_max ? detail::general(*s.t_max) : "longest quote maturity");
    cfg.emplace_back("currency", s.currency);
    cfg.emplace_back("bootstrap_mode", s.bootstrap_mode == BootstrapMode::standard ? "standard" : "literal");
    cfg.emplace_back("mc_paths", std::to_string(s.mc_paths));
    cfg.emplace_back("mc_step", detail::general(s.mc_step));
    cfg.emplace_back("mc_antithetic", s.mc_antithetic ? "yes" : "no");
    cfg.emplace_back("rate_starts", std::to_string(s.rate_starts));
    cfg.emplace_back("weights", o.weights);
    cfg.emplace_back("correlated", o.correlated);
    cfg.emplace_back("seed", std::to_string(o.seed));
    for (const auto& [k, v] : s.model) cfg.emplace_back(k, detail::general(v));
    return cfg;
}

inline ModelParams<double> model_from(const Settings& s) {
    ModelParams<double> p;
    p.r0 = s.get("r0");
    p.alpha1 = s.get("alpha1");
    p.beta1 = s.get("beta1");
    p.sigma1 = s.get("sigma1");
    p.alpha2 = s.get("alpha2");
    p.beta2 = s.get("beta2");
    p.sigma2 = s.get("sigma2");
    p.lambda0 = s.get("lambda0");
    p.rho = s.has("rho") ? s.get("rho") : 0.0;
    if (s.has("sigma_hat1")) p.sigma_hat1 = s.get("sigma_hat1");
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return p;
}

inline std::vector<std::pair<std::string, double>> parameter_block(const ModelParams<double>& p) {
    std::vector<std::pair<std::string, double>> v{{"alpha1", p.alpha1}, {"beta1", p.beta1},   {"sigma1", p.sigma1},
                                                  {"r0", p.r0},         {"alpha2", p.alpha2}, {"beta2", p.beta2},
                                                  {"sigma2", p.sigma2}, {"lambda0", p.lambda0}, {"rho", p.rho}};
    if (p.sigma_hat1) v.emplace_back("sigma_hat1", *p.sigma_hat1);
    return v;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline CdsQuoteSet load_quotes(const Options& o, const Settings& s) {
    if (o.quotes.empty()) throw InputError("--quotes is required");
    auto q = load_cds_quotes(o.quotes);
    q.currency = s.currency;
    q.valuation = s.pricing.valuation;
    return q;
}

inline double longest_maturity(const CdsQuoteSet& q, const PricingConfig& cfg) {
    return build_schedule(cfg.valuation, q.quotes.back().tenor, cfg).maturity();
}

/// Emits the report to stdout and, when an output directory is set, as CSV and JSON.
inline void emit(const Report& r, const Options& o, std::ostream& out) {
    print_table(out, r);
    if (o.out.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(o.out, ec);
    const std::string base = (std::filesystem::path(o.out) / r.command).string();
    write_csv(base + ".csv", r);
    write_json(base + ".json", r);
}

struct StepResult {
    Report report;
    bool converged = true;
};

inline StepResult cmd_calibrate_rates(const Options& o, const Settings& s) {
    if (o.curve.empty()) throw InputError("--curve is required");
    const auto curve = load_discount_curve(o.curve);
    RateGuess g;
    if (s.has("alpha1")) g.alpha = s.get("alpha1");
    if (s.has("beta1")) g.beta = s.get("beta1");
    if (s.has("sigma1")) g.sigma = s.get("sigma1");
    RateCalibrationOptions ro;
    ro.starts = s.rate_starts;
    const auto res = calibrate_rates(curve, s.get("r0"), g, ro);
    Report r;
    r.command = "calibrate-rates";
    r.columns = {{"tenor", 4}, {"market_df", 10}, {"model_df", 10}, {"residual", 12}};
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& p = curve.points()[i];
        r.rows.push_back({p.tenor, p.discount_factor, p.discount_factor + res.residuals[i], res.residuals[i]});
    }
    for (std::size_t i = 0; i < res.names.size(); ++i) r.parameters.emplace_back(res.names[i], res.parameters[i]);
    r.parameters.emplace_back("r0", s.get("r0"));
    r.scalars = {{"objective", res.objective}, {"iterations", double(res.iterations)}};
    r.labels = {{"converged", res.converged ? "yes" : "no"}};
    r.timings = {{"step1", res.seconds}};
    r.warnings = res.warnings;
    return {r, res.converged};
}

inline StepResult cmd_match_vol(const Options& o, const Settings& s) {
    const auto t0 = std::chrono::steady_clock::now();
    const CirParams<double> rate{s.get("alpha1"), s.get("beta1"), s.get("sigma1"), s.get("r0")};
    double t_max = 0;
    if (s.t_max) t_max = *s.t_max;
    else if (!o.quotes.empty()) t_max = longest_maturity(load_quotes(o, s), s.pricing);
    else throw InputError("match-vol needs t_max in the config or --quotes");
    ExpansionOptions eo{s.pricing.scheme, s.pricing.quad_nodes};
    const auto m = match_volatility(rate, t_max, eo);
    Report r;
    r.command = "match-vol";
    r.parameters = {{"alpha1", rate.alpha}, {"beta1", rate.beta}, {"sigma1", rate.sigma}, {"r0", rate.x0}};
    r.scalars = {{"t_max", t_max}, {"sigma_hat1", m.sigma_hat}, {"residual", m.residual}};
    r.labels = {{"branch", to_string(m.branch)}};
    r.timings = {{"step2", seconds_since(t0)}};
    return {r, true};
}

inline CdsCalibrationOptions cds_options(const Options& o) {
    CdsCalibrationOptions c;
    c.weights = parse_weight_scheme(o.weights);
    if (o.correlated != "yes" && o.correlated != "no") throw InputError("--correlated must be yes or no");
    c.correlated = o.correlated == "yes";
    return c;
}

inline IntensityGuess intensity_guess(const Settings& s, const CdsQuoteSet& q) {
    IntensityGuess g;
    g.lambda0 = std::max(1e-4, q.quotes.front().mid_bps * 1e-4 / (1 - s.pricing.recovery));
    g.beta2 = std::max(1e-4, q.quotes.back().mid_bps * 1e-4 / (1 - s.pricing.recovery));
    if (s.has("alpha2")) g.alpha2 = s.get("alpha2");
    if (s.has("beta2")) g.beta2 = s.get("beta2");
    if (s.has("sigma2")) g.sigma2 = s.get("sigma2");
    if (s.has("lambda0")) g.lambda0 = s.get("lambda0");
    if (s.has("rho")) g.rho = s.get("rho");
    return g;
}

inline StepResult cds_step(const CdsQuoteSet& q, const ModelParams<double>& rates, const Settings& s,
                           const Options& o, const std::string& command) {
    const auto res = calibrate_cds(q, rates, s.pricing, intensity_guess(s, q), cds_options(o));
    Report r = calibration_report(command, q.tenors(), res.market_bps, res.model_bps);
    r.parameters = parameter_block(res.model);
    r.scalars = {{"objective", res.objective}, {"iterations", double(res.iterations)}};
    r.labels = {{"converged", res.converged ? "yes" : "no"}};
    r.timings = {{"step3", res.seconds}};
    r.warnings = res.warnings;
    return {r, res.converged};
}

inline StepResult cmd_calibrate_cds(const Options& o, const Settings& s) {
    const auto q = load_quotes(o, s);
    ModelParams<double> rates;
    rates.r0 = s.get("r0");
    rates.alpha1 = s.get("alpha1");
    rates.beta1 = s.get("beta1");
    rates.sigma1 = s.get("sigma1");
    if (s.has("sigma_hat1")) rates.sigma_hat1 = s.get("sigma_hat1");
    return cds_step(q, rates, s, o, "calibrate-cds");
}

inline StepResult cmd_price(const Options& o, const Settings& s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = model_from(s);
    Report r;
    r.command = "price";
    if (!o.quotes.empty()) {
        const auto q = load_quotes(o, s);
        std::vector<double> model;
        for (const auto& pt : spread_curve(p, q.tenors(), s.pricing)) model.push_back(pt.spread * 1e4);
        r = calibration_report("price", q.tenors(), q.mids_bps(), model);
    } else {
        r.columns = {{"tenor", 2}, {"maturity", 6}, {"model_bps", 3}};
        for (const auto& pt : spread_curve(p, s.tenors, s.pricing)) r.rows.push_back({pt.tenor, pt.maturity, pt.spread * 1e4});
    }
    r.parameters = parameter_block(p);
    r.timings = {{"price", seconds_since(t0)}};
    CdsPricer check(p, s.pricing);
    r.warnings = check.price(build_schedule(s.pricing.valuation, 1.0, s.pricing)).warnings;
    return {r, true};
}

inline StepResult cmd_survival(const Options& o, const Settings& s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = model_from(s);
    const auto leg = p.intensity_leg();
    ExpansionOptions eo{s.pricing.scheme, s.pricing.quad_nodes};
    Report r;
    r.command = "survival";
    std::vector<double> tenors = s.tenors;
    std::optional<BootstrapResult> boot;
    if (!o.quotes.empty()) {
        const auto q = load_quotes(o, s);
        tenors = q.tenors();
        boot = bootstrap_survival(q, s.pricing.recovery, s.bootstrap_mode);
        r.columns = {{"tenor", 2}, {"approx_Q", 8}, {"exact_Q", 8}, {"rel_error_pct", 5}, {"market_Q", 8}};
    } else {
        r.columns = {{"tenor", 2}, {"approx_Q", 8}, {"exact_Q", 8}, {"rel_error_pct", 5}};
    }
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        const double a = survival_approx(leg, 0.0, tenors[i], eo);
        const double e = cir_bond(leg, 0.0, tenors[i]);
        std::vector<double> row{tenors[i], a, e, relative_error_pct(a, e)};
        if (boot) row.push_back(boot->survival[i]);
        r.rows.push_back(row);
    }
    r.parameters = parameter_block(p);
    r.timings = {{"survival", seconds_since(t0)}};
    return {r, true};
}

inline StepResult cmd_bootstrap(const Options& o, const Settings& s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto q = load_quotes(o, s);
    const auto b = bootstrap_survival(q, s.pricing.recovery, s.bootstrap_mode);
    Report r;
    r.command = "bootstrap";
    r.columns = {{"tenor", 2}, {"mid_bps", 3}, {"survival", 8}};
    for (std::size_t i = 0; i < b.tenors.size(); ++i) r.rows.push_back({b.tenors[i], q.quotes[i].mid_bps, b.survival[i]});
    r.labels = {{"mode", s.bootstrap_mode == BootstrapMode::standard ? "standard" : "literal"},
                {"monotonicity_anomaly", b.anomaly() ? "yes" : "no"}};
    if (b.anomaly()) r.warnings.push_back("survival probabilities increase at " + std::to_string(b.increases.size()) + " tenor(s)");
    r.timings = {{"bootstrap", seconds_since(t0)}};
    return {r, true};
}

inline StepResult cmd_mc_check(const Options& o, const Settings& s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto p = model_from(s);
    ExpansionOptions eo{s.pricing.scheme, s.pricing.quad_nodes};
    McConfig mc;
    mc.paths = s.mc_paths;
    mc.step = s.mc_step;
    mc.antithetic = s.mc_antithetic;
    mc.seed = o.seed;
    Report r;
    r.command = "mc-check";
    r.columns = {{"T", 2}, {"v_expansion", 8}, {"v_mc", 8}, {"v_z", 2}, {"h_expansion", 8}, {"h_mc", 8}, {"h_z", 2}};
    for (double T : s.tenors) {
        const auto e = expansion_terms(p, T, s.pricing.order, eo);
        const auto m = mc_estimate_all(p, T, mc);
        const double h = e.h_sum() * std::exp(-p.alpha2 * T);
        auto z = [](double a, const McEstimate& b) { return b.standard_error > 0 ? (a - b.estimate) / b.standard_error : 0.0; };
        r.rows.push_back({T, e.v_sum(), m.v.estimate, z(e.v_sum(), m.v), h, m.h.estimate, z(h, m.h)});
    }
    r.parameters = parameter_block(p);
    r.timings = {{"mc-check", seconds_since(t0)}};
    return {r, true};
}

inline StepResult cmd_full_pipeline(const Options& o, const Settings& s) {
    const auto step1 = cmd_calibrate_rates(o, s);
    ModelParams<double> rates;
    rates.r0 = s.get("r0");
    rates.alpha1 = step1.report.parameters[0].second;
    rates.beta1 = step1.report.parameters[1].second;
    rates.sigma1 = step1.report.parameters[2].second;

    const auto q = load_quotes(o, s);
    const auto t2 = std::chrono::steady_clock::now();
    const double t_max = s.t_max.value_or(longest_maturity(q, s.pricing));
    const auto m = match_volatility(rates.rate_leg(), t_max, ExpansionOptions{s.pricing.scheme, s.pricing.quad_nodes});
    rates.sigma_hat1 = m.sigma_hat;
    const double step2_seconds = seconds_since(t2);

    auto step3 = cds_step(q, rates, s, o, "full-pipeline");
    Report& r = step3.report;
    const auto boot = bootstrap_survival(q, s.pricing.recovery, s.bootstrap_mode);
    ModelParams<double> fitted = rates;
    for (const auto& [k, v] : r.parameters) {
        if (k == "alpha2") fitted.alpha2 = v;
        if (k == "beta2") fitted.beta2 = v;
        if (k == "sigma2") fitted.sigma2 = v;
        if (k == "lambda0") fitted.lambda0 = v;
        if (k == "rho") fitted.rho = v;
    }
    ExpansionOptions eo{s.pricing.scheme, s.pricing.quad_nodes};
    r.columns.push_back({"model_Q", 8});
    r.columns.push_back({"market_Q", 8});
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        r.rows[i].push_back(survival_approx(fitted.intensity_leg(), 0.0, q.quotes[i].tenor, eo));
        r.rows[i].push_back(boot.survival[i]);
    }
    double worst = 0;
    for (const auto& row : r.rows) worst = std::max(worst, std::abs(row[2] - row[1]));
    r.scalars.emplace_back("rate_objective", step1.report.scalars[0].second);
    r.scalars.emplace_back("max_abs_error_bps", worst);
    r.labels.emplace_back("sigma_hat1_branch", to_string(m.branch));
    r.timings = {{"step1", step1.report.timings[0].second}, {"step2", step2_seconds}, {"step3", r.timings[0].second}};
    r.warnings.insert(r.warnings.begin(), step1.report.warnings.begin(), step1.report.warnings.end());
    return {r, step1.converged && step3.converged};
}

/// Runs one command line; returns the process exit status.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Two-factor square-root credit model: calibration, CDS pricing and validation"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"calibrate-rates", "Fit the rate leg to a discount curve"},
        {"match-vol", "Match the expansion rate volatility to the exact bond price"},
        {"calibrate-cds", "Fit the intensity leg and correlation to CDS quotes"},
        {"price", "Price a CDS spread curve"},
        {"survival", "Compare approximate and exact survival probabilities"},
        {"bootstrap", "Bootstrap market survival probabilities from spreads"},
        {"mc-check", "Compare expansion values with Monte Carlo"},
        {"full-pipeline", "Rates, volatility matching, CDS fit, repricing and bootstrap"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--curve", o.curve, "Discount curve CSV");
        sub->add_option("--quotes", o.quotes, "CDS quotes CSV");
        sub->add_option("--config", o.config, "key=value settings file");
        sub->add_option("--out", o.out, "Directory for CSV and JSON reports");
        sub->add_option("--order", o.order, "Expansion order")->check(CLI::Range(0, 2));
        sub->add_option("--weights", o.weights, "bidask | invtenor | uniform");
        sub->add_option("--correlated", o.correlated, "yes | no");
        sub->add_option("--seed", o.seed, "Monte Carlo seed");
        sub->add_flag("--no-timings", o.no_timings, "Omit wall-clock timings from reports");
        sub->callback([&o, name = name] { o.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }
    try {
        const Settings s = load_settings(o);
        StepResult res;
        if (o.command == "calibrate-rates") res = cmd_calibrate_rates(o, s);
        else if (o.command == "match-vol") res = cmd_match_vol(o, s);
        else if (o.command == "calibrate-cds") res = cmd_calibrate_cds(o, s);
        else if (o.command == "price") res = cmd_price(o, s);
        else if (o.command == "survival") res = cmd_survival(o, s);
        else if (o.command == "bootstrap") res = cmd_bootstrap(o, s);
        else if (o.command == "mc-check") res = cmd_mc_check(o, s);
        else if (o.command == "full-pipeline") res = cmd_full_pipeline(o, s);
        else throw InputError("unknown subcommand");
        res.report.config = echo(s, o);
        res.report.include_timings = !o.no_timings;
        emit(res.report, o, out);
        if (!res.converged) {
            err << "error: optimizer did not converge\n";
            return not_converged;
        }
        return ok;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return failure;
    }
}

}  // namespace ssrd::cli
