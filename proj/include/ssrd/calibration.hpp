#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cds_pricer.hpp"
#include "cir.hpp"
#include "expansion.hpp"
#include "market_data.hpp"
#include "nelder_mead.hpp"

namespace ssrd {

inline double feller_penalty(double alpha, double beta, double sigma) {
    const double excess = std::max(0.0, sigma * sigma - 2 * alpha * beta);
    return 1e6 * excess * excess;
}

// ---------------------------------------------------------------------------
// Step 1: rate leg
// ---------------------------------------------------------------------------

struct RateGuess {
    double alpha = 0.1;
    double beta = 0.05;
    double sigma = 0.08;
};

struct RateCalibrationOptions {
    int starts = 5;
    NelderMeadOptions optimizer{};
};

/// Fits (alpha1, beta1, sigma1) to discount factors with the exact bond formula.
inline CalibrationResult calibrate_rates(const DiscountCurve& curve, double r0, const RateGuess& guess = {},
                                         const RateCalibrationOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (curve.size() < 3) throw InputError("insufficient points: rate calibration needs at least 3 curve points");
    if (!(r0 >= 0)) throw InputError("r0 must be non-negative");
    const auto& pts = curve.points();
    auto residuals = [&](const std::vector<double>& x) {
        const CirParams<double> leg{x[0], x[1], x[2], r0};
        std::vector<double> res;
        for (const auto& p : pts) res.push_back(cir_bond(leg, 0.0, p.tenor) - p.discount_factor);
        return res;
    };
    auto sum_squares = [](const std::vector<double>& r) {
        double s = 0;
        for (double v : r) s += v * v;
        return s;
    };
    // residuals in basis points of price keep the optimizer's tolerances meaningful
    const Objective objective = [&](const std::vector<double>& x) {
        return 1e8 * sum_squares(residuals(x)) + feller_penalty(x[0], x[1], x[2]);
    };
    // the guess, then the two tetrahedra inscribed in a log-space cube around it
    static constexpr double grid[][3] = {{1, 1, 1},         {4, 4, 4},       {4, 0.25, 0.25}, {0.25, 4, 0.25},
                                         {0.25, 0.25, 4},   {0.25, 0.25, 0.25}, {0.25, 4, 4},  {4, 0.25, 4},
                                         {4, 4, 0.25}};
    const int starts = std::clamp(opt.starts, 1, int(std::size(grid)));
    const BoundsTransform bounds{{Bound::positive, Bound::positive, Bound::positive}};
    CalibrationResult best;
    bool have = false;
    int iterations = 0;
    for (int k = 0; k < starts; ++k) {
        const std::vector<double> x0{guess.alpha * grid[k][0], guess.beta * grid[k][1], guess.sigma * grid[k][2]};
        CalibrationResult r;
        try {
            r = nelder_mead(objective, x0, bounds, opt.optimizer);
        } catch (const std::invalid_argument&) {
            continue;
        }
        iterations += r.iterations;
        if (!have || r.objective < best.objective) {
            best = r;
            have = true;
        }
    }
    if (!have) throw std::runtime_error("rate calibration: no start produced a finite objective");
    best.names = {"alpha1", "beta1", "sigma1"};
    best.iterations = iterations;
    best.residuals = residuals(best.parameters);
    best.objective = sum_squares(best.residuals);
    double worst = 0;
    for (double v : best.residuals) worst = std::max(worst, std::abs(v));
    if (best.parameters[1] < 1e-6 || worst > 1e-4)
        best.warnings.push_back("degenerate fit: long-run level near zero or residuals above 1e-4; curve may be "
                                "inconsistent with a positive square-root short rate");
    if (2 * best.parameters[0] * best.parameters[1] <= best.parameters[2] * best.parameters[2])
        best.warnings.push_back("fitted rate parameters violate the Feller condition");
    best.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return best;
}

// ---------------------------------------------------------------------------
// Step 2: volatility matching
// ---------------------------------------------------------------------------

struct MatchedVolatility {
    enum class Branch { quadratic_root, minimizer_fallback };
    double sigma_hat = 0;
    Branch branch = Branch::quadratic_root;
    double residual = 0;  ///< |P - P_approx| at T_max
};

inline std::string to_string(MatchedVolatility::Branch b) {
    return b == MatchedVolatility::Branch::quadratic_root ? "quadratic-root" : "minimizer-fallback";
}

/// Finds sigma_hat such that the one-factor expansion with sigma_hat reproduces the exact
/// bond price with sigma at T_max. rate.x0 is r0.
inline MatchedVolatility match_volatility(const CirParams<double>& rate, double T_max, const ExpansionOptions& opt = {}) {
    if (!(T_max > 0)) throw InputError("match_volatility: T_max must be positive");
    const auto e = one_factor_expansion(rate, 0.0, T_max, opt);
    MatchedVolatility m;
    if (rate.sigma == 0) {
        m.residual = std::abs(deterministic_discount(rate, T_max) - e.base);
        return m;
    }
    const double P = cir_bond(rate, 0.0, T_max);
    // e.base c4 s^2 + e.base c2 s + (e.base - P) = 0 in s = sigma_hat^2
    const double a = e.base * e.c4, b = e.base * e.c2, c = e.base - P;
    std::vector<double> roots;
    if (a == 0) {
        if (b != 0) roots.push_back(-c / b);
    } else {
        const double disc = b * b - 4 * a * c;
        if (disc >= 0) {
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            roots.push_back(q / a);
            if (q != 0) roots.push_back(c / q);
        }
    }
    std::sort(roots.begin(), roots.end());
    for (double r : roots) {
        if (r > 0) {
            m.sigma_hat = std::sqrt(r);
            m.branch = MatchedVolatility::Branch::quadratic_root;
            m.residual = std::abs(P - e.value(m.sigma_hat));
            return m;
        }
    }
    // golden-section search of |P - P_approx| over [0, 5 sigma]
    auto gap = [&](double s) { return std::abs(P - e.value(s)); };
    double lo = 0, hi = 5 * rate.sigma;
    const double g = (std::sqrt(5.0) - 1) / 2;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = gap(x1), f2 = gap(x2);
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        if (f1 < f2) { hi = x2; x2 = x1; f2 = f1; x1 = hi - g * (hi - lo); f1 = gap(x1); }
        else { lo = x1; x1 = x2; f1 = f2; x2 = lo + g * (hi - lo); f2 = gap(x2); }
    }
    m.sigma_hat = 0.5 * (lo + hi);
    for (double edge : {0.0, 5 * rate.sigma})
        if (gap(edge) < gap(m.sigma_hat)) m.sigma_hat = edge;
    m.branch = MatchedVolatility::Branch::minimizer_fallback;
    m.residual = gap(m.sigma_hat);
    return m;
}

// ---------------------------------------------------------------------------
// Step 3: intensity leg
// ---------------------------------------------------------------------------

enum class WeightScheme { bid_ask, inverse_tenor, uniform };

inline WeightScheme parse_weight_scheme(const std::string& s) {
    if (s == "bidask") return WeightScheme::bid_ask;
    if (s == "invtenor") return WeightScheme::inverse_tenor;
    if (s == "uniform") return WeightScheme::uniform;
    throw InputError("unknown weight scheme '" + s + "'");
}

inline std::string to_string(WeightScheme w) {
    switch (w) {
        case WeightScheme::bid_ask: return "bidask";
        case WeightScheme::inverse_tenor: return "invtenor";
        case WeightScheme::uniform: return "uniform";
    }
    return "?";
}

inline std::vector<double> compute_weights(WeightScheme scheme, const CdsQuoteSet& quotes) {
    std::vector<double> w;
    for (const auto& q : quotes.quotes) {
        switch (scheme) {
            case WeightScheme::bid_ask:
                if (q.ask_bps == q.bid_bps) throw InputError("bid-ask weights need bid != ask on every quote");
                w.push_back(1.0 / std::abs(q.ask_bps - q.bid_bps));
                break;
            case WeightScheme::inverse_tenor: w.push_back(1.0 / q.tenor); break;
            case WeightScheme::uniform: w.push_back(1.0); break;
        }
    }
    double total = 0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    return w;
}

/// Intensity-leg parameters and correlation.
struct IntensityGuess {
    double alpha2 = 0.1;
    double beta2 = 0.02;
    double sigma2 = 0.05;
    double lambda0 = 0.01;
    double rho = 0.0;
};

struct CdsCalibrationOptions {
    WeightScheme weights = WeightScheme::inverse_tenor;
    bool correlated = true;
    int objective_order = 1;
    int report_order = 2;
    NelderMeadOptions optimizer{};
};

struct CdsCalibrationResult : CalibrationResult {
    ModelParams<double> model;          ///< rate leg plus fitted intensity leg
    std::vector<double> weights;
    std::vector<double> market_bps;
    std::vector<double> model_bps;      ///< repriced at the report order
};

inline ModelParams<double> with_intensity(ModelParams<double> p, const std::vector<double>& x, bool correlated) {
    p.alpha2 = x[0];
    p.beta2 = x[1];
    p.sigma2 = x[2];
    p.lambda0 = x[3];
    p.rho = correlated ? x[4] : 0.0;
    return p;
}

/// Weighted least squares in basis points of spread; rate-leg fields of `rates` are kept fixed.
inline CdsCalibrationResult calibrate_cds(const CdsQuoteSet& quotes, const ModelParams<double>& rates,
                                          const PricingConfig& cfg, const IntensityGuess& guess = {},
                                          const CdsCalibrationOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (quotes.quotes.empty()) throw InputError("no quotes to calibrate");
    cfg.validate();
    const auto tenors = quotes.tenors();
    const auto market = quotes.mids_bps();
    const auto w = compute_weights(opt.weights, quotes);
    PricingConfig inner = cfg;
    inner.order = opt.objective_order;

    auto model_bps = [&](const ModelParams<double>& p, const PricingConfig& c) {
        std::vector<double> out;
        for (const auto& pt : spread_curve(p, tenors, c)) out.push_back(pt.spread * 1e4);
        return out;
    };
    auto weighted_ss = [&](const std::vector<double>& m) {
        double s = 0;
        for (std::size_t i = 0; i < m.size(); ++i) s += w[i] * (m[i] - market[i]) * (m[i] - market[i]);
        return s;
    };
    const Objective objective = [&](const std::vector<double>& x) {
        const auto p = with_intensity(rates, x, opt.correlated);
        return weighted_ss(model_bps(p, inner)) + feller_penalty(p.alpha2, p.beta2, p.sigma2);
    };
    std::vector<double> x0{guess.alpha2, guess.beta2, guess.sigma2, guess.lambda0};
    BoundsTransform bounds{{Bound::positive, Bound::positive, Bound::positive, Bound::positive}};
    if (opt.correlated) {
        x0.push_back(guess.rho);
        bounds.kinds.push_back(Bound::symmetric_unit);
    }
    CalibrationResult base = nelder_mead(objective, x0, bounds, opt.optimizer);
    CdsCalibrationResult r;
    static_cast<CalibrationResult&>(r) = base;
    r.names = {"alpha2", "beta2", "sigma2", "lambda0"};
    if (opt.correlated) r.names.push_back("rho");
    r.model = with_intensity(rates, base.parameters, opt.correlated);
    const auto fitted = model_bps(r.model, inner);
    r.residuals.clear();
    for (std::size_t i = 0; i < fitted.size(); ++i) r.residuals.push_back(fitted[i] - market[i]);
    r.objective = weighted_ss(fitted);
    r.weights = w;
    r.market_bps = market;
    PricingConfig report = cfg;
    report.order = opt.report_order;
    r.model_bps = model_bps(r.model, report);
    if (quotes.quotes.size() < x0.size()) r.warnings.push_back("quotes < parameters: fit is under-determined");
    if (feller_margin(r.model.intensity_leg()) <= 0)
        r.warnings.push_back("fitted intensity parameters violate the Feller condition");
    if (!r.converged) r.warnings.push_back("optimizer did not converge within the iteration budget");
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// ---------------------------------------------------------------------------
// Market survival bootstrap
// ---------------------------------------------------------------------------

enum class BootstrapMode { standard, literal };

struct BootstrapResult {
    std::vector<double> tenors;
    std::vector<double> survival;
    std::vector<std::size_t> increases;  ///< indices j with Q_j > Q_{j-1}
    bool anomaly() const { return !increases.empty(); }
};

/// Undiscounted sequential bootstrap from mid spreads. standard: protection on survival decrements;
/// literal: protection on Q_j - Q_{j-1} with the sign left as written, which makes Q grow.
inline BootstrapResult bootstrap_survival(const CdsQuoteSet& quotes, double recovery, BootstrapMode mode) {
    if (!(recovery < 1.0)) throw InputError("recovery must be < 1");
    if (!(recovery >= 0.0)) throw InputError("recovery must be >= 0");
    BootstrapResult out;
    const double lgd = 1 - recovery;
    double prev_q = 1, prev_t = 0;
    for (std::size_t j = 0; j < quotes.quotes.size(); ++j) {
        const auto& q = quotes.quotes[j];
        const double dt = q.tenor - prev_t;
        const double rd = q.mid_bps * 1e-4 * dt;
        if (!(rd < lgd)) throw InputError("bootstrap not solvable: spread * period >= 1 - recovery");
        const double next = mode == BootstrapMode::standard ? lgd * prev_q / (lgd + rd) : lgd * prev_q / (lgd - rd);
        if (next > prev_q) out.increases.push_back(j);
        out.tenors.push_back(q.tenor);
        out.survival.push_back(next);
        prev_q = next;
        prev_t = q.tenor;
    }
    return out;
}

}  // namespace ssrd
