#pragma once

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "expansion.hpp"
#include "market_data.hpp"

namespace ssrd {

struct LegValues {
    double protection = 0;        ///< (1 - recovery) * protection integral
    double annuity = 0;           ///< accrual-on-default integral plus discounted coupon fractions
    double spread = 0;            ///< decimal
    double protection_integral = 0;
    double accrual_integral = 0;
    std::vector<std::string> warnings;

    double spread_bps() const { return spread * 1e4; }
};

/// Prices CDS legs for one parameter set. Expansion values are cached per time point, so
/// schedules sharing coupon dates reuse each other's quadrature nodes.
class CdsPricer {
public:
    CdsPricer(const ModelParams<double>& params, const PricingConfig& cfg) : p_(params), cfg_(cfg) {
        cfg_.validate();
        p_.validate();
        opt_.scheme = cfg_.scheme;
        opt_.nodes = cfg_.quad_nodes;
        const auto rate = p_.rate_leg();
        const double s1 = p_.active_sigma1();
        if (2 * rate.alpha * rate.beta - s1 * s1 <= 0) warnings_.push_back("Feller condition violated on the rate leg");
        if (feller_margin(p_.intensity_leg()) <= 0) warnings_.push_back("Feller condition violated on the intensity leg");
    }

    LegValues price(const Schedule& schedule) {
        const double T = schedule.maturity();
        if (!(T > 0)) throw InputError("maturity must be positive");
        LegValues out;
        out.warnings = warnings_;
        for (std::size_t i = 1; i <= schedule.size(); ++i) {
            const double a = schedule.time(i - 1), b = schedule.time(i);
            for_each_node<double>(a, b, cfg_.quad_nodes, [&](double s, double w) {
                const double g = std::exp(-p_.alpha2 * s) * terms(s).h_sum();
                out.protection_integral += w * g;
                out.accrual_integral += w * g * (s - a);
            });
            out.annuity += (b - a) * terms(b).v_sum();
        }
        out.annuity += out.accrual_integral;
        out.protection = (1 - cfg_.recovery) * out.protection_integral;
        out.spread = out.protection / out.annuity;
        return out;
    }

    const ExpansionTerms<double>& terms(double s) {
        auto it = cache_.find(s);
        if (it == cache_.end()) it = cache_.emplace(s, expansion_terms(p_, s, cfg_.order, opt_)).first;
        return it->second;
    }

    const PricingConfig& config() const { return cfg_; }

private:
    ModelParams<double> p_;
    PricingConfig cfg_;
    ExpansionOptions opt_;
    std::vector<std::string> warnings_;
    std::map<double, ExpansionTerms<double>> cache_;
};

inline LegValues price_cds(const ModelParams<double>& params, const Schedule& schedule, const PricingConfig& cfg) {
    CdsPricer pricer(params, cfg);
    return pricer.price(schedule);
}

struct SpreadPoint {
    double tenor;
    double spread;  ///< decimal
    double maturity;
};

inline std::vector<SpreadPoint> spread_curve(const ModelParams<double>& params, const std::vector<double>& tenors,
                                             const PricingConfig& cfg) {
    std::vector<SpreadPoint> out;
    if (tenors.empty()) return out;
    CdsPricer pricer(params, cfg);
    for (std::size_t i = 0; i < tenors.size(); ++i) {
        if (!(tenors[i] > 0) || (i > 0 && !(tenors[i] > tenors[i - 1])))
            throw InputError("spread_curve: tenors must be positive and increasing");
        const Schedule s = build_schedule(cfg.valuation, tenors[i], cfg);
        out.push_back({tenors[i], pricer.price(s).spread, s.maturity()});
    }
    return out;
}

}  // namespace ssrd
