#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssrd/expansion.hpp"

using namespace ssrd;

namespace {

struct Intensity {
    const char* name;
    double alpha, beta, sigma, lambda0;
};

// intensity legs of the four reference banks
const Intensity kSets[] = {
    {"caixa", 0.00561, 0.92493, 0.02352, 0.01011},
    {"commerzbank", 0.03966, 0.16350, 0.01600, 0.00436},
    {"deutsche", 0.22724, 0.05817, 0.06869, 0.00537},
    {"mediobanca", 0.04117, 0.18416, 0.07196, 0.01103},
};

template <class Real = double>
ModelParams<Real> model(const Intensity& s, double rho = 0.0) {
    ModelParams<Real> p;
    p.alpha1 = Real(0.2);
    p.beta1 = Real(0.03);
    p.sigma1 = Real(0.05);
    p.r0 = Real(0.02);
    p.alpha2 = Real(s.alpha);
    p.beta2 = Real(s.beta);
    p.sigma2 = Real(s.sigma);
    p.lambda0 = Real(s.lambda0);
    p.rho = Real(rho);
    return p;
}

double exact_v(const ModelParams<double>& p, double T) {
    return oracle::cir_bond(p.alpha1, p.beta1, p.sigma1, p.r0, T) * oracle::cir_bond(p.alpha2, p.beta2, p.sigma2, p.lambda0, T);
}

double exact_h(const ModelParams<double>& p, double T) {
    return oracle::cir_bond(p.alpha1, p.beta1, p.sigma1, p.r0, T) *
           oracle::cir_density(p.alpha2, p.beta2, p.sigma2, p.lambda0, T);
}

ExpansionOptions frozen() {
    ExpansionOptions o;
    o.scheme = ExpansionScheme::frozen_multiplier;
    return o;
}

}  // namespace

TEST(Expansion, TerminalConditionsAtEveryOrder) {
    for (const auto& s : kSets) {
        const auto p = model(s, -0.3);
        for (int order = 0; order <= 2; ++order) {
            for (const auto& opt : {ExpansionOptions{}, frozen()}) {
                const auto e = expansion_terms(p, 0.0, order, opt);
                EXPECT_EQ(e.v_sum(), 1.0);
                EXPECT_EQ(e.h_sum(), p.lambda0);
            }
        }
    }
}

TEST(Expansion, OrdersArePartialSums) {
    const auto p = model(kSets[2], 0.4);
    for (const auto& opt : {ExpansionOptions{}, frozen()}) {
        const auto e2 = expansion_terms(p, 3.0, 2, opt);
        const auto e1 = expansion_terms(p, 3.0, 1, opt);
        const auto e0 = expansion_terms(p, 3.0, 0, opt);
        EXPECT_EQ(e1.v[0], e2.v[0]);
        EXPECT_EQ(e1.v[1], e2.v[1]);
        EXPECT_EQ(e0.v[0], e2.v[0]);
        EXPECT_EQ(e1.h[1], e2.h[1]);
        EXPECT_EQ(e1.v[2], 0.0);
        EXPECT_EQ(v_expansion(p, 3.0, 1, opt), e2.v[0] + e2.v[1]);
    }
}

TEST(Expansion, ZeroVolatilityHasNoCorrections) {
    auto p = model(kSets[2]);
    p.sigma1 = 0;
    p.sigma2 = 0;
    for (const auto& opt : {ExpansionOptions{}, frozen()}) {
        const auto e = expansion_terms(p, 4.0, 2, opt);
        EXPECT_EQ(e.v[1], 0.0);
        EXPECT_EQ(e.v[2], 0.0);
        EXPECT_EQ(e.h[1], 0.0);
        EXPECT_EQ(e.h[2], 0.0);
    }
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    const auto L1 = apply_L1(k, 4.0);
    const auto L2 = apply_L2(k, 4.0).total();
    for (const auto& [key, c] : L1.terms()) EXPECT_EQ(c, 0.0);
    for (const auto& [key, c] : L2.terms()) EXPECT_EQ(c, 0.0);
}

TEST(Expansion, RejectsBadArguments) {
    const auto p = model(kSets[0]);
    EXPECT_THROW(expansion_terms(p, 1.0, 3), std::invalid_argument);
    EXPECT_THROW(expansion_terms(p, -1.0, 1), std::invalid_argument);
    EXPECT_THROW(expansion_terms(p, p.r0, p.lambda0, 2.0, 1.0, 1), std::invalid_argument);
}

TEST(Expansion, ExactProductOracleAtZeroCorrelation) {
    for (const auto& s : kSets) {
        const auto p = model(s);
        for (double T = 0.5; T <= 5.0; T += 0.5) {
            const auto e = expansion_terms(p, T, 2);
            const double v = exact_v(p, T), h = exact_h(p, T);
            EXPECT_LT(std::abs(e.v_sum() - v) / v, 1e-3) << s.name << " T=" << T;
            EXPECT_LT(std::abs(std::exp(-p.alpha2 * T) * e.h_sum() - h) / h, 1e-3) << s.name << " T=" << T;
        }
    }
}

TEST(Expansion, CorrectionsReduceTheError) {
    for (const auto& s : kSets) {
        const auto p = model(s);
        const double T = 5.0;
        const auto e = expansion_terms(p, T, 2);
        const double v = exact_v(p, T);
        const double err0 = std::abs(e.v[0] - v), err1 = std::abs(e.v[0] + e.v[1] - v), err2 = std::abs(e.v_sum() - v);
        EXPECT_LT(err1, err0) << s.name;
        EXPECT_LT(err2, err1) << s.name;
    }
}

template <class Real>
std::vector<double> order_errors(int order) {
    const auto p = model<Real>(kSets[2]);
    std::vector<double> err;
    for (double T : {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0}) {
        const Real v = v_expansion(p, Real(T), order);
        const Real exact = cir_bond(p.rate_leg(), Real(0), Real(T)) * cir_bond(p.intensity_leg(), Real(0), Real(T));
        err.push_back(double((v - exact) / exact));
    }
    return err;
}

TEST(Expansion, FirstOrderConvergenceInDoublePrecision) {
    // order-2 errors at small T sit below double rounding; see the extended-precision test
    const std::vector<double> T{1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
    EXPECT_GE(oracle::loglog_slope(T, order_errors<double>(1)), 1.3);
}

TEST(Expansion, ConvergenceOrderInExtendedPrecision) {
    const std::vector<double> T{1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
    const auto e1 = order_errors<long double>(1), e2 = order_errors<long double>(2);
    EXPECT_GE(oracle::loglog_slope(T, e1), 1.3);
    EXPECT_GE(oracle::loglog_slope(T, e2), 1.8);
    const auto d2 = order_errors<double>(2);
    for (std::size_t i = 0; i < T.size(); ++i) EXPECT_NEAR(d2[i], e2[i], 1e-12);
}

TEST(Expansion, DoublingNodesIsStable) {
    const auto p = model(kSets[3], 0.5);
    ExpansionOptions fine;
    fine.nodes = 64;
    for (double T : {1.0, 6.0}) {
        const auto a = expansion_terms(p, T, 2), b = expansion_terms(p, T, 2, fine);
        EXPECT_LT(std::abs(a.v_sum() - b.v_sum()) / b.v_sum(), 1e-9);
        EXPECT_LT(std::abs(a.h_sum() - b.h_sum()) / b.h_sum(), 1e-9);
    }
}

TEST(Expansion, CorrelationEntersAsLowDegreePolynomial) {
    // order 1 is affine in rho and order 2 quadratic: third differences vanish
    auto value = [](double rho, int order) { return v_expansion(model(kSets[2], rho), 5.0, order); };
    const double h = 0.25;
    for (int order : {1, 2}) {
        const double f0 = value(-0.5, order), f1 = value(-0.25, order), f2 = value(0.0, order), f3 = value(0.25, order);
        const double d3 = f3 - 3 * f2 + 3 * f1 - f0;
        EXPECT_LT(std::abs(d3), 1e-14) << order;
        if (order == 1) {
            EXPECT_LT(std::abs(f2 - 2 * f1 + f0), 1e-14);
        }
    }
    // linear and quadratic contributions are each monotone in rho
    const double a = value(0.0, 2);
    const double lin = (value(h, 2) - value(-h, 2)) / (2 * h);
    const double quad = (value(h, 2) - 2 * a + value(-h, 2)) / (h * h);
    std::vector<double> lin_part, quad_part;
    for (double rho = -1.0; rho <= 1.0 + 1e-12; rho += 0.25) {
        lin_part.push_back(lin * rho);
        quad_part.push_back(0.5 * quad * rho * rho);
    }
    const double lin_sign = lin > 0 ? 1 : -1, quad_sign = quad > 0 ? 1 : -1;
    for (std::size_t i = 1; i < lin_part.size(); ++i) EXPECT_GE(lin_sign * lin_part[i], lin_sign * lin_part[i - 1]);
    for (std::size_t i = 1; i < quad_part.size(); ++i) {
        const double rho = -1.0 + 0.25 * double(i);
        if (rho > 0) {
            EXPECT_GE(quad_sign * quad_part[i], quad_sign * quad_part[i - 1]);
        }
    }
    EXPECT_GT(lin, 0.0);  // positive correlation raises joint survival-discount
}

TEST(Expansion, RateVolatilityOffReducesToOneFactorSurvival) {
    for (const auto& s : kSets) {
        auto p = model(s);
        p.sigma1 = 0;
        for (double T : {1.0, 3.0, 6.0}) {
            const double P = deterministic_discount(p.rate_leg(), T);
            const double joint = v_expansion(p, T, 2) / P;
            const double single = survival_approx(p.intensity_leg(), 0.0, T);
            EXPECT_NEAR(joint, single, 1e-13) << s.name << " T=" << T;
        }
    }
}

TEST(Expansion, GenericLeibnizMatchesSpecialisedDiffusion) {
    const auto p = model(kSets[2], -0.6);
    const ExpansionPoint<double> anchor(p, p.r0, p.lambda0, 0.0);
    const auto d = detail::diffusion_jets(p, anchor, 1.3);
    DerivativePolynomial<Jet<double, 2>> op;
    op.add(2, 0, d.a);
    op.add(0, 2, d.b);
    op.add(1, 1, d.c);
    Jet<double, 2> f;
    f.c[0][0] = 0.7;
    f.c[1][0] = -0.2;
    f.c[0][1] = 0.4;
    f.c[2][0] = 0.05;
    f.c[1][1] = -0.03;
    f.c[0][2] = 0.11;
    const double m1 = -0.8, m2 = -1.9;
    const auto generic = apply_to_weighted(op, m1, m2, f);
    const auto special = detail::apply_diffusion(d, m1, m2, f);
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; i + j <= 2; ++j) EXPECT_NEAR(generic.c[i][j], special.c[i][j], 1e-15);
    EXPECT_NEAR(detail::apply_diffusion_value(d, m1, m2, f), special.value(), 1e-16);
}

TEST(Expansion, HTargetMatchesMonteCarloFreeIdentity) {
    // with sigma2 = 0 the intensity is deterministic, so h = v * y_T exactly
    auto p = model(kSets[1], 0.0);
    p.sigma2 = 0;
    const double T = 4.0;
    const auto e = expansion_terms(p, T, 2);
    const double yT = p.lambda0 + p.alpha2 * p.beta2 * psi(p.alpha2, 0.0, T);
    EXPECT_NEAR(e.h_sum(), e.v_sum() * yT, 1e-15);
}

// ---------------------------------------------------------------------------
// frozen-multiplier component algebra
// ---------------------------------------------------------------------------

TEST(FrozenScheme, FirstOrderComponentStructure) {
    const auto p = model(kSets[2], 0.3);
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    const auto comps = first_order_components(k, 0.0, 2.0);
    ASSERT_EQ(comps.size(), 12u);
    const std::vector<std::pair<int, int>> orders{{3, 0}, {2, 1}, {2, 1}, {1, 2}, {1, 0}, {0, 1},
                                                  {0, 3}, {1, 2}, {1, 2}, {2, 1}, {0, 1}, {1, 0}};
    for (std::size_t n = 0; n < comps.size(); ++n) {
        EXPECT_EQ(comps[n].i, orders[n].first) << comps[n].label;
        EXPECT_EQ(comps[n].j, orders[n].second) << comps[n].label;
    }
    EXPECT_EQ(comps[0].label, "L10_1");
    EXPECT_NEAR(comps[0].coefficient, 0.5 * p.sigma1 * p.sigma1 * k.Psi(1, p.alpha1, 0, 0, 1, 0.0, 2.0), 1e-18);
    EXPECT_NEAR(comps[4].coefficient, -k.Psi(1, -p.alpha1, 0, 0, 1, 0.0, 2.0), 1e-18);
    EXPECT_LE(apply_L2(k, 2.0).total().max_order(), 6);
}

TEST(FrozenScheme, DensityIntegratesToOperator) {
    const auto p = model(kSets[3], -0.4);
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    DerivativePolynomial<double> integrated;
    for_each_node<double>(0.0, 3.0, 32, [&](double s, double w) { integrated += first_order_density(k, s).scaled(w); });
    const auto L1 = apply_L1(k, 3.0);
    for (const auto& [key, c] : L1.terms())
        EXPECT_NEAR(integrated.coefficient(key.first, key.second), c, 1e-12 * std::abs(c) + 1e-20);
}

TEST(FrozenScheme, EmptyIntervalAndZeroCorrelation) {
    const auto p = model(kSets[2], 0.0);
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 1.0));
    const auto L1 = apply_L1(k, 1.0);
    for (const auto& [key, c] : L1.terms()) EXPECT_EQ(c, 0.0);
    const auto L2 = apply_L2(k, 4.0);
    for (const auto& [key, c] : L2.local.terms()) EXPECT_EQ(c, 0.0);
    bool any = false;
    for (const auto& [key, c] : L2.iterated.terms()) any = any || c != 0.0;
    EXPECT_TRUE(any);
}

TEST(FrozenScheme, LocalSecondOrderCarriesRhoHat) {
    const auto p = model(kSets[2], 0.5);
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    const auto comps = second_order_local_components(k, 0.0, 2.0);
    ASSERT_EQ(comps.size(), 10u);
    const auto L2 = apply_L2(k, 2.0);
    const double rh = p.rho_hat();
    EXPECT_NEAR(L2.local.coefficient(3, 1),
                rh * (-0.125 * comps[0].coefficient - 0.125 * comps[4].coefficient + 0.25 * comps[7].coefficient), 1e-20);
}

TEST(DerivativePolynomial, AlgebraAndShift) {
    DerivativePolynomial<double> a, b;
    a.add(1, 0, 2.0);
    a.add(0, 2, -1.0);
    b.add(1, 1, 3.0);
    const auto prod = a * b;
    EXPECT_EQ(prod.coefficient(2, 1), 6.0);
    EXPECT_EQ(prod.coefficient(1, 3), -3.0);
    EXPECT_EQ(prod.max_order(), 4);
    const auto sh = a.y_shifted();
    EXPECT_EQ(sh.coefficient(0, 1), -2.0);
    EXPECT_EQ(sh.terms().size(), 1u);
    EXPECT_DOUBLE_EQ(a.evaluate(0.5, 2.0), 2.0 * 0.5 - 4.0);
    // (base * (g + eta)) with g = 3: value g P(m) + dP/dm2
    EXPECT_DOUBLE_EQ(a.evaluate_linear_y(0.5, 2.0, 3.0), 3.0 * a.evaluate(0.5, 2.0) + (-1.0) * 2 * 2.0);
}

// ---------------------------------------------------------------------------
// one-factor approximations
// ---------------------------------------------------------------------------

TEST(OneFactor, SurvivalMatchesExactOnBankSets) {
    for (const auto& s : kSets) {
        const CirParams<double> leg{s.alpha, s.beta, s.sigma, s.lambda0};
        for (double T = 0.5; T <= 6.0; T += 0.5) {
            const double exact = oracle::cir_bond(s.alpha, s.beta, s.sigma, s.lambda0, T);
            EXPECT_LT(std::abs(survival_approx(leg, 0.0, T) - exact) / exact, 5e-3) << s.name << " T=" << T;
        }
    }
}

TEST(OneFactor, DegenerateCases) {
    const CirParams<double> leg{0.3, 0.02, 0.0, 0.01};
    EXPECT_NEAR(survival_approx(leg, 0.0, 4.0), std::exp(-oracle::deterministic_integral(0.3, 0.02, 0.01, 4.0)), 1e-15);
    const CirParams<double> vol{0.3, 0.02, 0.05, 0.01};
    EXPECT_EQ(survival_approx(vol, 2.0, 2.0), 1.0);
    for (const auto& opt : {ExpansionOptions{}, frozen()}) {
        const auto e = one_factor_expansion(vol, 0.0, 3.0, opt);
        EXPECT_NEAR(e.value(0.0), e.base, 0.0);
    }
}

TEST(OneFactor, ZcbUsesSuppliedVolatility) {
    CirParams<double> rate{0.2, 0.03, 0.05, 0.02};
    const double a = zcb_approx(rate, 0.0, 5.0);
    rate.sigma = 0.1;
    const double b = zcb_approx(rate, 0.0, 5.0);
    EXPECT_GT(b, a);  // convexity raises the bond price
    EXPECT_LT(std::abs(a - oracle::cir_bond(0.2, 0.03, 0.05, 0.02, 5.0)) / a, 1e-5);
}
