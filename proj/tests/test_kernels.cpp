#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ssrd/kernels.hpp"

using namespace ssrd;

namespace {

ModelParams<double> sample(double rho = -0.4) {
    ModelParams<double> p;
    p.alpha1 = 0.2;
    p.beta1 = 0.03;
    p.sigma1 = 0.05;
    p.r0 = 0.02;
    p.alpha2 = 0.22724;
    p.beta2 = 0.05817;
    p.sigma2 = 0.06869;
    p.lambda0 = 0.00537;
    p.rho = rho;
    return p;
}

}  // namespace

TEST(Psi, ClosedFormsAndLimit) {
    EXPECT_DOUBLE_EQ(psi(0.0, 0.0, 2.5), 2.5);
    EXPECT_NEAR(psi(1.0, 0.0, 1.0), std::exp(1.0) - 1, 1e-15);
    EXPECT_NEAR(psi(-1.0, 0.0, 1.0), 1 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(psi(1e-13, 0.0, 2.0), 2.0, 1e-12);
    EXPECT_NEAR(psi(1e-8, 0.0, 2.0), 2.0 + 2e-8, 1e-15);
    EXPECT_THROW(psi(1.0, 2.0, 1.0), std::invalid_argument);
}

TEST(Theta, ClosedFormsAndLimits) {
    EXPECT_NEAR(theta(0.0, 0.0, 0.0, 3.0), 4.5, 1e-14);
    EXPECT_NEAR(theta(-1.0, 1.0, 0.0, 1.0), std::exp(-1.0), 1e-15);
    EXPECT_EQ(theta(0.3, 0.2, 1.0, 1.0), 0.0);
    EXPECT_THROW(theta(0.3, 0.2, 2.0, 1.0), std::invalid_argument);
}

TEST(Theta, MatchesAdaptiveQuadrature) {
    for (double a : {-0.5, -0.2, 0.0, 1e-5, 0.3}) {
        for (double b : {-0.2, -1e-5, 0.0, 1e-9, 2e-4, 0.2274, 0.7}) {
            for (double t : {0.0, 1.5}) {
                const double T = t + 4.0;
                const double ref = oracle::adaptive_simpson(
                    [&](double s) {
                        const double inner = std::abs(b) < 1e-14 ? s - t : std::exp(b * t) * std::expm1(b * (s - t)) / b;
                        return std::exp(a * s) * inner;
                    },
                    t, T, 1e-14);
                EXPECT_NEAR(theta(a, b, t, T), ref, 1e-10 * std::abs(ref)) << a << ' ' << b << ' ' << t;
            }
        }
    }
}

TEST(ExpansionPoint, AnchorPathProperties) {
    const auto p = sample();
    const ExpansionPoint<double> a(p, p.r0, p.lambda0, 0.0);
    EXPECT_EQ(a.x(0.0), p.r0);
    EXPECT_EQ(a.y(0.0), p.lambda0);
    for (double s = 0.1; s < 5; s += 0.1) {
        EXPECT_GT(a.x(s), a.x(s - 0.1));
        EXPECT_GT(a.y(s), a.y(s - 0.1));
    }
}

TEST(ExpansionPoint, FloorsTinyAnchorsWithWarning) {
    auto p = sample();
    std::vector<std::string> warnings;
    const ExpansionPoint<double> a(p, 0.0, p.lambda0, 0.0, &warnings);
    EXPECT_EQ(a.x_fixed, 1e-10);
    ASSERT_EQ(warnings.size(), 1u);
}

TEST(Kernels, Psi0ReducesToPsi) {
    const auto p = sample();
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    EXPECT_NEAR(k.Psi0(0.3, 0, 0, 0.0, 2.0), psi(0.3, 0.0, 2.0), 1e-14);
    EXPECT_EQ(k.Psi(1, 0.3, 0, 0, 1, 0.0, 0.0), 0.0);
}

TEST(Kernels, Psi3MatchesTrapezoidReference) {
    const auto p = sample();
    const ExpansionPoint<double> a(p, p.r0, p.lambda0, 0.0);
    const KernelContext<double> k(p, a);
    const double ab = p.alpha_bar();
    const double rho_hat = p.rho * p.sigma1 * p.sigma2;
    // cumulative trapezoid for C12 and the outer integral on one 1e5-panel grid
    const int panels = 100000;
    const double h = 1.0 / panels;
    auto g = [&](double s) { return std::exp(ab * s) * std::sqrt(a.x(s) * a.y(s)); };
    double inner = 0, outer = 0, g_prev = g(0.0), f_prev = 0.0;
    for (int i = 1; i <= panels; ++i) {
        const double s = i * h, gs = g(s);
        inner += 0.5 * h * (g_prev + gs);
        const double fs = gs * rho_hat * inner;
        outer += 0.5 * h * (f_prev + fs);
        g_prev = gs;
        f_prev = fs;
    }
    EXPECT_NEAR(k.Psi(3, ab, 1, 1, 1, 0.0, 1.0), outer, 1e-8 * std::abs(outer));
}

TEST(Kernels, PsiAndPhiMatchAdaptiveQuadrature) {
    const auto p = sample();
    const ExpansionPoint<double> a(p, p.r0, p.lambda0, 0.5);
    const KernelContext<double> k(p, a);
    const double ab = p.alpha_bar();
    auto w = [&](double alpha, int i, int j, double s) {
        return std::exp(alpha * s) * std::pow(a.x(s), i / 2.0) * std::pow(a.y(s), j / 2.0);
    };
    // closed forms of sigma^2 int_{0.5}^s e^{alpha u} xbar(u) du with xbar(u) = x0 + beta (e^{alpha u} - e^{alpha/2})
    auto cov = [](double alpha, double beta, double sigma, double x0, double s) {
        const double e0 = std::exp(0.5 * alpha), es = std::exp(alpha * s);
        return sigma * sigma * ((x0 - beta * e0) * (es - e0) / alpha + beta * (es * es - e0 * e0) / (2 * alpha));
    };
    auto c11 = [&](double s) { return cov(p.alpha1, p.beta1, p.sigma1, p.r0, s); };
    auto c22 = [&](double s) { return cov(p.alpha2, p.beta2, p.sigma2, p.lambda0, s); };
    const double c11_quad = p.sigma1 * p.sigma1 *
                            oracle::adaptive_simpson([&](double u) { return std::exp(p.alpha1 * u) * a.x(u); }, 0.5, 2.0, 1e-14);
    EXPECT_NEAR(c11(2.0), c11_quad, 1e-12 * c11_quad);
    for (double s : {0.7, 2.0, 4.5}) {
        EXPECT_NEAR(k.C11(s), c11(s), 1e-12 * c11(s));
        EXPECT_NEAR(k.C22(s), c22(s), 1e-12 * c22(s));
    }
    const double ref1 = oracle::adaptive_simpson([&](double s) { return w(ab, -3, 1, s) * c11(s) * c11(s); }, 0.5, 4.5, 1e-14);
    EXPECT_NEAR(k.Psi(1, ab, -3, 1, 2, 0.5, 4.5), ref1, 1e-9 * std::abs(ref1));
    const double ref2 = oracle::adaptive_simpson([&](double s) { return w(-p.alpha2, 0, 0, s) * c22(s); }, 0.5, 4.5, 1e-14);
    EXPECT_NEAR(k.Psi(2, -p.alpha2, 0, 0, 1, 0.5, 4.5), ref2, 1e-10 * std::abs(ref2));
    const double ref3 = oracle::adaptive_simpson([&](double s) { return w(ab, -1, -1, s) * c11(s) * c22(s); }, 0.5, 4.5, 1e-14);
    EXPECT_NEAR(k.Phi(3, ab, -1, -1, 0.5, 4.5), ref3, 1e-9 * std::abs(ref3));
}

TEST(Kernels, DoublingNodesChangesKernelsBelowTolerance) {
    const auto p = sample();
    const ExpansionPoint<double> a(p, p.r0, p.lambda0, 0.0);
    const KernelContext<double> k32(p, a, 32), k64(p, a, 64);
    const double ab = p.alpha_bar();
    auto rel = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
    for (double T : {1.0, 5.0, 6.0}) {
        EXPECT_LT(rel(k32.Psi(1, p.alpha1, 0, 0, 1, 0, T), k64.Psi(1, p.alpha1, 0, 0, 1, 0, T)), 1e-9);
        EXPECT_LT(rel(k32.Psi(3, ab, -1, 1, 1, 0, T), k64.Psi(3, ab, -1, 1, 1, 0, T)), 1e-9);
        EXPECT_LT(rel(k32.Psi(1, ab, -3, 1, 2, 0, T), k64.Psi(1, ab, -3, 1, 2, 0, T)), 1e-9);
        EXPECT_LT(rel(k32.Phi(2, ab, 1, -3, 0, T), k64.Phi(2, ab, 1, -3, 0, T)), 1e-9);
        EXPECT_LT(rel(k32.Psi(3, ab, -1, -1, 2, 0, T), k64.Psi(3, ab, -1, -1, 2, 0, T)), 1e-9);
    }
}

TEST(Kernels, NonPositiveAnchorReportsTime) {
    auto p = sample();
    p.beta1 = -0.5;  // drives the anchor negative; bypasses validation on purpose
    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
    try {
        k.Psi(3, 0.1, -1, 1, 1, 0.0, 5.0);
        FAIL() << "expected domain_error";
    } catch (const std::domain_error& e) {
        EXPECT_NE(std::string(e.what()).find("non-positive anchor at s="), std::string::npos);
    }
}

TEST(GaussianMoments, FormulaAndDegenerateCases) {
    const auto p = sample();
    const ExpansionPoint<double> a(p, p.r0, p.lambda0, 0.0);
    const KernelContext<double> k(p, a);
    const auto zero = k.moments(0.0);
    EXPECT_EQ(zero.C11, 0.0);
    EXPECT_EQ(zero.C22, 0.0);
    EXPECT_EQ(zero.C12, 0.0);
    EXPECT_EQ(zero.m1, 0.0);
    const auto g = k.moments(3.0);
    EXPECT_NEAR(g.m1, p.alpha1 * p.beta1 * psi(p.alpha1, 0.0, 3.0), 1e-16);
    EXPECT_EQ(g.C12, g.C21());
    const auto q = sample(0.0);
    EXPECT_EQ(KernelContext<double>(q, ExpansionPoint<double>(q, q.r0, q.lambda0, 0.0)).moments(3.0).C12, 0.0);
}

TEST(GaussianMoments, PositiveSemidefiniteAtExtremeCorrelation) {
    for (double rho : {-1.0, 1.0}) {
        for (double s1 : {0.01, 0.05, 0.2}) {
            for (double s2 : {0.01, 0.07, 0.3}) {
                for (double r0 : {1e-4, 0.02, 0.1}) {
                    auto p = sample(rho);
                    p.sigma1 = s1;
                    p.sigma2 = s2;
                    p.r0 = r0;
                    const KernelContext<double> k(p, ExpansionPoint<double>(p, p.r0, p.lambda0, 0.0));
                    for (double T : {0.5, 2.0, 6.0}) {
                        const auto g = k.moments(T);
                        EXPECT_GE(g.C11, 0.0);
                        EXPECT_GE(g.C22, 0.0);
                        EXPECT_GE(g.C11 * g.C22 - g.C12 * g.C12, -1e-14 * g.C11 * g.C22);
                    }
                }
            }
        }
    }
}

TEST(BaseTerms, TerminalConditions) {
    const auto p = sample();
    EXPECT_EQ(v0(p, 0.03, 0.02, 2.0, 2.0), 1.0);
    EXPECT_EQ(h0(p, 0.03, 0.02, 2.0, 2.0), 0.02);
}

TEST(BaseTerms, MatchDeterministicDriftDiscount) {
    const auto p = sample();
    for (double T : {0.5, 1.0, 5.0}) {
        const double I = oracle::deterministic_integral(p.alpha1, p.beta1, p.r0, T) +
                         oracle::deterministic_integral(p.alpha2, p.beta2, p.lambda0, T);
        EXPECT_NEAR(v0(p, p.r0, p.lambda0, 0.0, T), std::exp(-I), 1e-12);
        const double lam = p.beta2 + (p.lambda0 - p.beta2) * std::exp(-p.alpha2 * T);
        EXPECT_NEAR(std::exp(-p.alpha2 * T) * h0(p, p.r0, p.lambda0, 0.0, T), std::exp(-I) * lam, 1e-14);
    }
}

TEST(BaseTerms, DecreasingInBothStates) {
    const auto p = sample();
    EXPECT_LT(v0(p, 0.03, 0.01, 0.0, 2.0), v0(p, 0.02, 0.01, 0.0, 2.0));
    EXPECT_LT(v0(p, 0.02, 0.02, 0.0, 2.0), v0(p, 0.02, 0.01, 0.0, 2.0));
}

TEST(ModelParams, ValidationAndDerivedQuantities) {
    auto p = sample(0.5);
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(p.rho_hat(), 0.5 * 0.05 * 0.06869, 1e-17);
    p.sigma_hat1 = 0.01;
    EXPECT_NEAR(p.rho_hat(), 0.5 * 0.01 * 0.06869, 1e-17);
    EXPECT_NEAR(p.alpha_bar(), (0.2 + 0.22724) / 2, 1e-16);
    p.rho = 1.5;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = sample();
    p.lambda0 = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    const auto ld = sample().cast<long double>();
    EXPECT_EQ(double(ld.alpha2), 0.22724);
}
