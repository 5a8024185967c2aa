#pragma once

// Reference computations for the tests. Nothing here calls the library's numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6 * (fa + 4 * flm + fm);
    const double right = (b - m) / 6 * (fm + 4 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15 * tol) return left + right + diff / 15;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

/// Adaptive Simpson quadrature with Richardson correction; rel_tol is relative to the integral's scale.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-13,
                               int depth = 22) {
    if (a == b) return 0;
    double scale = 0;
    const int n = 16;
    for (int i = 0; i <= n; ++i) scale += std::abs(f(a + (b - a) * i / n));
    scale *= std::abs(b - a) / (n + 1);
    const double tol = std::max(rel_tol * scale, 1e-300);
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < panels; ++i) s += f(a + i * h);
    return s * h;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

/// Textbook CIR bond price A exp(-B x) for maturity tau.
inline double cir_bond(double alpha, double beta, double sigma, double x, double tau) {
    if (sigma == 0) {
        const double integral = beta * tau + (x - beta) * (1 - std::exp(-alpha * tau)) / alpha;
        return std::exp(-integral);
    }
    const double h = std::sqrt(alpha * alpha + 2 * sigma * sigma);
    const double e = std::exp(h * tau);
    const double den = 2 * h + (alpha + h) * (e - 1);
    const double A = std::pow(2 * h * std::exp((alpha + h) * tau / 2) / den, 2 * alpha * beta / (sigma * sigma));
    const double B = 2 * (e - 1) / den;
    return A * std::exp(-B * x);
}

/// -d/dtau of the bond price by a fourth-order central difference.
inline double cir_density(double alpha, double beta, double sigma, double x, double tau) {
    const double h = 1e-4 * std::max(tau, 1e-2);
    auto P = [&](double t) { return cir_bond(alpha, beta, sigma, x, t); };
    return -(-P(tau + 2 * h) + 8 * P(tau + h) - 8 * P(tau - h) + P(tau - 2 * h)) / (12 * h);
}

/// Integral of the zero-volatility CIR path started at x over [0, tau].
inline double deterministic_integral(double alpha, double beta, double x, double tau) {
    return beta * tau + (x - beta) * (1 - std::exp(-alpha * tau)) / alpha;
}

struct Leg {
    double alpha, beta, sigma, x0;
};

/// Spread of a CDS under independent CIR rate and intensity, from exact survival and bond prices.
/// `times` are the coupon times t_1 < ... < t_M.
inline double independent_spread(const Leg& r, const Leg& l, const std::vector<double>& times, double recovery) {
    auto P = [&](double s) { return cir_bond(r.alpha, r.beta, r.sigma, r.x0, s); };
    auto Q = [&](double s) { return cir_bond(l.alpha, l.beta, l.sigma, l.x0, s); };
    auto density = [&](double s) { return cir_density(l.alpha, l.beta, l.sigma, l.x0, s); };
    double protection = 0, annuity = 0, prev = 0;
    for (double t : times) {
        const double a = prev;
        protection += adaptive_simpson([&](double s) { return P(s) * density(s); }, a, t, 1e-10, 14);
        annuity += adaptive_simpson([&](double s) { return P(s) * density(s) * (s - a); }, a, t, 1e-10, 14);
        annuity += (t - a) * P(t) * Q(t);
        prev = t;
    }
    return (1 - recovery) * protection / annuity;
}

/// Least-squares slope of log|err| against log T.
inline double loglog_slope(const std::vector<double>& T, const std::vector<double>& err) {
    const std::size_t n = T.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(T[i]), y = std::log(std::abs(err[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
