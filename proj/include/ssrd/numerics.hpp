#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace ssrd {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
template <class Real>
struct GaussLegendreRule {
    std::vector<Real> nodes;
    std::vector<Real> weights;
};

namespace detail {

template <class Real>
GaussLegendreRule<Real> compute_gauss_legendre(int n) {
    GaussLegendreRule<Real> rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const Real pi = std::numbers::pi_v<Real>;
    const Real eps = std::numeric_limits<Real>::epsilon();
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        Real z = std::cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
        Real dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Real p0 = 1, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const Real pk = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1) p0 = 1;
            dp = n * (z * p1 - p0) / (z * z - 1);
            const Real dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) <= 4 * eps) break;
        }
        // recompute the derivative at the converged root
        Real p0 = 1, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const Real pk = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        if (n == 1) p0 = 1;
        dp = n * (z * p1 - p0) / (z * z - 1);
        const Real w = 2 / ((1 - z * z) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -z;
        rule.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0;
    return rule;
}

}  // namespace detail

/// Cached Gauss-Legendre rule. References stay valid for the program lifetime.
template <class Real = double>
const GaussLegendreRule<Real>& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: node count must be positive");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule<Real>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::compute_gauss_legendre<Real>(n)).first;
    return it->second;
}

/// n-point Gauss-Legendre approximation of the integral of f over [a, b].
template <class Real, class F>
Real integrate(F&& f, Real a, Real b, int n) {
    if (b == a) return Real(0);
    const auto& rule = gauss_legendre<Real>(n);
    const Real mid = (a + b) / 2;
    const Real half = (b - a) / 2;
    Real sum = 0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    return half * sum;
}

/// Calls visit(node, weight) for every point of the mapped rule on [a, b].
template <class Real, class Visit>
void for_each_node(Real a, Real b, int n, Visit&& visit) {
    const auto& rule = gauss_legendre<Real>(n);
    const Real mid = (a + b) / 2;
    const Real half = (b - a) / 2;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) visit(mid + half * rule.nodes[k], half * rule.weights[k]);
}

/// Integral over [0, 1] of v^m e^{z v} dv, accurate for small |z|.
template <class Real>
Real exp_moment(int m, Real z) {
    if (std::abs(z) < Real(1)) {
        Real term = 1;  // z^k / k!
        Real sum = Real(1) / (m + 1);
        for (int k = 1; k < 200; ++k) {
            term *= z / k;
            const Real add = term / (m + k + 1);
            sum += add;
            if (std::abs(add) <= std::numeric_limits<Real>::epsilon() * std::abs(sum)) break;
        }
        return sum;
    }
    Real value = std::expm1(z) / z;
    const Real ez = std::exp(z);
    for (int k = 1; k <= m; ++k) value = (ez - k * value) / z;
    return value;
}

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace ssrd
