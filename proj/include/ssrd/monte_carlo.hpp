#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "kernels.hpp"

namespace ssrd {

struct McConfig {
    long paths = 200000;
    double step = 0.01;
    std::uint64_t seed = 20240408;
    bool antithetic = true;
    int threads = 0;  ///< 0: hardware concurrency
};

enum class McTarget { v, h, Q };

struct McEstimate {
    double estimate = 0;
    double standard_error = 0;
    long samples = 0;  ///< independent samples behind the standard error (pairs when antithetic)
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Welford accumulator; merging keeps identical samples at exactly zero variance.
struct BlockSums {
    double mean = 0;
    double m2 = 0;
    long count = 0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / double(count);
        m2 += d * (x - mean);
    }
    void merge(const BlockSums& o) {
        if (o.count == 0) return;
        const long n = count + o.count;
        const double d = o.mean - mean;
        mean += d * double(o.count) / double(n);
        m2 += o.m2 + d * d * double(count) * double(o.count) / double(n);
        count = n;
    }
};

struct PathPayoff {
    double v, h, q;
};

/// Per-step decay factors of the exact mean reversion.
struct StepFactors {
    double dt, sq, d1, d2;
    StepFactors(const ModelParams<double>& p, double step)
        : dt(step), sq(std::sqrt(step)), d1(-std::expm1(-p.alpha1 * step)), d2(-std::expm1(-p.alpha2 * step)) {}
};

/// Payoffs of one path driven by the given standard normals (two per step). The drift toward
/// the long-run level uses the exact decay factor over the step; the diffusion is Euler.
/// Positive parts enter drift, diffusion and the trapezoid integrals.
inline PathPayoff simulate_payoff(const ModelParams<double>& p, const StepFactors& f, int steps, const double* z,
                                  double sign) {
    const double rho = p.rho, rc = std::sqrt(std::max(0.0, 1 - rho * rho));
    double r = p.r0, l = p.lambda0;
    double int_r = 0, int_l = 0;
    for (int n = 0; n < steps; ++n) {
        const double z1 = sign * z[2 * n], z2 = sign * (rho * z[2 * n] + rc * z[2 * n + 1]);
        const double rp = std::max(r, 0.0), lp = std::max(l, 0.0);
        r += (p.beta1 - rp) * f.d1 + p.sigma1 * std::sqrt(rp) * f.sq * z1;
        l += (p.beta2 - lp) * f.d2 + p.sigma2 * std::sqrt(lp) * f.sq * z2;
        int_r += 0.5 * f.dt * (rp + std::max(r, 0.0));
        int_l += 0.5 * f.dt * (lp + std::max(l, 0.0));
    }
    const double disc = std::exp(-int_r - int_l);
    return {disc, disc * std::max(l, 0.0), std::exp(-int_l)};
}

}  // namespace detail

/// Effective (truncated) states of one path; used to inspect the discretisation.
inline std::vector<std::pair<double, double>> simulate_path(const ModelParams<double>& p, double T, double step,
                                                            std::uint64_t seed) {
    const int steps = std::max(1, static_cast<int>(std::ceil(T / step - 1e-9)));
    const double dt = T / steps;
    std::mt19937_64 rng(detail::splitmix64(seed));
    std::normal_distribution<double> normal;
    const double rc = std::sqrt(std::max(0.0, 1 - p.rho * p.rho));
    const detail::StepFactors f(p, dt);
    std::vector<std::pair<double, double>> out{{p.r0, p.lambda0}};
    double r = p.r0, l = p.lambda0;
    for (int n = 0; n < steps; ++n) {
        const double g1 = normal(rng), g2 = p.rho * g1 + rc * normal(rng);
        const double rp = std::max(r, 0.0), lp = std::max(l, 0.0);
        r += (p.beta1 - rp) * f.d1 + p.sigma1 * std::sqrt(rp) * f.sq * g1;
        l += (p.beta2 - lp) * f.d2 + p.sigma2 * std::sqrt(lp) * f.sq * g2;
        out.emplace_back(std::max(r, 0.0), std::max(l, 0.0));
    }
    return out;
}

struct McEstimates {
    McEstimate v, h, Q;
    const McEstimate& operator[](McTarget t) const { return t == McTarget::v ? v : (t == McTarget::h ? h : Q); }
};

/// Estimates of E[e^{-int (r + lambda)}] (v), E[e^{-int (r + lambda)} lambda_T] (h) and
/// E[e^{-int lambda}] (Q) from one set of paths. Paths are split into fixed blocks whose seeds
/// derive from the block index, so results do not depend on the thread count.
inline McEstimates mc_estimate_all(const ModelParams<double>& p, double T, const McConfig& cfg = {}) {
    if (cfg.paths < 1) throw std::invalid_argument("mc_estimate: path count must be positive");
    if (!(T > 0)) throw std::invalid_argument("mc_estimate: T must be positive");
    if (!(cfg.step > 0)) throw std::invalid_argument("mc_estimate: step must be positive");
    const int steps = std::max(1, static_cast<int>(std::ceil(T / cfg.step - 1e-9)));
    const detail::StepFactors factors(p, T / steps);
    // one sample is a single path, or an antithetic pair averaged
    const long samples = cfg.antithetic ? std::max(1L, cfg.paths / 2) : cfg.paths;
    constexpr long block = 4096;
    const long blocks = (samples + block - 1) / block;
    std::vector<std::array<detail::BlockSums, 3>> sums(static_cast<std::size_t>(blocks));

    auto run_block = [&](long b) {
        std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(static_cast<std::uint64_t>(b))));
        std::normal_distribution<double> normal;
        std::vector<double> z(2 * static_cast<std::size_t>(steps));
        auto& s = sums[static_cast<std::size_t>(b)];
        const long n = std::min(block, samples - b * block);
        for (long k = 0; k < n; ++k) {
            for (auto& v : z) v = normal(rng);
            auto x = detail::simulate_payoff(p, factors, steps, z.data(), 1.0);
            if (cfg.antithetic) {
                const auto y = detail::simulate_payoff(p, factors, steps, z.data(), -1.0);
                x = {0.5 * (x.v + y.v), 0.5 * (x.h + y.h), 0.5 * (x.q + y.q)};
            }
            s[0].add(x.v);
            s[1].add(x.h);
            s[2].add(x.q);
        }
    };

    int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, static_cast<int>(std::max(1L, blocks)));
    if (threads == 1) {
        for (long b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (long b = t; b < blocks; b += threads) run_block(b);
            });
        for (auto& th : pool) th.join();
    }
    std::array<detail::BlockSums, 3> total;
    for (const auto& s : sums)
        for (int i = 0; i < 3; ++i) total[i].merge(s[i]);
    auto finish = [](const detail::BlockSums& t) {
        McEstimate e;
        e.samples = t.count;
        e.estimate = t.mean;
        const double var = t.count > 1 ? t.m2 / double(t.count - 1) : 0.0;
        e.standard_error = std::sqrt(var / double(t.count));
        return e;
    };
    return {finish(total[0]), finish(total[1]), finish(total[2])};
}

inline McEstimate mc_estimate(const ModelParams<double>& p, double T, McTarget target, const McConfig& cfg = {}) {
    return mc_estimate_all(p, T, cfg)[target];
}

}  // namespace ssrd
