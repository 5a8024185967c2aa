#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssrd {

struct CalibrationResult {
    std::vector<std::string> names;
    std::vector<double> parameters;
    double objective = 0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> residuals;
    double seconds = 0;
    std::vector<std::string> warnings;
};

struct NelderMeadOptions {
    double x_tol = 1e-8;         ///< simplex diameter (internal coordinates)
    double f_tol = 1e-12;        ///< objective spread across vertices
    int max_iterations = 20000;
    double initial_step = 0.25;  ///< internal-coordinate offset of the starting simplex
    int restarts = 3;            ///< fresh simplices built around the best point after convergence
};

enum class Bound { none, positive, symmetric_unit };

/// Smooth maps between the optimizer's unconstrained coordinates and parameter space:
/// exp for positive parameters, tanh for [-1, 1].
struct BoundsTransform {
    std::vector<Bound> kinds;

    std::vector<double> to_internal(const std::vector<double>& x) const {
        std::vector<double> u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            switch (kind(i)) {
                case Bound::none: u[i] = x[i]; break;
                case Bound::positive:
                    if (!(x[i] > 0)) throw std::invalid_argument("bounded start must be positive");
                    u[i] = std::log(x[i]);
                    break;
                case Bound::symmetric_unit:
                    u[i] = std::atanh(std::clamp(x[i], -1 + 1e-12, 1 - 1e-12));
                    break;
            }
        }
        return u;
    }

    std::vector<double> to_external(const std::vector<double>& u) const {
        std::vector<double> x(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            switch (kind(i)) {
                case Bound::none: x[i] = u[i]; break;
                case Bound::positive: x[i] = std::exp(u[i]); break;
                case Bound::symmetric_unit: x[i] = std::tanh(u[i]); break;
            }
        }
        return x;
    }

private:
    Bound kind(std::size_t i) const { return i < kinds.size() ? kinds[i] : Bound::none; }
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

struct SimplexRun {
    std::vector<double> best;
    double value;
    int iterations;
    int evaluations;
    bool converged;
};

inline SimplexRun run_simplex(const Objective& f, const std::vector<double>& start, double f_start,
                              const NelderMeadOptions& opt, int iteration_budget) {
    constexpr double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;
    const std::size_t n = start.size();
    auto eval = [&](const std::vector<double>& x) {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> vals(n + 1, f_start);
    int evaluations = 0;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i + 1][i] += opt.initial_step;
        vals[i + 1] = eval(pts[i + 1]);
        ++evaluations;
    }
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    int it = 0;
    bool converged = false;
    for (; it < iteration_budget; ++it) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        const std::size_t ib = order[0], iw = order[n], isw = order[n - 1];
        double diameter = 0;
        for (std::size_t k = 0; k <= n; ++k)
            for (std::size_t d = 0; d < n; ++d) diameter = std::max(diameter, std::abs(pts[k][d] - pts[ib][d]));
        if (diameter < opt.x_tol || vals[iw] - vals[ib] < opt.f_tol) {
            converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k <= n; ++k)
            if (k != iw)
                for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[k][d] / double(n);
        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + reflect * (centroid[d] - pts[iw][d]);
        const double fr = eval(xr);
        ++evaluations;
        if (fr < vals[ib]) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + expand * (xr[d] - centroid[d]);
            const double fe = eval(xe);
            ++evaluations;
            if (fe < fr) { pts[iw] = xe; vals[iw] = fe; }
            else { pts[iw] = xr; vals[iw] = fr; }
            continue;
        }
        if (fr < vals[isw]) {
            pts[iw] = xr;
            vals[iw] = fr;
            continue;
        }
        const bool outside = fr < vals[iw];
        for (std::size_t d = 0; d < n; ++d)
            xc[d] = outside ? centroid[d] + contract * (xr[d] - centroid[d])
                            : centroid[d] + contract * (pts[iw][d] - centroid[d]);
        const double fc = eval(xc);
        ++evaluations;
        if ((outside && fc <= fr) || (!outside && fc < vals[iw])) {
            pts[iw] = xc;
            vals[iw] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == ib) continue;
            for (std::size_t d = 0; d < n; ++d) pts[k][d] = pts[ib][d] + shrink * (pts[k][d] - pts[ib][d]);
            vals[k] = eval(pts[k]);
            ++evaluations;
        }
    }
    const auto ib = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    return {pts[ib], vals[ib], it, evaluations, converged};
}

}  // namespace detail

/// Nelder-Mead simplex with reflection 1, expansion 2, contraction 0.5, shrink 0.5.
/// The objective receives parameters in external coordinates.
inline CalibrationResult nelder_mead(const Objective& objective, const std::vector<double>& initial,
                                     const BoundsTransform& bounds = {}, const NelderMeadOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (initial.empty()) throw std::invalid_argument("nelder_mead: empty start");
    const Objective internal = [&](const std::vector<double>& u) { return objective(bounds.to_external(u)); };
    std::vector<double> u = bounds.to_internal(initial);
    double fu = internal(u);
    if (!std::isfinite(fu)) throw std::invalid_argument("nelder_mead: objective not finite at the initial point");
    CalibrationResult r;
    r.evaluations = 1;
    int budget = opt.max_iterations;
    bool converged = false;
    for (int round = 0; round <= opt.restarts && budget > 0; ++round) {
        const auto run = detail::run_simplex(internal, u, fu, opt, budget);
        budget -= run.iterations;
        r.iterations += run.iterations;
        r.evaluations += run.evaluations;
        const double improvement = fu - run.value;
        const bool moved = run.value < fu;
        if (moved) {
            u = run.best;
            fu = run.value;
        }
        converged = run.converged;
        if (!run.converged) break;
        if (round > 0 && (!moved || improvement < opt.f_tol)) break;
    }
    r.parameters = bounds.to_external(u);
    r.objective = fu;
    r.converged = converged;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace ssrd
