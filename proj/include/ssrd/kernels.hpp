#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cir.hpp"
#include "numerics.hpp"

namespace ssrd {

/// The nine model parameters plus the optional matched rate volatility.
template <class Real = double>
struct ModelParams {
    Real alpha1 = 0, beta1 = 0, sigma1 = 0, r0 = 0;
    Real alpha2 = 0, beta2 = 0, sigma2 = 0, lambda0 = 0;
    Real rho = 0;
    std::optional<Real> sigma_hat1;

    /// Rate volatility used by the expansion: the matched value when present.
    Real active_sigma1() const { return sigma_hat1.value_or(sigma1); }
    Real rho_hat() const { return rho * active_sigma1() * sigma2; }
    Real alpha_bar() const { return (alpha1 + alpha2) / 2; }

    CirParams<Real> rate_leg() const { return {alpha1, beta1, sigma1, r0}; }
    CirParams<Real> intensity_leg() const { return {alpha2, beta2, sigma2, lambda0}; }

    void validate() const {
        auto fail = [](const char* what) { throw std::invalid_argument(std::string("ModelParams: ") + what); };
        if (!(alpha1 > 0) || !(alpha2 > 0)) fail("mean-reversion speeds must be positive");
        if (!(beta1 >= 0) || !(beta2 >= 0)) fail("long-run levels must be non-negative");
        if (!(sigma1 >= 0) || !(sigma2 >= 0) || !(active_sigma1() >= 0)) fail("volatilities must be non-negative");
        if (!(r0 >= 0)) fail("r0 must be non-negative");
        if (!(lambda0 > 0)) fail("lambda0 must be positive");
        if (!(rho >= -1 && rho <= 1)) fail("rho must lie in [-1, 1]");
    }

    template <class Other>
    ModelParams<Other> cast() const {
        ModelParams<Other> o;
        o.alpha1 = Other(alpha1); o.beta1 = Other(beta1); o.sigma1 = Other(sigma1); o.r0 = Other(r0);
        o.alpha2 = Other(alpha2); o.beta2 = Other(beta2); o.sigma2 = Other(sigma2); o.lambda0 = Other(lambda0);
        o.rho = Other(rho);
        if (sigma_hat1) o.sigma_hat1 = Other(*sigma_hat1);
        return o;
    }
};

/// psi(alpha, t1, t2) = int_{t1}^{t2} e^{alpha s} ds.
template <class Real>
Real psi(Real alpha, Real t1, Real t2) {
    if (t1 > t2) throw std::invalid_argument("psi: t1 > t2");
    const Real L = t2 - t1;
    if (std::abs(alpha) < Real(1e-12)) return L;
    return std::exp(alpha * t1) * L * exp_moment<Real>(0, alpha * L);
}

/// Theta(alpha, beta, t, t2) = int_t^{t2} e^{alpha s} psi(beta, t, s) ds.
template <class Real>
Real theta(Real alpha, Real beta, Real t, Real t2) {
    if (t > t2) throw std::invalid_argument("theta: t > t2");
    const Real L = t2 - t;
    if (L == 0) return 0;
    const Real scale = std::exp((alpha + beta) * t);
    const Real bl = beta * L;
    if (std::abs(bl) >= Real(1e-3)) {
        // closed form; the difference loses at most three digits at this threshold
        return scale * L * (exp_moment<Real>(0, (alpha + beta) * L) - exp_moment<Real>(0, alpha * L)) / beta;
    }
    // series in beta: u I0(beta u) = sum_n beta^n u^{n+1} / (n+1)!
    Real sum = 0, coef = L * L;  // beta^n L^{n+2} / (n+1)!
    for (int n = 0; n < 40; ++n) {
        if (n > 0) coef *= bl / (n + 1);
        const Real term = coef * exp_moment<Real>(n + 1, alpha * L);
        sum += term;
        if (std::abs(term) <= std::numeric_limits<Real>::epsilon() * std::abs(sum)) break;
    }
    return scale * sum;
}

/// Expansion anchor: the zero-volatility path of the transformed states started at t.
template <class Real = double>
struct ExpansionPoint {
    Real x_fixed;
    Real y_fixed;
    Real t;
    Real a1b1, alpha1, a2b2, alpha2;

    static constexpr double floor_value = 1e-10;

    ExpansionPoint(const ModelParams<Real>& p, Real x, Real y, Real t0, std::vector<std::string>* warnings = nullptr)
        : x_fixed(x), y_fixed(y), t(t0), a1b1(p.alpha1 * p.beta1), alpha1(p.alpha1), a2b2(p.alpha2 * p.beta2),
          alpha2(p.alpha2) {
        if (x_fixed < Real(floor_value)) {
            x_fixed = Real(floor_value);
            if (warnings) warnings->push_back("rate anchor floored at 1e-10");
        }
        if (y_fixed < Real(floor_value)) {
            y_fixed = Real(floor_value);
            if (warnings) warnings->push_back("intensity anchor floored at 1e-10");
        }
    }

    Real x(Real s) const { return x_fixed + a1b1 * psi(alpha1, t, s); }
    Real y(Real s) const { return y_fixed + a2b2 * psi(alpha2, t, s); }
};

template <class Real = double>
struct GaussianMoments {
    Real C11 = 0, C22 = 0, C12 = 0;
    Real m1 = 0, m2 = 0;
    Real C21() const { return C12; }
};

/// Covariance entries, mean shifts and the Psi/Phi kernels along one anchor path.
template <class Real = double>
class KernelContext {
public:
    KernelContext(const ModelParams<Real>& p, const ExpansionPoint<Real>& anchor, int nodes = 32)
        : p_(p), a_(anchor), nodes_(nodes), s1_(p.active_sigma1()) {}

    const ExpansionPoint<Real>& anchor() const { return a_; }
    const ModelParams<Real>& params() const { return p_; }
    int nodes() const { return nodes_; }

    Real C11(Real s) const {
        return s1_ * s1_ * (a_.x_fixed * psi(p_.alpha1, a_.t, s) + a_.a1b1 * theta(p_.alpha1, p_.alpha1, a_.t, s));
    }
    Real C22(Real s) const {
        return p_.sigma2 * p_.sigma2 *
               (a_.y_fixed * psi(p_.alpha2, a_.t, s) + a_.a2b2 * theta(p_.alpha2, p_.alpha2, a_.t, s));
    }
    Real C12(Real s) const {
        const Real rh = p_.rho_hat();
        if (rh == 0) return 0;
        return rh * Psi0(p_.alpha_bar(), 1, 1, a_.t, s);
    }

    GaussianMoments<Real> moments(Real T) const {
        if (T < a_.t) throw std::invalid_argument("gaussian_moments: T < t");
        GaussianMoments<Real> g;
        g.C11 = C11(T);
        g.C22 = C22(T);
        g.C12 = C12(T);
        g.m1 = a_.a1b1 * psi(p_.alpha1, a_.t, T);
        g.m2 = a_.a2b2 * psi(p_.alpha2, a_.t, T);
        return g;
    }

    Real Psi0(Real alpha, int i, int j, Real t1, Real t2) const {
        return integrate_kernel(alpha, i, j, t1, t2, [](Real) { return Real(1); });
    }

    /// kind 1, 2, 3 weight the integrand by C11^k, C22^k, C12^k.
    Real Psi(int kind, Real alpha, int i, int j, int k, Real t1, Real t2) const {
        switch (kind) {
            case 0: return Psi0(alpha, i, j, t1, t2);
            case 1: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return ipow(C11(s), k); });
            case 2: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return ipow(C22(s), k); });
            case 3: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return ipow(C12(s), k); });
        }
        throw std::invalid_argument("Psi: kind must be 0..3");
    }

    /// kind 1: C11 C12, kind 2: C22 C12, kind 3: C11 C22.
    Real Phi(int kind, Real alpha, int i, int j, Real t1, Real t2) const {
        switch (kind) {
            case 1: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return C11(s) * C12(s); });
            case 2: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return C22(s) * C12(s); });
            case 3: return integrate_kernel(alpha, i, j, t1, t2, [&](Real s) { return C11(s) * C22(s); });
        }
        throw std::invalid_argument("Phi: kind must be 1..3");
    }

    /// e^{alpha s} xbar^{i/2} ybar^{j/2}; throws when an anchor is non-positive.
    Real weight(Real alpha, int i, int j, Real s) const {
        const Real x = a_.x(s), y = a_.y(s);
        if (!(x > 0) || !(y > 0)) {
            std::ostringstream msg;
            msg << "non-positive anchor at s=" << double(s);
            throw std::domain_error(msg.str());
        }
        return std::exp(alpha * s) * half_power(x, i) * half_power(y, j);
    }

private:
    template <class F>
    Real integrate_kernel(Real alpha, int i, int j, Real t1, Real t2, F&& extra) const {
        if (t1 > t2) throw std::invalid_argument("kernel: t1 > t2");
        return integrate<Real>([&](Real s) { return weight(alpha, i, j, s) * extra(s); }, t1, t2, nodes_);
    }

    static Real ipow(Real v, int k) {
        Real r = 1;
        for (int n = 0; n < k; ++n) r *= v;
        return r;
    }

    static Real half_power(Real v, int i) {
        if (i == 0) return 1;
        if (i % 2 == 0) return i > 0 ? ipow(v, i / 2) : 1 / ipow(v, -i / 2);
        const Real r = std::sqrt(v);
        return i > 0 ? ipow(v, (i - 1) / 2) * r : 1 / (ipow(v, (-i - 1) / 2) * r);
    }

    ModelParams<Real> p_;
    ExpansionPoint<Real> a_;
    int nodes_;
    Real s1_;
};

/// Zeroth-order term: the discount along the drift of both transformed states.
template <class Real>
Real v0(const ModelParams<Real>& p, Real x, Real y, Real t, Real T) {
    const Real e = x * psi(-p.alpha1, t, T) + p.alpha1 * p.beta1 * theta(-p.alpha1, p.alpha1, t, T) +
                   y * psi(-p.alpha2, t, T) + p.alpha2 * p.beta2 * theta(-p.alpha2, p.alpha2, t, T);
    return std::exp(-e);
}

template <class Real>
Real h0(const ModelParams<Real>& p, Real x, Real y, Real t, Real T) {
    return v0(p, x, y, t, T) * (y + p.alpha2 * p.beta2 * psi(p.alpha2, t, T));
}

}  // namespace ssrd
