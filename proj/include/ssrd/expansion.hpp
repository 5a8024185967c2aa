#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "derivative_polynomial.hpp"
#include "kernels.hpp"
#include "market_data.hpp"

namespace ssrd {

struct ExpansionOptions {
    ExpansionScheme scheme = ExpansionScheme::characteristic;
    int nodes = 32;
};

/// Terms v_0..v_N and h_0..h_N; unused orders stay zero.
template <class Real = double>
struct ExpansionTerms {
    int order = 0;
    std::array<Real, 3> v{};
    std::array<Real, 3> h{};
    std::vector<std::string> warnings;

    Real v_sum() const { return v[0] + v[1] + v[2]; }
    Real h_sum() const { return h[0] + h[1] + h[2]; }
};

/// One labelled operator component c * dx^i dy^j.
template <class Real = double>
struct OperatorComponent {
    std::string label;
    int i;
    int j;
    Real coefficient;
};

// ---------------------------------------------------------------------------
// Frozen-multiplier scheme: literal component lists as coefficient algebra
// ---------------------------------------------------------------------------

/// The twelve first-order components over [t1, t2] along the context's anchor path.
template <class Real>
std::vector<OperatorComponent<Real>> first_order_components(const KernelContext<Real>& k, Real t1, Real t2) {
    const auto& p = k.params();
    const Real s1 = p.active_sigma1(), s2 = p.sigma2, rh = p.rho_hat(), ab = p.alpha_bar();
    const Real a1 = p.alpha1, a2 = p.alpha2;
    const Real half = Real(0.5);
    return {
        {"L10_1", 3, 0, half * s1 * s1 * k.Psi(1, a1, 0, 0, 1, t1, t2)},
        {"L10_2", 2, 1, half * s1 * s1 * k.Psi(3, a1, 0, 0, 1, t1, t2)},
        {"L10_3", 2, 1, half * rh * k.Psi(1, ab, -1, 1, 1, t1, t2)},
        {"L10_4", 1, 2, half * rh * k.Psi(3, ab, -1, 1, 1, t1, t2)},
        {"L10_5", 1, 0, -k.Psi(1, -a1, 0, 0, 1, t1, t2)},
        {"L10_6", 0, 1, -k.Psi(3, -a1, 0, 0, 1, t1, t2)},
        {"L01_1", 0, 3, half * s2 * s2 * k.Psi(2, a2, 0, 0, 1, t1, t2)},
        {"L01_2", 1, 2, half * s2 * s2 * k.Psi(3, a2, 0, 0, 1, t1, t2)},
        {"L01_3", 1, 2, half * rh * k.Psi(2, ab, 1, -1, 1, t1, t2)},
        {"L01_4", 2, 1, half * rh * k.Psi(3, ab, 1, -1, 1, t1, t2)},
        {"L01_5", 0, 1, -k.Psi(2, -a2, 0, 0, 1, t1, t2)},
        {"L01_6", 1, 0, -k.Psi(3, -a2, 0, 0, 1, t1, t2)},
    };
}

/// The ten components of the local second-order operator, before the rho_hat prefactors.
template <class Real>
std::vector<OperatorComponent<Real>> second_order_local_components(const KernelContext<Real>& k, Real t1, Real t2) {
    const Real ab = k.params().alpha_bar();
    return {
        {"L20_1", 3, 1, k.Psi(1, ab, -3, 1, 2, t1, t2)},
        {"L20_2", 1, 3, k.Psi(3, ab, -3, 1, 2, t1, t2)},
        {"L20_3", 2, 2, 2 * k.Phi(1, ab, -3, 1, t1, t2)},
        {"L02_1", 1, 3, k.Psi(2, ab, 1, -3, 2, t1, t2)},
        {"L02_2", 3, 1, k.Psi(3, ab, 1, -3, 2, t1, t2)},
        {"L02_3", 2, 2, 2 * k.Phi(2, ab, 1, -3, t1, t2)},
        {"L11_1", 2, 2, k.Phi(3, ab, -1, -1, t1, t2)},
        {"L11_2", 3, 1, k.Phi(1, ab, -1, -1, t1, t2)},
        {"L11_3", 1, 3, k.Phi(2, ab, -1, -1, t1, t2)},
        {"L11_4", 2, 2, k.Psi(3, ab, -1, -1, 2, t1, t2)},
    };
}

template <class Real>
DerivativePolynomial<Real> to_polynomial(const std::vector<OperatorComponent<Real>>& comps, Real scale = 1) {
    DerivativePolynomial<Real> poly;
    for (const auto& c : comps) poly.add(c.i, c.j, scale * c.coefficient);
    return poly;
}

/// Integrand of the first-order operator at time s (its integral over [t1, t2] is apply_L1).
template <class Real>
DerivativePolynomial<Real> first_order_density(const KernelContext<Real>& k, Real s) {
    const auto& p = k.params();
    const Real s1 = p.active_sigma1(), s2 = p.sigma2, rh = p.rho_hat(), ab = p.alpha_bar();
    const Real c11 = k.C11(s), c22 = k.C22(s), c12 = k.C12(s);
    const Real e1 = std::exp(p.alpha1 * s), e2 = std::exp(p.alpha2 * s);
    const Real wxy = rh != 0 ? k.weight(ab, -1, 1, s) : Real(0);
    const Real wyx = rh != 0 ? k.weight(ab, 1, -1, s) : Real(0);
    const Real half = Real(0.5);
    DerivativePolynomial<Real> d;
    d.add(3, 0, half * s1 * s1 * e1 * c11);
    d.add(2, 1, half * s1 * s1 * e1 * c12 + half * rh * wxy * c11 + half * rh * wyx * c12);
    d.add(1, 2, half * rh * wxy * c12 + half * s2 * s2 * e2 * c12 + half * rh * wyx * c22);
    d.add(0, 3, half * s2 * s2 * e2 * c22);
    d.add(1, 0, -c11 / e1 - c12 / e2);
    d.add(0, 1, -c12 / e1 - c22 / e2);
    return d;
}

template <class Real>
DerivativePolynomial<Real> apply_L1(const KernelContext<Real>& k, Real T) {
    if (T < k.anchor().t) throw std::invalid_argument("apply_L1: T < t");
    return to_polynomial(first_order_components(k, k.anchor().t, T));
}

template <class Real>
struct SecondOrderOperator {
    DerivativePolynomial<Real> local;     ///< rho_hat-weighted sum of the ten listed components
    DerivativePolynomial<Real> iterated;  ///< nested time-ordered product of first-order densities
    DerivativePolynomial<Real> total() const { return local + iterated; }
};

template <class Real>
SecondOrderOperator<Real> apply_L2(const KernelContext<Real>& k, Real T) {
    const Real t = k.anchor().t;
    if (T < t) throw std::invalid_argument("apply_L2: T < t");
    SecondOrderOperator<Real> out;
    const Real rh = k.params().rho_hat();
    const auto comps = second_order_local_components(k, t, T);
    for (std::size_t n = 0; n < comps.size(); ++n) {
        const Real pref = n < 3 ? Real(-0.125) : (n < 6 ? Real(-0.125) : Real(0.25));
        out.local.add(comps[n].i, comps[n].j, rh * pref * comps[n].coefficient);
    }
    if (T == t) return out;
    for_each_node<Real>(t, T, k.nodes(), [&](Real s1, Real w1) {
        DerivativePolynomial<Real> inner;
        for_each_node<Real>(s1, T, k.nodes(), [&](Real s2, Real w2) { inner += first_order_density(k, s2).scaled(w2); });
        out.iterated += (first_order_density(k, s1) * inner).scaled(w1);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Characteristic scheme
// ---------------------------------------------------------------------------

namespace detail {

/// Diffusion coefficients a, b, c of the transformed generator as jets around the anchor at s.
template <class Real>
struct DiffusionJets {
    Jet<Real, 2> a, b, c;
};

template <class Real>
DiffusionJets<Real> diffusion_jets(const ModelParams<Real>& p, const ExpansionPoint<Real>& anchor, Real s) {
    DiffusionJets<Real> d;
    const Real s1 = p.active_sigma1();
    const Real X = anchor.x(s), Y = anchor.y(s);
    const Real ea = Real(0.5) * s1 * s1 * std::exp(p.alpha1 * s);
    const Real eb = Real(0.5) * p.sigma2 * p.sigma2 * std::exp(p.alpha2 * s);
    d.a.c[0][0] = ea * X;
    d.a.c[1][0] = ea;
    d.b.c[0][0] = eb * Y;
    d.b.c[0][1] = eb;
    const Real rh = p.rho_hat();
    if (rh != 0) {
        // sqrt(X + xi) sqrt(Y + eta) to second order
        const Real sx = std::sqrt(X), sy = std::sqrt(Y);
        const std::array<Real, 3> gx{sx, sx / (2 * X), -sx / (8 * X * X)};
        const std::array<Real, 3> gy{sy, sy / (2 * Y), -sy / (8 * Y * Y)};
        const Real ec = rh * std::exp(p.alpha_bar() * s);
        for (int i = 0; i <= 2; ++i)
            for (int j = 0; i + j <= 2; ++j) d.c.c[i][j] = ec * gx[i] * gy[j];
    }
    return d;
}

/// (a dxx + b dyy + c dxy)(base f) / base with dx base = m1 base, dy base = m2 base.
template <class Real>
Jet<Real, 2> apply_diffusion(const DiffusionJets<Real>& d, Real m1, Real m2, const Jet<Real, 2>& f) {
    const Jet<Real, 2> fx = f.dx(), fy = f.dy();
    const Jet<Real, 2> fxx = fx.dx(), fyy = fy.dy(), fxy = fx.dy();
    Jet<Real, 2> out = d.a * (f * (m1 * m1) + fx * (2 * m1) + fxx);
    out += d.b * (f * (m2 * m2) + fy * (2 * m2) + fyy);
    out += d.c * (f * (m1 * m2) + fy * m1 + fx * m2 + fxy);
    return out;
}

/// Value-only version of apply_diffusion.
template <class Real>
Real apply_diffusion_value(const DiffusionJets<Real>& d, Real m1, Real m2, const Jet<Real, 2>& f) {
    const Real v = f.c[0][0], vx = f.c[1][0], vy = f.c[0][1];
    const Real vxx = 2 * f.c[2][0], vyy = 2 * f.c[0][2], vxy = f.c[1][1];
    return d.a.c[0][0] * (m1 * m1 * v + 2 * m1 * vx + vxx) + d.b.c[0][0] * (m2 * m2 * v + 2 * m2 * vy + vyy) +
           d.c.c[0][0] * (m1 * m2 * v + m1 * vy + m2 * vx + vxy);
}

/// Corrections F_1, F_2 (v-target when h_target is false, else H_1, H_2) for maturity T.
template <class Real>
std::array<Real, 2> characteristic_corrections(const ModelParams<Real>& p, const ExpansionPoint<Real>& anchor, Real T,
                                               int order, bool h_target, int nodes) {
    std::array<Real, 2> out{0, 0};
    const Real t = anchor.t;
    if (order < 1 || T <= t) return out;
    Jet<Real, 2> f0 = Jet<Real, 2>::constant(h_target ? anchor.y(T) : Real(1));
    if (h_target) f0.c[0][1] = 1;
    auto multipliers = [&](Real s) {
        return std::pair<Real, Real>{-psi(-p.alpha1, s, T), -psi(-p.alpha2, s, T)};
    };
    for_each_node<Real>(t, T, nodes, [&](Real s1, Real w1) {
        const auto d1 = diffusion_jets(p, anchor, s1);
        const auto [m1, m2] = multipliers(s1);
        out[0] += w1 * apply_diffusion_value(d1, m1, m2, f0);
        if (order >= 2) {
            Jet<Real, 2> inner;
            for_each_node<Real>(s1, T, nodes, [&](Real s2, Real w2) {
                const auto d2 = diffusion_jets(p, anchor, s2);
                const auto [n1, n2] = multipliers(s2);
                inner += apply_diffusion(d2, n1, n2, f0) * w2;
            });
            out[1] += w1 * apply_diffusion_value(d1, m1, m2, inner);
        }
    });
    return out;
}

}  // namespace detail

/// Expansion terms at (t, x, y) in transformed coordinates for maturity T.
template <class Real>
ExpansionTerms<Real> expansion_terms(const ModelParams<Real>& p, Real x, Real y, Real t, Real T, int order,
                                     const ExpansionOptions& opt = {}) {
    if (order < 0 || order > 2) throw std::invalid_argument("expansion order must be 0, 1 or 2");
    if (T < t) throw std::invalid_argument("expansion: T < t");
    ExpansionTerms<Real> r;
    r.order = order;
    const ExpansionPoint<Real> anchor(p, x, y, t, &r.warnings);
    const Real base = v0(p, x, y, t, T);
    const Real yT = y + p.alpha2 * p.beta2 * psi(p.alpha2, t, T);
    r.v[0] = base;
    r.h[0] = base * yT;
    if (order == 0 || T == t) return r;

    if (opt.scheme == ExpansionScheme::characteristic) {
        const auto fv = detail::characteristic_corrections(p, anchor, T, order, false, opt.nodes);
        const auto fh = detail::characteristic_corrections(p, anchor, T, order, true, opt.nodes);
        for (int n = 1; n <= order; ++n) {
            r.v[n] = base * fv[n - 1];
            r.h[n] = base * fh[n - 1];
        }
        return r;
    }

    const KernelContext<Real> k(p, anchor, opt.nodes);
    const Real m1 = -psi(-p.alpha1, t, T), m2 = -psi(-p.alpha2, t, T);
    const auto L1 = apply_L1(k, T);
    r.v[1] = base * L1.evaluate(m1, m2);
    r.h[1] = base * L1.evaluate_linear_y(m1, m2, yT);
    if (order >= 2) {
        const auto L2 = apply_L2(k, T).total();
        r.v[2] = base * L2.evaluate(m1, m2);
        r.h[2] = base * L2.evaluate_linear_y(m1, m2, yT);
    }
    return r;
}

/// Expansion at t = 0, x = r0, y = lambda0.
template <class Real>
ExpansionTerms<Real> expansion_terms(const ModelParams<Real>& p, Real T, int order, const ExpansionOptions& opt = {}) {
    if (T < 0) throw std::invalid_argument("expansion: negative maturity");
    return expansion_terms(p, p.r0, p.lambda0, Real(0), T, order, opt);
}

/// Approximates E[exp(-int_0^T (r + lambda))].
template <class Real>
Real v_expansion(const ModelParams<Real>& p, Real T, int order, const ExpansionOptions& opt = {}) {
    return expansion_terms(p, T, order, opt).v_sum();
}

/// Approximates e^{alpha2 T} E[exp(-int_0^T (r + lambda)) lambda_T].
template <class Real>
Real h_expansion(const ModelParams<Real>& p, Real T, int order, const ExpansionOptions& opt = {}) {
    return expansion_terms(p, T, order, opt).h_sum();
}

// ---------------------------------------------------------------------------
// One-factor approximations
// ---------------------------------------------------------------------------

/// base * (1 + sigma^2 c2 + sigma^4 c4); c2 and c4 do not depend on sigma.
template <class Real = double>
struct OneFactorExpansion {
    Real base = 1;
    Real c2 = 0;
    Real c4 = 0;

    Real value(Real sigma) const {
        const Real s2 = sigma * sigma;
        return base * (1 + s2 * c2 + s2 * s2 * c4);
    }
};

/// Expansion of E[exp(-int_t^T e^{-alpha s} z_s ds) | z_t = z] for the transformed state of one leg.
template <class Real>
OneFactorExpansion<Real> one_factor_expansion(const CirParams<Real>& leg, Real t, Real T, const ExpansionOptions& opt = {}) {
    if (T < t) throw std::invalid_argument("one_factor_expansion: T < t");
    const Real a = leg.alpha, ab = leg.alpha * leg.beta, z = leg.x0;
    OneFactorExpansion<Real> e;
    e.base = std::exp(-z * psi(-a, t, T) - ab * theta(-a, a, t, T));
    if (T == t) return e;
    auto anchor = [&](Real s) { return z + ab * psi(a, t, s); };
    const int n = opt.nodes;
    if (opt.scheme == ExpansionScheme::frozen_multiplier) {
        auto var = [&](Real s) { return z * psi(a, t, s) + ab * theta(a, a, t, s); };
        const Real q = psi(-a, t, T);
        e.c2 = q * integrate<Real>([&](Real s) { return std::exp(-a * s) * var(s); }, t, T, n);
        e.c4 = q * q * q * integrate<Real>([&](Real s) { return std::exp(a * s) * var(s); }, t, T, n);
        return e;
    }
    // diffusion coefficient per unit sigma^2: (1/2) e^{a s} (anchor + offset)
    auto first = [&](Real s1) {
        // value and offset-slope of the first correction started at s1
        Real g = 0, gx = 0;
        for_each_node<Real>(s1, T, n, [&](Real s2, Real w2) {
            const Real m = psi(-a, s2, T);
            const Real k = Real(0.5) * std::exp(a * s2) * m * m;
            g += w2 * k * anchor(s2);
            gx += w2 * k;
        });
        return std::pair<Real, Real>{g, gx};
    };
    for_each_node<Real>(t, T, n, [&](Real s1, Real w1) {
        const Real m = psi(-a, s1, T);
        const Real k = Real(0.5) * std::exp(a * s1) * anchor(s1);
        e.c2 += w1 * k * m * m;
        const auto [g, gx] = first(s1);
        e.c4 += w1 * k * (m * m * g - 2 * m * gx);
    });
    return e;
}

template <class Real>
Real survival_approx(const CirParams<Real>& intensity, Real t, Real T, const ExpansionOptions& opt = {}) {
    return one_factor_expansion(intensity, t, T, opt).value(intensity.sigma);
}

/// Same expansion for the rate leg; pass the active (possibly matched) volatility in rate.sigma.
template <class Real>
Real zcb_approx(const CirParams<Real>& rate, Real t, Real T, const ExpansionOptions& opt = {}) {
    return one_factor_expansion(rate, t, T, opt).value(rate.sigma);
}

}  // namespace ssrd
