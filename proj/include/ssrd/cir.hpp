#pragma once

#include <cmath>
#include <stdexcept>

namespace ssrd {

/// Square-root diffusion dX = alpha (beta - X) dt + sigma sqrt(X) dW.
template <class Real = double>
struct CirParams {
    Real alpha;
    Real beta;
    Real sigma;
    Real x0;
};

/// Bond coefficients: value = A exp(-B state).
template <class Real = double>
struct CirBondCoefficients {
    Real A;
    Real B;
    Real h;
    Real log_A;
};

template <class Real>
Real feller_margin(const CirParams<Real>& p) {
    return 2 * p.alpha * p.beta - p.sigma * p.sigma;
}

template <class Real>
CirBondCoefficients<Real> cir_bond_coefficients(const CirParams<Real>& p, Real t, Real T) {
    if (t > T) throw std::invalid_argument("cir_bond: t > T");
    if (!(p.alpha > 0) || !(p.sigma > 0) || !(p.beta > 0)) throw std::invalid_argument("cir_bond: non-positive parameters");
    const Real tau = T - t;
    const Real s2 = p.sigma * p.sigma;
    const Real h = std::sqrt(p.alpha * p.alpha + 2 * s2);
    const Real em1 = std::expm1(h * tau);
    const Real B = 2 * em1 / (2 * h + (p.alpha + h) * em1);
    // log A written so that every term is O(sigma^2) before the 1/sigma^2 scaling
    const Real g = s2 * (-std::expm1(-h * tau)) / (h * (h + p.alpha));
    const Real log_A = -2 * p.alpha * p.beta * tau / (h + p.alpha) - (2 * p.alpha * p.beta / s2) * std::log1p(-g);
    return {std::exp(log_A), B, h, log_A};
}

/// E[exp(-int_t^T X_s ds) | X_t = state].
template <class Real>
Real cir_bond(const CirParams<Real>& p, Real t, Real T, Real state) {
    const auto c = cir_bond_coefficients(p, t, T);
    return std::exp(c.log_A - c.B * state);
}

template <class Real>
Real cir_bond(const CirParams<Real>& p, Real t, Real T) {
    return cir_bond(p, t, T, p.x0);
}

/// Analytic d/dT of cir_bond, using the Riccati relations B' = 1 - alpha B - sigma^2 B^2 / 2
/// and (log A)' = -alpha beta B.
template <class Real>
Real cir_bond_dT(const CirParams<Real>& p, Real t, Real T, Real state) {
    const auto c = cir_bond_coefficients(p, t, T);
    const Real dB = 1 - p.alpha * c.B - p.sigma * p.sigma * c.B * c.B / 2;
    const Real dlogA = -p.alpha * p.beta * c.B;
    return std::exp(c.log_A - c.B * state) * (dlogA - dB * state);
}

/// Discount along the zero-volatility path: exp(-(beta tau + (x0 - beta)(1 - e^{-alpha tau})/alpha)).
template <class Real>
Real deterministic_discount(const CirParams<Real>& p, Real tau) {
    const Real integral = p.beta * tau - (p.x0 - p.beta) * std::expm1(-p.alpha * tau) / p.alpha;
    return std::exp(-integral);
}

}  // namespace ssrd
