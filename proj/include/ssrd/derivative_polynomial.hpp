#pragma once

#include <array>
#include <cmath>
#include <map>
#include <utility>

#include "numerics.hpp"

namespace ssrd {

/// Truncated bivariate Taylor polynomial sum c[i][j] xi^i eta^j with i + j <= D.
template <class Real, int D = 2>
struct Jet {
    std::array<std::array<Real, D + 1>, D + 1> c{};

    static Jet constant(Real v) {
        Jet j;
        j.c[0][0] = v;
        return j;
    }

    Real value() const { return c[0][0]; }

    Jet dx() const {
        Jet r;
        for (int i = 0; i < D; ++i)
            for (int j = 0; i + 1 + j <= D; ++j) r.c[i][j] = Real(i + 1) * c[i + 1][j];
        return r;
    }
    Jet dy() const {
        Jet r;
        for (int i = 0; i <= D; ++i)
            for (int j = 0; i + j + 1 <= D; ++j) r.c[i][j] = Real(j + 1) * c[i][j + 1];
        return r;
    }

    Jet& operator+=(const Jet& o) {
        for (int i = 0; i <= D; ++i)
            for (int j = 0; i + j <= D; ++j) c[i][j] += o.c[i][j];
        return *this;
    }
    Jet& operator*=(Real s) {
        for (int i = 0; i <= D; ++i)
            for (int j = 0; i + j <= D; ++j) c[i][j] *= s;
        return *this;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator*(Jet a, Real s) { return a *= s; }
    friend Jet operator*(Real s, Jet a) { return a *= s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r;
        for (int i1 = 0; i1 <= D; ++i1)
            for (int j1 = 0; i1 + j1 <= D; ++j1) {
                const Real av = a.c[i1][j1];
                if (av == 0) continue;
                for (int i2 = 0; i1 + i2 <= D; ++i2)
                    for (int j2 = 0; i1 + j1 + i2 + j2 <= D; ++j2) r.c[i1 + i2][j1 + j2] += av * b.c[i2][j2];
            }
        return r;
    }

    /// Partial derivative d^k/dxi^k d^l/deta^l evaluated at the origin.
    Real derivative_at_origin(int k, int l) const {
        if (k + l > D) return 0;
        Real f = 1;
        for (int n = 2; n <= k; ++n) f *= n;
        for (int n = 2; n <= l; ++n) f *= n;
        return f * c[k][l];
    }
};

/// Sparse polynomial in (dx, dy): terms[(i, j)] multiplies dx^i dy^j.
template <class Coef>
class DerivativePolynomial {
public:
    using Key = std::pair<int, int>;

    void add(int i, int j, const Coef& c) {
        auto it = terms_.find({i, j});
        if (it == terms_.end()) terms_.emplace(Key{i, j}, c);
        else it->second = it->second + c;
    }

    const std::map<Key, Coef>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    Coef coefficient(int i, int j) const {
        auto it = terms_.find({i, j});
        return it == terms_.end() ? Coef{} : it->second;
    }

    int max_order() const {
        int m = 0;
        for (const auto& [k, c] : terms_) m = std::max(m, k.first + k.second);
        return m;
    }

    DerivativePolynomial& operator+=(const DerivativePolynomial& o) {
        for (const auto& [k, c] : o.terms_) add(k.first, k.second, c);
        return *this;
    }
    friend DerivativePolynomial operator+(DerivativePolynomial a, const DerivativePolynomial& b) { return a += b; }

    template <class S>
    DerivativePolynomial scaled(const S& s) const {
        DerivativePolynomial r;
        for (const auto& [k, c] : terms_) r.terms_.emplace(k, c * s);
        return r;
    }

    /// Composition of operators with position-independent coefficients.
    friend DerivativePolynomial operator*(const DerivativePolynomial& a, const DerivativePolynomial& b) {
        DerivativePolynomial r;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) r.add(ka.first + kb.first, ka.second + kb.second, ca * cb);
        return r;
    }

    /// Product-rule companion: c dx^i dy^j becomes j c dx^i dy^{j-1}; terms with j = 0 drop out.
    DerivativePolynomial y_shifted() const {
        DerivativePolynomial r;
        for (const auto& [k, c] : terms_)
            if (k.second > 0) r.add(k.first, k.second - 1, c * static_cast<double>(k.second));
        return r;
    }

    /// Value of the operator applied to an exponential-affine base, divided by the base:
    /// every dx is replaced by m1 and every dy by m2.
    template <class Real>
    Real evaluate(Real m1, Real m2) const {
        Real sum = 0;
        for (const auto& [k, c] : terms_) sum += Real(c) * ipow(m1, k.first) * ipow(m2, k.second);
        return sum;
    }

    /// Value of the operator applied to base * (g + eta), divided by the base, at eta = 0.
    template <class Real>
    Real evaluate_linear_y(Real m1, Real m2, Real g) const {
        Real sum = 0;
        for (const auto& [k, c] : terms_) {
            Real v = ipow(m1, k.first) * ipow(m2, k.second) * g;
            if (k.second > 0) v += Real(k.second) * ipow(m1, k.first) * ipow(m2, k.second - 1);
            sum += Real(c) * v;
        }
        return sum;
    }

private:
    template <class Real>
    static Real ipow(Real v, int k) {
        Real r = 1;
        for (int n = 0; n < k; ++n) r *= v;
        return r;
    }

    std::map<Key, Coef> terms_;
};

template <class Real>
Real int_pow(Real v, int k) {
    Real r = 1;
    for (int n = 0; n < k; ++n) r *= v;
    return r;
}

/// Applies sum coef_{ij} dx^i dy^j to base * f, where dx base = m1 base and dy base = m2 base,
/// and returns the result divided by the base as a jet around the anchor.
template <class Real, int D>
Jet<Real, D> apply_to_weighted(const DerivativePolynomial<Jet<Real, D>>& op, Real m1, Real m2, const Jet<Real, D>& f) {
    Jet<Real, D> out;
    for (const auto& [key, coef] : op.terms()) {
        const int i = key.first, j = key.second;
        Jet<Real, D> acc;
        Jet<Real, D> fx = f;  // d^k/dx^k f
        for (int k = 0; k <= i; ++k) {
            Jet<Real, D> fxy = fx;  // d^k/dx^k d^l/dy^l f
            for (int l = 0; l <= j; ++l) {
                const Real w = Real(binomial(i, k) * binomial(j, l)) * int_pow(m1, i - k) * int_pow(m2, j - l);
                acc += fxy * w;
                fxy = fxy.dy();
            }
            fx = fx.dx();
        }
        out += coef * acc;
    }
    return out;
}

}  // namespace ssrd
