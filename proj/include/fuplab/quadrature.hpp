#pragma once

#include <cmath>
#include <complex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace fuplab {

namespace detail {

template <class T>
double magnitude(const T& v) {
    return std::abs(v);
}

// 15-point Gauss embedded in 31-point Kronrod on [a, b]; returns the Kronrod value and |K - G|.
template <class F>
auto kronrod31(F& f, double a, double b, double& err) {
    using boost::math::quadrature::gauss;
    using boost::math::quadrature::gauss_kronrod;
    static const auto& xk = gauss_kronrod<double, 31>::abscissa();
    static const auto& wk = gauss_kronrod<double, 31>::weights();
    static const auto& wg = gauss<double, 15>::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const auto centre = f(mid);
    auto kron = centre * wk[0];
    auto gs = centre * wg[0];
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const auto pair = f(mid - half * xk[i]) + f(mid + half * xk[i]);
        kron += pair * wk[i];
        if (i % 2 == 0) gs += pair * wg[i / 2];
    }
    err = magnitude(half * (kron - gs));
    return half * kron;
}

template <class F>
auto adaptive(F& f, double a, double b, double tol, int depth) {
    double err = 0.0;
    const auto value = kronrod31(f, a, b, err);
    // round-off floor keeps the tolerance split from recursing on resolved pieces
    if (err <= tol || err <= 1e-14 * magnitude(value) || depth == 0) return value;
    const double mid = 0.5 * (a + b);
    return adaptive(f, a, mid, 0.5 * tol, depth - 1) + adaptive(f, mid, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Adaptive Gauss-Kronrod with an absolute tolerance; works for real and complex integrands.
template <class F>
auto integrate_adaptive(F f, double a, double b, double abs_tol = 1e-13, int max_depth = 40) {
    return detail::adaptive(f, a, b, abs_tol, max_depth);
}

}  // namespace fuplab
