#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature for scalar or Eigen-valued integrands.

#include <array>
#include <cmath>
#include <type_traits>

#include "dce/common.hpp"

namespace dce {

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
template <class Derived>
double magnitude(const Eigen::MatrixBase<Derived>& m) {
    return m.template lpNorm<Eigen::Infinity>();
}

template <class T, class F>
T gk15(const F& f, double a, double b, double& err) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T center = f(c);
    T kronrod = kKronrodWeights[7] * center;
    T gauss = kGaussWeights[3] * center;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kKronrodNodes[static_cast<std::size_t>(j)];
        T sum = f(c - dx) + f(c + dx);
        kronrod = kronrod + kKronrodWeights[static_cast<std::size_t>(j)] * sum;
        if (j % 2 == 1) gauss = gauss + kGaussWeights[static_cast<std::size_t>(j / 2)] * sum;
    }
    err = magnitude(T((kronrod - gauss) * h));
    return T(kronrod * h);
}

template <class T, class F>
T adaptive(const F& f, double a, double b, double tol, int depth, const T& whole, double err) {
    if (err <= tol || depth <= 0) return whole;
    const double m = 0.5 * (a + b);
    double el = 0.0, er = 0.0;
    const T left = gk15<T>(f, a, m, el);
    const T right = gk15<T>(f, m, b, er);
    return T(adaptive<T>(f, a, m, 0.5 * tol, depth - 1, left, el) +
             adaptive<T>(f, m, b, 0.5 * tol, depth - 1, right, er));
}

}  // namespace detail

// Integral of f over [a, b] to absolute tolerance `tol` (infinity norm for
// matrix-valued f). The result type is whatever f returns.
template <class F>
auto integrate(const F& f, double a, double b, double tol = 1e-10, int max_depth = 40) {
    using T = std::decay_t<decltype(f(a))>;
    if (a == b) return T(f(a) * 0.0);
    double err = 0.0;
    const T whole = detail::gk15<T>(f, a, b, err);
    return detail::adaptive<T>(f, a, b, tol, max_depth, whole, err);
}

}  // namespace dce
