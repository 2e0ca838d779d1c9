#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these share code paths with the library beyond plain data types.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "dce/system.hpp"

namespace oracle {

using dce::MatX;
using dce::VecX;

// Symmetric Hessian B of the Hamiltonian
//   1/2 (p0^2 + w^2 x0^2) + 1/2 sum (p_i^2 + w_i^2 x_i^2)
//   + sum (z_i p_i p0 + v_i p_i x0 + u_i x_i p0 + g_i x_i x0)
// in the ordering (p0, x0, p1..pN, x1..xN), so that H = 1/2 q^T B q.
inline MatX hamiltonian_hessian(double w, const VecX& omegas, const VecX& u, const VecX& v, const VecX& g,
                                const VecX& z) {
    const auto n = omegas.size();
    MatX B = MatX::Zero(2 * n + 2, 2 * n + 2);
    B(0, 0) = 1.0;
    B(1, 1) = w * w;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto p = 2 + i, x = 2 + n + i;
        B(p, p) = 1.0;
        B(x, x) = omegas[i] * omegas[i];
        B(p, 0) = B(0, p) = z[i];
        B(p, 1) = B(1, p) = v[i];
        B(x, 0) = B(0, x) = u[i];
        B(x, 1) = B(1, x) = g[i];
    }
    return B;
}

// Hamilton's equations: dp/dt = -dH/dx, dx/dt = dH/dp, written out pair by pair.
inline MatX canonical_J(Eigen::Index n) {
    MatX J = MatX::Zero(2 * n + 2, 2 * n + 2);
    J(0, 1) = -1.0;
    J(1, 0) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        J(2 + i, 2 + n + i) = -1.0;
        J(2 + n + i, 2 + i) = 1.0;
    }
    return J;
}

// Scaling-and-squaring Pade exponential from Eigen's unsupported module.
inline MatX dense_expm(const MatX& A) { return A.exp(); }

inline VecX random_vec(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    VecX v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
    return v;
}

inline dce::BathSpec random_bath(std::mt19937_64& rng, int n, double scale, const dce::TimeProfile& nu) {
    dce::BathSpec b;
    b.omegas = random_vec(rng, n, 0.3, 2.5);
    b.U = random_vec(rng, n, -scale, scale);
    b.V = random_vec(rng, n, -scale, scale);
    b.G = random_vec(rng, n, -scale, scale);
    b.Z = random_vec(rng, n, -scale, scale);
    b.nu = nu;
    return b;
}

// Central block of the full covariance R (C0 (+) F) R^T.
inline Eigen::Matrix2d full_covariance_central(const MatX& R, const Eigen::Matrix2d& C0, const MatX& F) {
    const auto m = F.rows();
    MatX S = MatX::Zero(m + 2, m + 2);
    S.topLeftCorner(2, 2) = C0;
    S.bottomRightCorner(m, m) = F;
    const MatX out = R * S * R.transpose();
    return out.topLeftCorner(2, 2);
}

// Gauss-Legendre (16-point, composite) integral used where an independent
// quadrature is needed.
template <class F>
double gauss_legendre(const F& f, double a, double b, int panels = 64) {
    static const double x[8] = {0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
                                0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
    static const double w[8] = {0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
                                0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};
    double sum = 0.0;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h, r = 0.5 * h;
        for (int i = 0; i < 8; ++i) sum += w[i] * r * (f(c - r * x[i]) + f(c + r * x[i]));
    }
    return sum;
}

}  // namespace oracle
