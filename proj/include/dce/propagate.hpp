#pragma once

// Symplectic propagator R(t) of the full system, R' = A(t) R, R(0) = I,
// integrated with fixed-step classical RK4 on the dense (2N+2) matrix.
// The symplectic defect |R^T J R - J|_F is recorded at every output point and
// doubles as an accuracy certificate; it is never projected away.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dce/common.hpp"
#include "dce/system.hpp"

namespace dce {

struct PropagatorState {
    double t = 0.0;
    Mat2 R11 = Mat2::Identity();
    Mat2X R12;
    MatX2 R21;
    MatX R22;
    double defect = 0.0;

    static PropagatorState identity(int bath_modes) {
        const int m = 2 * bath_modes;
        PropagatorState s;
        s.R12 = Mat2X::Zero(2, m);
        s.R21 = MatX2::Zero(m, 2);
        s.R22 = MatX::Identity(m, m);
        return s;
    }

    int bath_modes() const { return static_cast<int>(R22.rows() / 2); }

    MatX full() const {
        const auto m = R22.rows();
        MatX R(m + 2, m + 2);
        R.topLeftCorner<2, 2>() = R11;
        R.topRightCorner(2, m) = R12;
        R.bottomLeftCorner(m, 2) = R21;
        R.bottomRightCorner(m, m) = R22;
        return R;
    }

    static PropagatorState from_full(double t, const MatX& R) {
        const auto m = R.rows() - 2;
        PropagatorState s;
        s.t = t;
        s.R11 = R.topLeftCorner<2, 2>();
        s.R12 = R.topRightCorner(2, m);
        s.R21 = R.bottomLeftCorner(m, 2);
        s.R22 = R.bottomRightCorner(m, m);
        return s;
    }
};

// |R^T J R - J|_F for the full ordering (p0, x0, p.., x..).
inline double symplectic_defect(const MatX& R) {
    const int n = static_cast<int>(R.rows() / 2) - 1;
    const MatX J = symplectic_unit_full(n);
    return (R.transpose() * (J * R) - J).norm();
}

// exp(A22 t) in closed form: cos blocks on the diagonal, -w sin(wt) upper
// right, sin(wt)/w lower left.
inline MatX expm_bath(const VecX& omegas, double t) {
    const auto n = omegas.size();
    MatX e = MatX::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = omegas[i];
        const double c = std::cos(w * t), s = std::sin(w * t);
        e(i, i) = c;
        e(n + i, n + i) = c;
        e(i, n + i) = -w * s;
        e(n + i, i) = s / w;
    }
    return e;
}

struct PropagateOptions {
    // Largest RK4 step; <= 0 selects default_step(spec).
    double max_step = 0.0;
    // Hard limit on the recorded symplectic defect.
    double defect_limit = 1e-6;
};

// (1/400) * min(2 pi / omega_max, shortest profile time scale).
inline double default_step(const SystemSpec& spec) {
    double scale = 2.0 * kPi / spec.max_frequency();
    scale = std::min(scale, spec.bath.characteristic_time());
    scale = std::min(scale, spec.omega.characteristic_time());
    return scale / 400.0;
}

inline std::vector<double> uniform_grid(double t_max, int steps) {
    if (steps < 1) throw DomainError("grid needs at least one step");
    if (!(t_max > 0.0)) throw DomainError("grid t_max must be > 0");
    std::vector<double> g(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) g[static_cast<std::size_t>(i)] = t_max * i / steps;
    return g;
}

namespace detail {

inline void check_grid(const std::vector<double>& grid, double t0, double t_max) {
    if (grid.empty()) throw DomainError("empty time grid");
    if (grid.front() != t0) throw DomainError("time grid must start at the initial time");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
    if (grid.back() > t_max * (1.0 + 1e-12)) throw DomainError("time grid extends beyond t_max");
}

inline int substeps(double dt, double h) { return std::max(1, static_cast<int>(std::ceil(dt / h - 1e-9))); }

// Generic fixed-step RK4 for Y' = f(t, Y) with Eigen-valued Y.
template <class Y, class F>
void rk4_advance(Y& y, double t, double dt, int n, const F& f) {
    const double h = dt / n;
    for (int i = 0; i < n; ++i) {
        const double ti = t + i * h;
        const Y k1 = f(ti, y);
        const Y k2 = f(ti + 0.5 * h, Y(y + 0.5 * h * k1));
        const Y k3 = f(ti + 0.5 * h, Y(y + 0.5 * h * k2));
        const Y k4 = f(ti + h, Y(y + h * k3));
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

}  // namespace detail

// Integrates all four block equations together and records the propagator at
// every grid point. Starting from `start` (default: identity at t = 0) allows
// restarting a run.
inline std::vector<PropagatorState> integrate_R(const SystemSpec& spec, const std::vector<double>& grid,
                                                const PropagateOptions& options = {},
                                                const std::optional<PropagatorState>& start = std::nullopt) {
    const int n = spec.bath.size();
    const PropagatorState init = start ? *start : PropagatorState::identity(n);
    detail::check_grid(grid, init.t, spec.t_max);
    const double h = options.max_step > 0.0 ? options.max_step : default_step(spec);

    MatX A = build_generator(spec, init.t).full();
    auto rhs = [&](double t, const MatX& R) -> MatX {
        const Couplings c = spec.bath.at(t);
        const double w = spec.omega(t);
        A(0, 1) = -w * w;
        A.block(0, 2, 2, 2 * n) = a12_layout(c);
        A.block(2, 0, 2 * n, 2) = a21_layout(c);
        return A * R;
    };

    std::vector<PropagatorState> out;
    out.reserve(grid.size());
    MatX R = init.full();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            const double dt = grid[i] - grid[i - 1];
            detail::rk4_advance(R, grid[i - 1], dt, detail::substeps(dt, h), rhs);
        }
        const double defect = symplectic_defect(R);
        if (!std::isfinite(defect) || !R.allFinite())
            throw IntegrationError("propagator became non-finite", grid[i]);
        if (defect > options.defect_limit)
            throw IntegrationError("symplectic defect " + std::to_string(defect) + " exceeds limit", grid[i]);
        auto s = PropagatorState::from_full(grid[i], R);
        s.defect = defect;
        out.push_back(std::move(s));
    }
    return out;
}

// Propagator of the uncoupled central oscillator, R' = A11(t) R, R(0) = I.
// Not a matrix exponential unless omega is constant.
inline std::vector<Mat2> free_central_R11(const SystemSpec& spec, const std::vector<double>& grid,
                                          const PropagateOptions& options = {}) {
    detail::check_grid(grid, 0.0, spec.t_max);
    double h = options.max_step;
    if (h <= 0.0) h = std::min(2.0 * kPi / (std::abs(spec.omega.baseline()) + spec.omega.peak_abs()),
                               spec.omega.characteristic_time()) / 400.0;
    auto rhs = [&spec](double t, const Mat2& R) -> Mat2 { return build_A11(spec, t) * R; };
    std::vector<Mat2> out;
    out.reserve(grid.size());
    Mat2 R = Mat2::Identity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            const double dt = grid[i] - grid[i - 1];
            detail::rk4_advance(R, grid[i - 1], dt, detail::substeps(dt, h), rhs);
        }
        if (!R.allFinite()) throw IntegrationError("central propagator became non-finite", grid[i]);
        if (std::abs(R.determinant() - 1.0) > options.defect_limit)
            throw IntegrationError("central propagator determinant drifted from 1", grid[i]);
        out.push_back(R);
    }
    return out;
}

}  // namespace dce
