#pragma once

// First-order (weak coupling) and short-time solutions.
//
// In the short-time limit R11 and R22 are replaced by identities, giving
//   A(t) ~ A11(t) + mu(t),   mu(t) = A12(t) int_0^t A21,
//   2D   ~ A12(t) F int_0^t A12^T + (transpose).
// When every coupling coefficient is proportional to one factor nu(t), mu is
// diagonal with equal entries lambda(t) sum_k (U_k V_k - G_k Z_k): the two
// quadratures acquire equal damping rates.
//
// Sign bookkeeping: with the drift convention A = [[-gamma_p, -omega^2],
// [1, -gamma_x]], gamma_p = -mu11 and gamma_x = -mu22.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dce/common.hpp"
#include "dce/profiles.hpp"
#include "dce/propagate.hpp"
#include "dce/quadrature.hpp"
#include "dce/reduce.hpp"
#include "dce/system.hpp"

namespace dce {

struct MuMatrix {
    double t = 0.0;
    double mu11 = 0.0, mu12 = 0.0, mu21 = 0.0, mu22 = 0.0;

    Mat2 matrix() const {
        Mat2 m;
        m << mu11, mu12, mu21, mu22;
        return m;
    }
    static MuMatrix from(double t, const Mat2& m) { return {t, m(0, 0), m(0, 1), m(1, 0), m(1, 1)}; }
};

// The four element integrals for arbitrary (not necessarily factorized)
// coupling functions:
//   mu11 = sum int [v(t) u(s) - g(t) z(s)]    mu12 = sum int [v(t) g(s) - g(t) v(s)]
//   mu21 = sum int [u(t) z(s) - z(t) u(s)]    mu22 = sum int [u(t) v(s) - z(t) g(s)]
inline MuMatrix mu_elements(const CouplingProfiles& c, double t) {
    MuMatrix m{t};
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double u = c.u[k](t), v = c.v[k](t), g = c.g[k](t), z = c.z[k](t);
        const double iu = c.u[k].integral(0.0, t), iv = c.v[k].integral(0.0, t);
        const double ig = c.g[k].integral(0.0, t), iz = c.z[k].integral(0.0, t);
        m.mu11 += v * iu - g * iz;
        m.mu12 += v * ig - g * iv;
        m.mu21 += u * iz - z * iu;
        m.mu22 += u * iv - z * ig;
    }
    return m;
}

inline MuMatrix mu_elements(const BathSpec& bath, double t) { return mu_elements(bath.profiles(), t); }

// Closed form under single-factor coupling.
inline MuMatrix mu_single_factor(const BathSpec& bath, double t) {
    if (!bath.factorized()) throw UnsupportedForm("mu_single_factor requires single-factor coupling");
    const double lam = lambda_factor(bath.nu, t);
    const double s = (bath.U.array() * bath.V.array() - bath.G.array() * bath.Z.array()).sum();
    return {t, lam * s, 0.0, 0.0, lam * s};
}

// Short-time drift A11(t) + A12(t) int_0^t A21.
inline Mat2 drift_first_order(const SystemSpec& spec, double t) {
    const Mat2X A12 = build_A12(spec.bath, t);
    const MatX2 intA21 = a21_layout(spec.bath.integral(0.0, t));
    return build_A11(spec, t) + A12 * intA21;
}

// Short-time form of R12: int_0^t A12.
inline Mat2X r12_short_time(const BathSpec& bath, double t) { return a12_layout(bath.integral(0.0, t)); }

// Short-time diffusion: 2D = A12(t) F int A12^T + (int A12) F A12(t)^T.
inline Mat2 diffusion_first_order(const SystemSpec& spec, const MatX& F, double t) {
    const Mat2X A12 = build_A12(spec.bath, t);
    const Mat2X R12 = r12_short_time(spec.bath, t);
    const Mat2 H = A12 * F * R12.transpose();
    return symmetrized(H);
}

struct DiffusionElements {
    double D11 = 0.0, D22 = 0.0, D12 = 0.0;

    Mat2 matrix() const {
        Mat2 m;
        m << D11, D12, D12, D22;
        return m;
    }
};

// Closed-form short-time diffusion for single-factor coupling and a reservoir
// covariance of the form diag(w_k^2 f_k) (+) diag(f_k).
inline DiffusionElements D_closed_form(const BathSpec& bath, const MatX& F, double t) {
    if (!bath.factorized()) throw UnsupportedForm("D_closed_form requires single-factor coupling");
    const int n = bath.size();
    if (F.rows() != 2 * n || F.cols() != 2 * n) throw DomainError("reservoir matrix has the wrong size");
    const MatX off = F - MatX(F.diagonal().asDiagonal());
    const double scale = F.diagonal().cwiseAbs().maxCoeff();
    if (off.cwiseAbs().maxCoeff() > 1e-14 * scale)
        throw UnsupportedForm("D_closed_form needs a diagonal reservoir matrix; use diffusion_first_order");
    VecX f = F.diagonal().tail(n);
    const VecX pf = F.diagonal().head(n);
    const VecX w2 = bath.omegas.array().square();
    if (((pf.array() - w2.array() * f.array()).abs() > 1e-12 * pf.array().abs()).any())
        throw UnsupportedForm("D_closed_form needs momentum variances w_k^2 f_k; use diffusion_first_order");

    const double lam = lambda_factor(bath.nu, t);
    const auto& U = bath.U.array();
    const auto& V = bath.V.array();
    const auto& G = bath.G.array();
    const auto& Z = bath.Z.array();
    DiffusionElements d;
    d.D11 = lam * (f.array() * (w2.array() * V * V + G * G)).sum();
    d.D22 = lam * (f.array() * (w2.array() * Z * Z + U * U)).sum();
    d.D12 = -lam * (f.array() * (w2.array() * V * Z + G * U)).sum();
    return d;
}

// Dense evaluation of the free central propagator R11^(0)(tau): closed-form
// rotation for constant omega, otherwise RK4 samples joined by cubic Hermite
// interpolation.
class FreeCentralFlow {
public:
    FreeCentralFlow(const SystemSpec& spec, double t_end) : spec_(spec) {
        constant_ = spec.omega.kind() == ProfileKind::constant || spec.omega.amplitude() == 0.0;
        if (constant_) return;
        const double wmax = std::abs(spec.omega.baseline()) + spec.omega.peak_abs();
        const double h = std::min(2.0 * kPi / wmax, spec.omega.characteristic_time()) / 1600.0;
        const int steps = std::max(16, static_cast<int>(std::ceil(t_end / h)));
        step_ = t_end / steps;
        std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
        for (int i = 0; i <= steps; ++i) grid[static_cast<std::size_t>(i)] = step_ * i;
        SystemSpec tmp = spec;
        tmp.t_max = std::max(tmp.t_max, t_end);
        samples_ = free_central_R11(tmp, grid, PropagateOptions{step_, 1e-6});
    }

    Mat2 operator()(double tau) const {
        if (constant_) {
            const double w = spec_.omega.baseline();
            const double c = std::cos(w * tau), s = std::sin(w * tau);
            Mat2 r;
            r << c, -w * s, s / w, c;
            return r;
        }
        const auto last = static_cast<double>(samples_.size() - 1);
        const double pos = std::clamp(tau / step_, 0.0, last);
        const auto i = std::min(static_cast<std::size_t>(pos), samples_.size() - 2);
        const double s = pos - static_cast<double>(i);
        const double t0 = step_ * static_cast<double>(i), t1 = t0 + step_;
        const Mat2& y0 = samples_[i];
        const Mat2& y1 = samples_[i + 1];
        const Mat2 d0 = build_A11(spec_, t0) * y0 * step_;
        const Mat2 d1 = build_A11(spec_, t1) * y1 * step_;
        const double s2 = s * s, s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * d1;
    }

private:
    SystemSpec spec_;
    bool constant_ = true;
    double step_ = 0.0;
    std::vector<Mat2> samples_;
};

// exp(A22 t) int_0^t exp(-A22 tau) A21(tau) R11^(0)(tau) dtau.
inline MatX2 r21_first_order(const SystemSpec& spec, double t, double tol = 1e-10) {
    if (t < 0.0) throw DomainError("r21_first_order needs t >= 0");
    const int n = spec.bath.size();
    if (t == 0.0) return MatX2::Zero(2 * n, 2);
    const FreeCentralFlow R11(spec, t);
    auto integrand = [&](double tau) -> MatX2 {
        return expm_bath(spec.bath.omegas, -tau) * build_A21(spec.bath, tau) * R11(tau);
    };
    const MatX2 acc = integrate(integrand, 0.0, t, tol);
    return expm_bath(spec.bath.omegas, t) * acc;
}

// R11^(0)(t) int_0^t R11^(0)(tau)^-1 A12(tau) exp(A22 tau) dtau.
inline Mat2X r12_first_order(const SystemSpec& spec, double t, double tol = 1e-10) {
    if (t < 0.0) throw DomainError("r12_first_order needs t >= 0");
    const int n = spec.bath.size();
    if (t == 0.0) return Mat2X::Zero(2, 2 * n);
    const FreeCentralFlow R11(spec, t);
    auto integrand = [&](double tau) -> Mat2X {
        return R11(tau).inverse() * build_A12(spec.bath, tau) * expm_bath(spec.bath.omegas, tau);
    };
    const Mat2X acc = integrate(integrand, 0.0, t, tol);
    return R11(t) * acc;
}

// Phenomenological noise coefficients. Real parts:
//   gamma_p = (1 + y) gamma,  gamma_x = (1 - y) gamma,
//   chi_pp = gamma_p omega0 G, chi_xx = gamma_x G / omega0;
// imaginary parts chi_xp = i xp_factor gamma, chi_px = i px_factor gamma.
struct NoiseSet {
    TimeProfile gamma = TimeProfile::constant(0.0);
    double y = 0.0;
    double omega0 = 1.0;
    double G = 1.0;
    double xp_factor = 1.0;
    double px_factor = -1.0;

    double gamma_total(double t) const { return gamma(t); }
    double gamma_x(double t) const { return (1.0 - y) * gamma(t); }
    double gamma_p(double t) const { return (1.0 + y) * gamma(t); }
    double chi_xx(double t) const { return gamma_x(t) * G / omega0; }
    double chi_pp(double t) const { return gamma_p(t) * G * omega0; }
    double chi_xp_imag(double t) const { return xp_factor * gamma(t); }
    double chi_px_imag(double t) const { return px_factor * gamma(t); }

    // Symmetric part D = (X + X^T)/4 in (p, x) ordering.
    Mat2 diffusion(double t) const {
        Mat2 d = Mat2::Zero();
        d(0, 0) = 0.5 * chi_pp(t);
        d(1, 1) = 0.5 * chi_xx(t);
        return d;
    }

    NoiseMatrix matrix(double t) const {
        NoiseMatrix n;
        n.X << Complex(chi_pp(t), 0.0), Complex(0.0, chi_px_imag(t)), Complex(0.0, chi_xp_imag(t)),
            Complex(chi_xx(t), 0.0);
        return n;
    }
};

namespace detail {
inline void require_nonnegative(const TimeProfile& p, const char* what) {
    const double hi = std::min(p.upper(), p.lower() + 100.0);
    for (int i = 0; i <= 2048; ++i) {
        const double t = p.lower() + (hi - p.lower()) * i / 2048.0;
        if (p(t) < 0.0) throw DomainError(std::string(what) + " must be >= 0");
    }
}
}  // namespace detail

// gamma_x = gamma_p = gamma, chi_xp = -chi_px = i gamma, chi_pp = omega0^2 chi_xx = gamma omega0 G.
inline NoiseSet min_noise_set(const TimeProfile& gamma, double omega0, double G) {
    if (!(G >= 1.0)) throw DomainError("unphysical temperature: noise factor G must be >= 1");
    if (!(omega0 > 0.0)) throw DomainError("omega0 must be > 0");
    detail::require_nonnegative(gamma, "gamma(t)");
    return NoiseSet{gamma, 0.0, omega0, G, 1.0, -1.0};
}

// Same structure with asymmetric damping, y = (gamma_p - gamma_x)/(gamma_p + gamma_x).
inline NoiseSet asymmetric_noise_set(const TimeProfile& gamma, double y, double omega0, double G) {
    if (!(y >= -1.0 && y <= 1.0)) throw DomainError("asymmetry y must lie in [-1, 1]");
    NoiseSet n = min_noise_set(gamma, omega0, G);
    n.y = y;
    return n;
}

}  // namespace dce
