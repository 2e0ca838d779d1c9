#pragma once

// Full-system description: a central oscillator with frequency omega(t)
// bilinearly coupled to N bath oscillators, and the blocks of its linear
// generator  q' = A(t) q  with q = (p0, x0, p1..pN, x1..xN).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dce/common.hpp"
#include "dce/profiles.hpp"

namespace dce {

// Instantaneous coupling values u_k, v_k, g_k, z_k of the interaction
//   sum_k (z_k p_k p0 + v_k p_k x0 + u_k x_k p0 + g_k x_k x0).
struct Couplings {
    VecX u, v, g, z;
};

// Independent time dependence per coefficient (non-factorized coupling).
struct CouplingProfiles {
    std::vector<TimeProfile> u, v, g, z;

    std::size_t size() const { return u.size(); }
};

struct BathSpec {
    VecX omegas;
    // Time-independent coupling constants; u_k(t) = nu(t) U_k and so on.
    VecX U, V, G, Z;
    TimeProfile nu = TimeProfile::constant(0.0);
    double temperature = 0.0;
    // Explicit reservoir f_i, replacing the thermal values.
    std::optional<VecX> f;
    // When set, replaces nu(t) * (U, V, G, Z) entirely.
    std::optional<CouplingProfiles> general;

    int size() const { return static_cast<int>(omegas.size()); }
    bool factorized() const { return !general.has_value(); }

    void validate() const {
        const auto n = omegas.size();
        if (n == 0) throw DomainError("bath must contain at least one oscillator");
        for (Eigen::Index i = 0; i < omegas.size(); ++i)
            if (!(omegas[i] > 0.0)) throw DomainError("bath frequency omegas[" + std::to_string(i) + "] must be > 0");
        if (U.size() != n || V.size() != n || G.size() != n || Z.size() != n)
            throw DomainError("coupling sequences U, V, G, Z must all have length N");
        if (!(temperature >= 0.0)) throw DomainError("temperature must be >= 0");
        if (f) {
            if (f->size() != n) throw DomainError("explicit f must have length N");
            for (Eigen::Index i = 0; i < n; ++i)
                if (!((*f)[i] > 0.0)) throw DomainError("explicit f[" + std::to_string(i) + "] must be > 0");
        }
        if (general && (general->u.size() != static_cast<std::size_t>(n) || general->v.size() != general->u.size() ||
                        general->g.size() != general->u.size() || general->z.size() != general->u.size()))
            throw DomainError("general coupling profiles must have length N");
        if (factorized()) {
            const double lo = nu.lower(), hi = std::min(nu.upper(), lo + 100.0);
            for (int i = 0; i <= 4096; ++i) {
                const double t = lo + (hi - lo) * i / 4096.0;
                if (nu(t) < 0.0) throw DomainError("coupling factor nu(t) must be >= 0");
            }
        }
    }

    Couplings at(double t) const {
        if (general) return evaluate_profiles(t);
        const double s = nu(t);
        return {s * U, s * V, s * G, s * Z};
    }

    // Componentwise integral over [t0, t1] (closed form for every profile kind).
    Couplings integral(double t0, double t1) const {
        if (general) {
            const auto n = general->size();
            Couplings c{VecX(n), VecX(n), VecX(n), VecX(n)};
            for (std::size_t k = 0; k < n; ++k) {
                const auto i = static_cast<Eigen::Index>(k);
                c.u[i] = general->u[k].integral(t0, t1);
                c.v[i] = general->v[k].integral(t0, t1);
                c.g[i] = general->g[k].integral(t0, t1);
                c.z[i] = general->z[k].integral(t0, t1);
            }
            return c;
        }
        const double s = nu.integral(t0, t1);
        return {s * U, s * V, s * G, s * Z};
    }

    CouplingProfiles profiles() const {
        if (general) return *general;
        CouplingProfiles p;
        for (Eigen::Index k = 0; k < omegas.size(); ++k) {
            p.u.push_back(nu.scaled(U[k]));
            p.v.push_back(nu.scaled(V[k]));
            p.g.push_back(nu.scaled(G[k]));
            p.z.push_back(nu.scaled(Z[k]));
        }
        return p;
    }

    double characteristic_time() const {
        if (!general) return nu.characteristic_time();
        double m = std::numeric_limits<double>::infinity();
        for (const auto* set : {&general->u, &general->v, &general->g, &general->z})
            for (const auto& p : *set) m = std::min(m, p.characteristic_time());
        return m;
    }

private:
    Couplings evaluate_profiles(double t) const {
        const auto n = general->size();
        Couplings c{VecX(n), VecX(n), VecX(n), VecX(n)};
        for (std::size_t k = 0; k < n; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            c.u[i] = general->u[k](t);
            c.v[i] = general->v[k](t);
            c.g[i] = general->g[k](t);
            c.z[i] = general->z[k](t);
        }
        return c;
    }
};

struct SystemSpec {
    TimeProfile omega = TimeProfile::constant(1.0);
    double omega0 = 1.0;
    BathSpec bath;
    double t_max = 20.0;

    void validate() const {
        if (!(omega0 > 0.0)) throw DomainError("omega0 must be > 0");
        if (!(t_max > 0.0)) throw DomainError("t_max must be > 0");
        if (std::abs(omega(0.0) - omega0) > 1e-12 * omega0)
            throw DomainError("omega(0) must equal omega0");
        if (omega.baseline() - omega.peak_abs() <= 0.0) {
            const double hi = std::min(t_max, omega.upper());
            for (int i = 0; i <= 8192; ++i) {
                const double t = hi * i / 8192.0;
                if (!(omega(t) > 0.0)) throw DomainError("omega(t) must be > 0 on [0, t_max]");
            }
        }
        bath.validate();
    }

    // Largest frequency present: bath modes or the central oscillator.
    double max_frequency() const {
        const double central = std::abs(omega.baseline()) + omega.peak_abs();
        return std::max(bath.omegas.maxCoeff(), central);
    }
};

// Generator blocks in the (p0, x0 | p1..pN, x1..xN) layout.
struct GeneratorBlocks {
    Mat2 A11;
    Mat2X A12;
    MatX2 A21;
    MatX A22;

    MatX full() const {
        const auto n = A22.rows();
        MatX A(n + 2, n + 2);
        A.topLeftCorner<2, 2>() = A11;
        A.topRightCorner(2, n) = A12;
        A.bottomLeftCorner(n, 2) = A21;
        A.bottomRightCorner(n, n) = A22;
        return A;
    }
};

inline Mat2 build_A11(const SystemSpec& spec, double t) {
    const double w = spec.omega(t);
    Mat2 a;
    a << 0.0, -w * w, 1.0, 0.0;
    return a;
}

inline MatX build_A22(const BathSpec& bath) {
    const int n = bath.size();
    MatX a = MatX::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n).diagonal() = -bath.omegas.array().square();
    a.bottomLeftCorner(n, n).diagonal().setOnes();
    return a;
}

// First row (-v, -g), second row (z, u).
inline Mat2X a12_layout(const Couplings& c) {
    const auto n = c.u.size();
    Mat2X a(2, 2 * n);
    a.row(0) << -c.v.transpose(), -c.g.transpose();
    a.row(1) << c.z.transpose(), c.u.transpose();
    return a;
}

// p-rows (-u, -g), x-rows (z, v).
inline MatX2 a21_layout(const Couplings& c) {
    const auto n = c.u.size();
    MatX2 a(2 * n, 2);
    a.topRows(n) << -c.u, -c.g;
    a.bottomRows(n) << c.z, c.v;
    return a;
}

inline Mat2X build_A12(const BathSpec& bath, double t) { return a12_layout(bath.at(t)); }
inline MatX2 build_A21(const BathSpec& bath, double t) { return a21_layout(bath.at(t)); }

inline GeneratorBlocks build_generator(const SystemSpec& spec, double t) {
    const Couplings c = spec.bath.at(t);
    return {build_A11(spec, t), a12_layout(c), a21_layout(c), build_A22(spec.bath)};
}

struct CouplingConstants {
    VecX U, V, G, Z;
};

// Coupling constants reproducing the number-conserving interaction
//   nu(t) sum_k (rho_k a0 ak^dag + h.c.)
// with a0 built from the initial frequency omega0.
inline CouplingConstants rwa_couplings(const std::vector<Complex>& rho, double omega0, const VecX& omegas) {
    if (!(omega0 > 0.0)) throw DomainError("rwa_couplings: omega0 must be > 0");
    if (static_cast<Eigen::Index>(rho.size()) != omegas.size())
        throw DomainError("rwa_couplings: rho and omegas differ in length");
    const auto n = omegas.size();
    CouplingConstants c{VecX(n), VecX(n), VecX(n), VecX(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const double wk = omegas[k];
        if (!(wk > 0.0)) throw DomainError("rwa_couplings: omegas must be > 0");
        const double re = rho[static_cast<std::size_t>(k)].real();
        const double im = rho[static_cast<std::size_t>(k)].imag();
        c.G[k] = std::sqrt(omega0 * wk) * re;
        c.Z[k] = re / std::sqrt(omega0 * wk);
        c.V[k] = std::sqrt(omega0 / wk) * im;
        c.U[k] = -std::sqrt(wk / omega0) * im;
    }
    return c;
}

// coth(w / 2T); 1 at zero temperature.
inline double thermal_G(double omega, double temperature) {
    if (temperature < 0.0) throw DomainError("temperature must be >= 0");
    if (temperature == 0.0) return 1.0;
    return 1.0 / std::tanh(omega / (2.0 * temperature));
}

// Per-mode coordinate variances f_i = coth(w_i / 2T) / (2 w_i) unless overridden.
inline VecX reservoir_f(const BathSpec& bath) {
    if (bath.f) return *bath.f;
    VecX f(bath.omegas.size());
    for (Eigen::Index i = 0; i < f.size(); ++i)
        f[i] = thermal_G(bath.omegas[i], bath.temperature) / (2.0 * bath.omegas[i]);
    return f;
}

// Reservoir covariance diag(w_i^2 f_i) (+) diag(f_i) in the (p.., x..) layout.
inline MatX thermal_F(const BathSpec& bath) {
    const int n = bath.size();
    const VecX f = reservoir_f(bath);
    MatX F = MatX::Zero(2 * n, 2 * n);
    F.topLeftCorner(n, n).diagonal() = bath.omegas.array().square() * f.array();
    F.bottomRightCorner(n, n).diagonal() = f;
    return F;
}

inline VecX uniform_frequencies(int n, double lo, double hi) {
    if (n < 1) throw DomainError("bath needs at least one mode");
    if (n == 1) return VecX::Constant(1, lo);
    return VecX::LinSpaced(n, lo, hi);
}

}  // namespace dce
