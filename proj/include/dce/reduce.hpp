#pragma once

// Reduced Gaussian dynamics of the central mode.
//
// For a factorized initial state with Gaussian reservoir covariance F the
// central block evolves as
//   mean -> R11 mean,   cov -> R11 cov R11^T + M*,   M* = R12 F R12^T,
// and obeys a Fokker-Planck equation with drift A = A11 + A12 R21 R11^-1 and
// diffusion 2D = A12 (R22 - R21 R11^-1 R12) F R12^T + (transpose).
// Both are evaluated algebraically; trajectories are never differentiated.

#include <cmath>
#include <limits>
#include <vector>

#include "dce/common.hpp"
#include "dce/propagate.hpp"
#include "dce/system.hpp"

namespace dce {

// Mean and covariance of (p0, x0).
struct CentralGaussian {
    Vec2 mean = Vec2::Zero();
    Mat2 cov = 0.5 * Mat2::Identity();

    static CentralGaussian vacuum() { return {}; }
    static CentralGaussian coherent(double p, double x) { return {Vec2(p, x), 0.5 * Mat2::Identity()}; }
    static CentralGaussian thermal(double G) { return {Vec2::Zero(), 0.5 * G * Mat2::Identity()}; }

    bool physical(double tol = 1e-12) const {
        return (cov - cov.transpose()).norm() <= tol && cov(0, 0) > 0.0 && cov.determinant() >= 0.25 - tol;
    }
};

// Noise correlation matrix in the (p, x) ordering: X(0,0) = chi_pp,
// X(0,1) = chi_px, X(1,0) = chi_xp, X(1,1) = chi_xx.
struct NoiseMatrix {
    CMat2 X;

    Complex chi_pp() const { return X(0, 0); }
    Complex chi_px() const { return X(0, 1); }
    Complex chi_xp() const { return X(1, 0); }
    Complex chi_xx() const { return X(1, 1); }

    // The same matrix relabelled in (x, p) order: [[chi_xx, chi_xp], [chi_px, chi_pp]].
    CMat2 in_xp_order() const {
        CMat2 m;
        m << chi_xx(), chi_xp(), chi_px(), chi_pp();
        return m;
    }

    // Smallest eigenvalue of X viewed as a Hermitian matrix.
    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<CMat2> es(X);
        return es.eigenvalues()[0];
    }
};

struct ReducedDynamics {
    double t = 0.0;
    Mat2 A;      // drift
    Mat2 Mstar;  // reservoir-induced covariance R12 F R12^T
    Mat2 D;      // diffusion
    NoiseMatrix X;
    double gamma = 0.0;  // -(1/2) tr(A - A11)
};

struct SingularityWarning {
    double t;
    double condition;
};

inline Mat2 reduced_covariance(const PropagatorState& R, const MatX& F) {
    if (F.rows() != R.R12.cols() || F.cols() != R.R12.cols())
        throw DomainError("reservoir matrix size does not match the propagator");
    return symmetrized(R.R12 * F * R.R12.transpose());
}

inline CentralGaussian evolve_gaussian(const CentralGaussian& state0, const PropagatorState& R, const MatX& F) {
    CentralGaussian out;
    out.mean = R.R11 * state0.mean;
    out.cov = symmetrized(R.R11 * state0.cov * R.R11.transpose() + reduced_covariance(R, F));
    return out;
}

// 2-norm condition number of R11.
inline double r11_condition(const PropagatorState& R) {
    Eigen::JacobiSVD<Mat2> svd(R.R11);
    const auto s = svd.singularValues();
    return s[1] > 0.0 ? s[0] / s[1] : std::numeric_limits<double>::infinity();
}

inline Mat2 drift_exact(const PropagatorState& R, const SystemSpec& spec) {
    const Mat2X A12 = build_A12(spec.bath, R.t);
    return build_A11(spec, R.t) + A12 * R.R21 * R.R11.inverse();
}

inline Mat2 diffusion_exact(const PropagatorState& R, const MatX& F, const SystemSpec& spec) {
    const Mat2X A12 = build_A12(spec.bath, R.t);
    const MatX schur = R.R22 - R.R21 * R.R11.inverse() * R.R12;
    // 2D = H + H^T
    const Mat2 H = A12 * schur * F * R.R12.transpose();
    return symmetrized(H);
}

// Damping rate gamma = -(1/2) tr(A - A11) consistent with the drift
// convention A = [[-gamma_p, -omega^2], [1, -gamma_x]].
inline double damping_rate(const Mat2& A, const Mat2& A11) { return -0.5 * (A - A11).trace(); }

// X = 2D + i gamma K with the antisymmetric part fixed by commutator
// preservation chi_xp - chi_px = 2 i gamma; in (p, x) ordering K(1,0) = +1.
inline NoiseMatrix noise_matrix(const Mat2& D, double gamma) {
    NoiseMatrix n;
    n.X = (2.0 * D).cast<Complex>();
    n.X(1, 0) += Complex(0.0, gamma);
    n.X(0, 1) -= Complex(0.0, gamma);
    return n;
}

// (1/2) <p^2 + x^2 - 1> in omega0 = 1 units.
inline double photon_number(const CentralGaussian& s) {
    return 0.5 * (s.cov(0, 0) + s.cov(1, 1) + s.mean.squaredNorm() - 1.0);
}

// Full reduced record at every trajectory point; points where R11 is
// ill-conditioned (condition number above `max_condition`) are reported and skipped.
inline std::vector<ReducedDynamics> reduce_trajectory(const std::vector<PropagatorState>& trajectory,
                                                      const SystemSpec& spec, const MatX& F,
                                                      std::vector<SingularityWarning>* skipped = nullptr,
                                                      double max_condition = 1e8) {
    std::vector<ReducedDynamics> out;
    out.reserve(trajectory.size());
    for (const auto& R : trajectory) {
        const double cond = r11_condition(R);
        if (!(cond <= max_condition)) {
            if (skipped) skipped->push_back({R.t, cond});
            continue;
        }
        ReducedDynamics r;
        r.t = R.t;
        r.A = drift_exact(R, spec);
        r.Mstar = reduced_covariance(R, F);
        r.D = diffusion_exact(R, F, spec);
        r.gamma = damping_rate(r.A, build_A11(spec, R.t));
        r.X = noise_matrix(r.D, r.gamma);
        out.push_back(r);
    }
    return out;
}

}  // namespace dce
