#pragma once

// Shared types and error classes. All central-mode matrices use the (p0, x0)
// ordering; bath vectors use (p1..pN, x1..xN).

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dce {

using Complex = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using CMat2 = Eigen::Matrix2cd;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat2X = Eigen::Matrix<double, 2, Eigen::Dynamic>;
using MatX2 = Eigen::Matrix<double, Eigen::Dynamic, 2>;

// Argument outside the domain where a quantity is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Numerical integration failed; carries the simulation time at which it happened.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " (t = " + std::to_string(t) + ")"), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

// A closed form was requested for an input it does not cover.
class UnsupportedForm : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kPi = 3.14159265358979323846;

// Canonical symplectic unit for an ordering (p_1..p_m, x_1..x_m) split into
// `pairs` canonical pairs laid out as [p-block | x-block]. Hamilton's equations
// read q' = J grad H.
inline MatX symplectic_unit_blocked(int pairs) {
    MatX J = MatX::Zero(2 * pairs, 2 * pairs);
    J.topRightCorner(pairs, pairs) = -MatX::Identity(pairs, pairs);
    J.bottomLeftCorner(pairs, pairs) = MatX::Identity(pairs, pairs);
    return J;
}

// Symplectic unit for the full ordering q = (p0, x0, p1..pN, x1..xN).
inline MatX symplectic_unit_full(int bath_modes) {
    const int n = bath_modes;
    MatX J = MatX::Zero(2 * n + 2, 2 * n + 2);
    J(0, 1) = -1.0;
    J(1, 0) = 1.0;
    J.block(2, 2, 2 * n, 2 * n) = symplectic_unit_blocked(n);
    return J;
}

inline Mat2 symmetrized(const Mat2& m) { return 0.5 * (m + m.transpose()); }

}  // namespace dce
