#include <catch_amalgamated.hpp>

#include <random>

#include "dce/system.hpp"
#include "oracles.hpp"

using namespace dce;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

BathSpec single_mode(double w, double U, double V, double G, double Z, TimeProfile nu) {
    BathSpec b;
    b.omegas = VecX::Constant(1, w);
    b.U = VecX::Constant(1, U);
    b.V = VecX::Constant(1, V);
    b.G = VecX::Constant(1, G);
    b.Z = VecX::Constant(1, Z);
    b.nu = std::move(nu);
    return b;
}

}  // namespace

TEST_CASE("central block", "[system]") {
    SystemSpec s;
    Mat2 expected;
    expected << 0, -1, 1, 0;
    CHECK(build_A11(s, 2.3) == expected);
    s.omega = TimeProfile::constant(0.99);
    CHECK_THAT(build_A11(s, 0.0)(0, 1), WithinAbs(-0.9801, 1e-15));
}

TEST_CASE("bath block", "[system]") {
    auto b = single_mode(2.0, 0, 0, 0, 0, TimeProfile::constant(0.0));
    MatX e(2, 2);
    e << 0, -4, 1, 0;
    CHECK(build_A22(b) == e);

    b.omegas = VecX(2);
    b.omegas << 1.0, 3.0;
    const MatX a = build_A22(b);
    CHECK(a(0, 2) == -1.0);
    CHECK(a(1, 3) == -9.0);
    CHECK(a(2, 0) == 1.0);
    CHECK(a.trace() == 0.0);
}

TEST_CASE("coupling block layout", "[system]") {
    const auto b = single_mode(1.0, 1.0, 0.0, 0.0, 0.0, TimeProfile::constant(1.0));
    Mat2X a12(2, 2);
    a12 << 0, 0, 0, 1;
    MatX2 a21(2, 2);
    a21 << -1, 0, 0, 0;
    CHECK(build_A12(b, 0.3) == a12);
    CHECK(build_A21(b, 0.3) == a21);

    const auto off = single_mode(1.0, 0.3, -0.2, 0.5, 0.9, TimeProfile::gaussian_pulse(1.0, 1.0, 0.1));
    CHECK(build_A12(off, 8.0).isZero(1e-200));
    CHECK(build_A21(off, 8.0).isZero(1e-200));
}

TEST_CASE("generator equals J times the Hamiltonian Hessian", "[system][property]") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 6;
        SystemSpec s;
        s.omega = TimeProfile::gaussian_pulse(-0.05, 3.0, 1.0, 1.0);
        s.omega0 = s.omega(0.0);
        s.bath = oracle::random_bath(rng, n, 0.5, TimeProfile::exp_rise_decay(1.3, 0.2, 0.1, 0.7));
        const double t = 0.2 + 0.1 * trial;
        const Couplings c = s.bath.at(t);
        const MatX B = oracle::hamiltonian_hessian(s.omega(t), s.bath.omegas, c.u, c.v, c.g, c.z);
        const MatX A = build_generator(s, t).full();
        CHECK((A - oracle::canonical_J(n) * B).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((symplectic_unit_full(n) - oracle::canonical_J(n)).norm() == 0.0);
    }
}

TEST_CASE("RWA coupling constants", "[system]") {
    auto c = rwa_couplings({Complex(1.0, 0.0)}, 1.0, VecX::Constant(1, 4.0));
    CHECK_THAT(c.G[0], WithinAbs(2.0, 1e-15));
    CHECK_THAT(c.Z[0], WithinAbs(0.5, 1e-15));
    CHECK(c.V[0] == 0.0);
    CHECK(c.U[0] == 0.0);

    c = rwa_couplings({Complex(0.0, 1.0)}, 1.0, VecX::Constant(1, 1.0));
    CHECK(c.G[0] == 0.0);
    CHECK(c.Z[0] == 0.0);
    CHECK(c.V[0] == 1.0);
    CHECK(c.U[0] == -1.0);

    CHECK_THROWS_AS(rwa_couplings({Complex(1.0, 0.0)}, 1.0, VecX::Constant(1, 0.0)), DomainError);
    CHECK_THROWS_AS(rwa_couplings({Complex(1.0, 0.0)}, -1.0, VecX::Constant(1, 1.0)), DomainError);
}

TEST_CASE("RWA identity UV - GZ = -|rho|^2", "[system][property]") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 9;
        std::vector<Complex> rho;
        for (int k = 0; k < n; ++k) rho.emplace_back(N(rng), N(rng));
        const VecX w = oracle::random_vec(rng, n, 0.1, 5.0);
        const double omega0 = 0.5 + trial * 0.01;
        const auto c = rwa_couplings(rho, omega0, w);
        double lhs = 0.0, rhs = 0.0;
        for (int k = 0; k < n; ++k) {
            lhs += c.U[k] * c.V[k] - c.G[k] * c.Z[k];
            rhs -= std::norm(rho[static_cast<std::size_t>(k)]);
        }
        CHECK_THAT(lhs, WithinAbs(rhs, 1e-12));
    }
}

TEST_CASE("thermal reservoir covariance", "[system]") {
    auto b = single_mode(1.0, 0, 0, 0, 0, TimeProfile::constant(0.0));
    MatX F = thermal_F(b);
    CHECK_THAT(F(0, 0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(F(1, 1), WithinAbs(0.5, 1e-15));
    b.temperature = 0.5;
    F = thermal_F(b);
    CHECK_THAT(F(1, 1), WithinRel(0.656518, 1e-6));
    CHECK_THAT(thermal_G(1.0, 0.5), WithinRel(1.31304, 1e-5));

    std::mt19937_64 rng(3);
    b.omegas = oracle::random_vec(rng, 8, 0.1, 4.0);
    b.U = b.V = b.G = b.Z = VecX::Zero(8);
    for (double T : {0.0, 0.1, 1.0, 10.0}) {
        b.temperature = T;
        F = thermal_F(b);
        for (int i = 0; i < 8; ++i) CHECK(F(i, i) * F(8 + i, 8 + i) >= 0.25 * (1.0 - 1e-14));
        CHECK((F - F.transpose()).norm() == 0.0);
    }
}

TEST_CASE("spec validation", "[system]") {
    SystemSpec s;
    s.bath = single_mode(1.0, 0, 0, 0, 0, TimeProfile::constant(0.0));
    CHECK_NOTHROW(s.validate());
    s.bath.omegas[0] = -1.0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.bath.omegas[0] = 1.0;
    s.omega = TimeProfile::constant(2.0);
    CHECK_THROWS_AS(s.validate(), DomainError);
    s.omega = TimeProfile::constant(1.0);
    s.bath.nu = TimeProfile::gaussian_pulse(-1.0, 1.0, 0.2);
    CHECK_THROWS_AS(s.validate(), DomainError);
}
