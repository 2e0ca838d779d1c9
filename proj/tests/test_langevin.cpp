#include <catch_amalgamated.hpp>

#include <random>

#include "dce/langevin.hpp"
#include "oracles.hpp"

using namespace dce;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LangevinModel min_sym(double gamma, double G, TimeProfile omega = TimeProfile::constant(1.0)) {
    return LangevinModel(std::move(omega), min_noise_set(TimeProfile::constant(gamma), 1.0, G));
}

Mat2 m2(double a, double b, double c, double d) {
    Mat2 m;
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_CASE("drift matrix", "[langevin]") {
    CHECK(drift_matrix(min_sym(0.0, 1.0), 0.3) == m2(0, -1, 1, 0));
    CHECK(drift_matrix(min_sym(0.1, 1.0), 0.3) == m2(-0.1, -1, 1, -0.1));
    const LangevinModel asym(TimeProfile::constant(1.0),
                             asymmetric_noise_set(TimeProfile::constant(0.1), 1.0, 1.0, 1.0));
    CHECK((drift_matrix(asym, 0.0) - m2(-0.2, -1, 1, 0)).norm() <= 1e-16);
}

TEST_CASE("model rejects noise sets that break the commutator", "[langevin]") {
    NoiseSet n = min_noise_set(TimeProfile::constant(0.1), 1.0, 1.0);
    n.xp_factor = 0.5;
    CHECK_THROWS_AS(LangevinModel(TimeProfile::constant(1.0), n), DomainError);
    n.xp_factor = 1.5;
    n.px_factor = -0.5;
    CHECK_NOTHROW(LangevinModel(TimeProfile::constant(1.0), n));
    n = min_noise_set(TimeProfile::constant(0.1), 1.0, 1.0);
    n.y = 1.2;
    CHECK_THROWS_AS(LangevinModel(TimeProfile::constant(1.0), n), DomainError);
}

TEST_CASE("model invariants relate gamma, y and the quadrature rates", "[langevin][property]") {
    for (double y : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
        const LangevinModel m(TimeProfile::constant(1.0),
                              asymmetric_noise_set(TimeProfile::gaussian_pulse(0.2, 1.0, 0.3), y, 1.0, 1.2));
        for (double t : {0.5, 1.0, 1.4}) {
            const double gp = m.noise().gamma_p(t), gx = m.noise().gamma_x(t);
            CHECK_THAT(0.5 * (gp + gx), WithinRel(m.gamma()(t), 1e-15));
            CHECK_THAT((gp - gx) / (gp + gx), WithinAbs(y, 1e-15));
            CHECK_THAT(m.noise().chi_xp_imag(t) - m.noise().chi_px_imag(t), WithinRel(2.0 * m.gamma()(t), 1e-15));
        }
    }
}

TEST_CASE("undamped vacuum keeps its covariance", "[langevin]") {
    const auto traj = evolve_moments(min_sym(0.0, 1.0), MomentState::vacuum(), uniform_grid(20.0, 40));
    for (const auto& s : traj) CHECK((s.cov - 0.5 * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("stationary thermal state", "[langevin]") {
    for (double G : {1.0, 1.31304, 3.0}) {
        const double gamma = 0.1;
        const auto model = min_sym(gamma, G);
        const auto traj = evolve_moments(model, MomentState::coherent(0.3, -0.2), uniform_grid(20.0 / gamma, 20));
        const auto& last = traj.back();
        CHECK((last.cov - 0.5 * G * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-6);
        CHECK_THAT(photon_number(last), WithinAbs(0.5 * (G - 1.0), 1e-6));
        const Mat2 C = stationary_covariance(model.drift(0.0), model.diffusion(0.0));
        CHECK((C - 0.5 * G * Mat2::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("Lyapunov solve matches long-time moment evolution", "[langevin][property]") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(0.05, 0.4);
    for (int trial = 0; trial < 8; ++trial) {
        const double gamma = U(rng), y = 0.4 * U(rng), w = 0.5 + U(rng);
        const LangevinModel m(TimeProfile::constant(w),
                              asymmetric_noise_set(TimeProfile::constant(gamma), y, w, 1.0 + U(rng)));
        const Mat2 C = stationary_covariance(m.drift(0.0), m.diffusion(0.0));
        const Mat2 A = m.drift(0.0), D = m.diffusion(0.0);
        CHECK((A * C + C * A.transpose() + 2.0 * D).cwiseAbs().maxCoeff() <= 1e-13);
        const double t_end = 40.0 / ((1.0 - y) * gamma);
        const auto traj = evolve_moments(m, MomentState::vacuum(), {0.0, t_end});
        CHECK((traj.back().cov - C).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("tabulated coefficients", "[langevin]") {
    std::vector<ReducedDynamics> recs(3);
    for (int i = 0; i < 3; ++i) {
        recs[static_cast<std::size_t>(i)].t = i;
        recs[static_cast<std::size_t>(i)].A = Mat2::Constant(i);
        recs[static_cast<std::size_t>(i)].D = Mat2::Constant(2 * i);
    }
    const TabulatedCoefficients tab(recs);
    CHECK(tab.drift(1.0) == Mat2::Constant(1.0));
    CHECK(tab.diffusion(2.0) == Mat2::Constant(4.0));
    CHECK(tab.drift(1.5) == Mat2::Constant(1.5));
    CHECK_THROWS_AS(tab.drift(2.5), DomainError);
}

TEST_CASE("effective frequency", "[langevin]") {
    const auto pulse = TimeProfile::exp_rise_decay(0.005, 0.0, 0.0785, 0.4712);
    const LangevinModel sym(TimeProfile::gaussian_pulse(-0.01, 2.0, 0.5, 1.0), min_noise_set(pulse, 1.0, 1.0));
    for (double t : {0.0, 0.3, 1.7, 2.0, 5.0}) {
        const double w = sym.omega()(t);
        CHECK(effective_frequency(sym, t) == w * w);
    }

    const LangevinModel asym(TimeProfile::constant(1.0),
                             asymmetric_noise_set(TimeProfile::constant(0.1), 1.0, 1.0, 1.0));
    CHECK_THAT(effective_frequency(asym, 3.0), WithinAbs(0.99, 1e-15));

    // short pulse: the derivative term dominates the squared term
    const LangevinModel mir(TimeProfile::constant(1.0), asymmetric_noise_set(pulse, 0.5, 1.0, 1.0));
    const auto terms = effective_frequency_terms(mir, 0.05);
    CHECK(std::abs(terms.delta_dot) > 100.0 * terms.delta_sq);

    const LangevinModel step(TimeProfile::constant(1.0),
                             asymmetric_noise_set(TimeProfile::exp_rise_decay(0.1, 1.0, 0.0, 0.5), 0.5, 1.0, 1.0));
    CHECK_THROWS_AS(effective_frequency(step, 1.5), DomainError);
}

TEST_CASE("epsilon equation", "[langevin]") {
    const auto grid = uniform_grid(30.0, 60);
    EpsilonOptions fine;
    fine.max_step = 2e-3;
    const auto free = epsilon_solver(min_sym(0.0, 1.0), grid, fine);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(std::abs(free.eps[i] - std::exp(Complex(0.0, grid[i]))) <= 1e-9);

    const LangevinModel ramp(TimeProfile::piecewise_linear({{0.0, 1.0}, {30.0, 2.0}}), min_noise_set(TimeProfile::constant(0.0), 1.0, 1.0));
    const auto adiabatic = epsilon_solver(ramp, grid);
    CHECK(adiabatic.max_wronskian_drift <= 1e-8);
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(std::abs(std::abs(adiabatic.eps[i]) - std::abs(adiabatic.eps[i - 1])) < 0.1);

    CHECK_THROWS_AS(epsilon_solver(ramp, {0.5, 1.0}), DomainError);
}

TEST_CASE("asymmetric damping changes the epsilon solution", "[langevin]") {
    const auto gamma = TimeProfile::pulse_train(TimeProfile::exp_rise_decay(0.005, 0.0, 0.0785, 0.4712), kPi, 10);
    const auto omega = TimeProfile::pulse_train(TimeProfile::exp_rise_decay(-0.01, 0.0, 0.0785, 0.4712, 1.0), kPi, 10);
    const auto grid = uniform_grid(10 * kPi, 10);
    const auto a = epsilon_solver(LangevinModel(omega, asymmetric_noise_set(gamma, 0.0, 1.0, 1.0)), grid);
    const auto b = epsilon_solver(LangevinModel(omega, asymmetric_noise_set(gamma, 0.5, 1.0, 1.0)), grid);
    CHECK(std::abs(std::abs(a.eps.back()) - std::abs(b.eps.back())) > 1e-6);
}

TEST_CASE("noiseless trajectories are deterministic rotations", "[langevin]") {
    const auto grid = uniform_grid(kPi, 8);
    MomentState start{Vec2(1.0, 0.0), Mat2::Zero()};
    SampleOptions o;
    o.max_step = 1e-4;
    const auto s = sample_trajectories(min_sym(0.0, 1.0), start, grid, 4, 9, o);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(std::abs(s.estimate[i].mean[0] - std::cos(grid[i])) <= 1e-3);
        CHECK(std::abs(s.estimate[i].mean[1] - std::sin(grid[i])) <= 1e-3);
        CHECK(s.estimate[i].cov.cwiseAbs().maxCoeff() <= 1e-24);
    }
}

TEST_CASE("sampled moments agree with moment evolution", "[langevin]") {
    const double G = 1.5;
    const auto model = min_sym(0.5, G);
    const auto grid = uniform_grid(16.0, 8);
    SampleOptions o;
    o.max_step = 4e-3;
    const auto sampled = sample_trajectories(model, MomentState::vacuum(), grid, 10000, 2024, o);
    const auto exact = evolve_moments(model, MomentState::vacuum(), grid);
    CHECK(sampled.count == 10000);
    CHECK(sampled.seed == 2024);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (int a = 0; a < 2; ++a) {
            CHECK(std::abs(sampled.estimate[i].mean[a] - exact[i].mean[a]) <= 3.0 * sampled.se_mean[i][a]);
            for (int b = 0; b < 2; ++b)
                CHECK(std::abs(sampled.estimate[i].cov(a, b) - exact[i].cov(a, b)) <= 3.0 * sampled.se_cov[i](a, b));
        }
    CHECK((sampled.estimate.back().cov - 0.5 * G * Mat2::Identity()).cwiseAbs().maxCoeff() <=
          3.0 * sampled.se_cov.back().maxCoeff());
}

TEST_CASE("sampling is reproducible and independent of the worker count", "[langevin][property]") {
    const auto model = min_sym(0.2, 1.2);
    const auto grid = uniform_grid(5.0, 5);
    SampleOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = sample_trajectories(model, MomentState::vacuum(), grid, 1000, 77, one);
    const auto b = sample_trajectories(model, MomentState::vacuum(), grid, 1000, 77, four);
    const auto c = sample_trajectories(model, MomentState::vacuum(), grid, 1000, 78, one);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(a.estimate[i].cov == b.estimate[i].cov);
        CHECK(a.estimate[i].mean == b.estimate[i].mean);
    }
    CHECK(a.estimate.back().cov != c.estimate.back().cov);
    CHECK_THROWS_AS(sample_trajectories(model, MomentState::vacuum(), grid, 1, 1), DomainError);
}

TEST_CASE("Euler-Maruyama bias shrinks with the step", "[langevin]") {
    // the same seed in every run keeps the statistical noise common to all steps
    const auto model = min_sym(0.05, 1.0);
    const auto grid = uniform_grid(5.0, 1);
    const auto exact = evolve_moments(model, MomentState::vacuum(), grid).back();
    double prev = 0.0;
    for (double h : {0.04, 0.02, 0.01}) {
        SampleOptions o;
        o.max_step = h;
        const auto s = sample_trajectories(model, MomentState::vacuum(), grid, 8000, 5, o);
        const double bias = s.estimate.back().cov.trace() - exact.cov.trace();
        if (prev != 0.0) CHECK(bias < prev);
        prev = bias;
    }
}

TEST_CASE("Euler-Maruyama chain moments", "[langevin]") {
    const auto m = min_sym(0.0, 1.0);
    SampleOptions o;
    o.max_step = 0.01;
    // Undamped rotation: each step multiplies the covariance by (1 + h^2).
    const auto c = em_chain_moments(m, CentralGaussian::vacuum(), {0.0, 1.0}, o);
    CHECK_THAT(c.back().cov(0, 0), WithinRel(0.5 * std::pow(1.0 + 1e-4, 100), 1e-12));
    CHECK_THAT(c.back().cov(0, 1), WithinAbs(0.0, 1e-14));

    // Independent recursion with damping and noise.
    const auto d = min_sym(0.3, 2.0);
    const auto e = em_chain_moments(d, CentralGaussian::coherent(0.2, 1.0), {0.0, 0.5}, o);
    Vec2 mean(0.2, 1.0);
    Mat2 cov = 0.5 * Mat2::Identity();
    const Mat2 M = Mat2::Identity() + 0.01 * d.drift(0.0);
    for (int k = 0; k < 50; ++k) {
        mean = M * mean;
        cov = M * cov * M.transpose() + 0.02 * d.diffusion(0.0);
    }
    CHECK((e.back().mean - mean).norm() <= 1e-14);
    CHECK((e.back().cov - cov).norm() <= 1e-14);

    // Step bias against the continuous moments shrinks linearly.
    const auto exact = evolve_moments(d, CentralGaussian::vacuum(), {0.0, 5.0});
    double prev = 0.0;
    for (double h : {0.02, 0.01, 0.005}) {
        o.max_step = h;
        const double bias = (em_chain_moments(d, CentralGaussian::vacuum(), {0.0, 5.0}, o).back().cov -
                             exact.back().cov).norm();
        if (prev > 0.0) CHECK_THAT(prev / bias, WithinAbs(2.0, 0.1));
        prev = bias;
    }
}
