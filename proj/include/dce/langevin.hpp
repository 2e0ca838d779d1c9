#pragma once

// Phenomenological damped oscillator
//   dx/dt = p - gamma_x x + F_x,   dp/dt = -gamma_p p - omega^2 x + F_p,
// with delta-correlated noises. In (p, x) ordering the drift is
//   A = [[-gamma_p, -omega^2], [1, -gamma_x]]
// and second moments obey cov' = A cov + cov A^T + 2D.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dce/common.hpp"
#include "dce/parallel.hpp"
#include "dce/perturb.hpp"
#include "dce/profiles.hpp"
#include "dce/propagate.hpp"
#include "dce/reduce.hpp"

namespace dce {

using MomentState = CentralGaussian;

class LangevinModel {
public:
    // Rejects noise sets that violate chi_xp - chi_px = 2 i gamma.
    LangevinModel(TimeProfile omega, NoiseSet noise) : omega_(std::move(omega)), noise_(std::move(noise)) {
        const double closure = noise_.xp_factor - noise_.px_factor - 2.0;
        if (std::abs(closure) > 4.0 * std::numeric_limits<double>::epsilon())
            throw DomainError("noise set violates the commutator condition chi_xp - chi_px = 2 i gamma");
        if (!(noise_.y >= -1.0 && noise_.y <= 1.0)) throw DomainError("asymmetry y must lie in [-1, 1]");
        if (!(noise_.omega0 > 0.0)) throw DomainError("omega0 must be > 0");
        gamma_continuous_ = noise_.gamma.is_continuous();
    }

    const TimeProfile& omega() const { return omega_; }
    const NoiseSet& noise() const { return noise_; }
    const TimeProfile& gamma() const { return noise_.gamma; }
    double y() const { return noise_.y; }
    double omega0() const { return noise_.omega0; }
    bool gamma_continuous() const { return gamma_continuous_; }

    Mat2 drift(double t) const {
        const double w = omega_(t);
        Mat2 a;
        a << -noise_.gamma_p(t), -w * w, 1.0, -noise_.gamma_x(t);
        return a;
    }

    Mat2 diffusion(double t) const { return noise_.diffusion(t); }

    double default_step() const {
        const double wmax = std::abs(omega_.baseline()) + omega_.peak_abs();
        double scale = 2.0 * kPi / wmax;
        scale = std::min(scale, omega_.characteristic_time());
        scale = std::min(scale, noise_.gamma.characteristic_time());
        return scale / 400.0;
    }

private:
    TimeProfile omega_;
    NoiseSet noise_;
    bool gamma_continuous_ = true;
};

inline Mat2 drift_matrix(const LangevinModel& model, double t) { return model.drift(t); }

// Drift and diffusion tabulated from a microscopic run. Lookups at sample
// times are exact; anything in between is linearly interpolated.
class TabulatedCoefficients {
public:
    explicit TabulatedCoefficients(const std::vector<ReducedDynamics>& records) {
        if (records.size() < 2) throw DomainError("tabulated coefficients need at least two samples");
        for (const auto& r : records) {
            t_.push_back(r.t);
            A_.push_back(r.A);
            D_.push_back(r.D);
        }
    }

    Mat2 drift(double t) const { return lookup(A_, t); }
    Mat2 diffusion(double t) const { return lookup(D_, t); }
    double default_step() const { return 2.0 * (t_[1] - t_[0]); }

private:
    Mat2 lookup(const std::vector<Mat2>& v, double t) const {
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        if (t < t_.front() - tol || t > t_.back() + tol)
            throw DomainError("tabulated coefficients queried outside the sampled range");
        auto it = std::lower_bound(t_.begin(), t_.end(), t - tol);
        auto i = static_cast<std::size_t>(it - t_.begin());
        if (i < t_.size() && std::abs(t_[i] - t) <= tol) return v[i];
        i = std::clamp<std::size_t>(i, 1, t_.size() - 1);
        const double w = (t - t_[i - 1]) / (t_[i] - t_[i - 1]);
        return (1.0 - w) * v[i - 1] + w * v[i];
    }

    std::vector<double> t_;
    std::vector<Mat2> A_;
    std::vector<Mat2> D_;
};

struct MomentOptions {
    double max_step = 0.0;  // <= 0: source.default_step()
};

// RK4 on (mean, cov) for any coefficient source with drift(t), diffusion(t)
// and default_step(). The covariance is re-symmetrized after every step.
template <class Source>
std::vector<MomentState> evolve_moments(const Source& source, const MomentState& state0,
                                        const std::vector<double>& grid, const MomentOptions& options = {}) {
    if (grid.empty()) throw DomainError("empty time grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
    const double h = options.max_step > 0.0 ? options.max_step : source.default_step();

    using Block = Eigen::Matrix<double, 2, 3>;
    auto rhs = [&source](double t, const Block& y) -> Block {
        const Mat2 A = source.drift(t);
        const Mat2 C = y.rightCols<2>();
        Block out;
        out.col(0) = A * y.col(0);
        out.rightCols<2>() = A * C + C * A.transpose() + 2.0 * source.diffusion(t);
        return out;
    };

    std::vector<MomentState> out;
    out.reserve(grid.size());
    Block y;
    y.col(0) = state0.mean;
    y.rightCols<2>() = state0.cov;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            const double dt = grid[i] - grid[i - 1];
            const int n = detail::substeps(dt, h);
            const double hs = dt / n;
            for (int k = 0; k < n; ++k) {
                detail::rk4_advance(y, grid[i - 1] + k * hs, hs, 1, rhs);
                const Mat2 C = y.rightCols<2>();
                y.rightCols<2>() = symmetrized(C);
            }
            if (!y.allFinite()) throw IntegrationError("moment evolution became non-finite", grid[i]);
        }
        out.push_back({y.col(0), y.rightCols<2>()});
    }
    return out;
}

// Solves A C + C A^T + 2D = 0 for the stationary covariance.
inline Mat2 stationary_covariance(const Mat2& A, const Mat2& D) {
    const Mat2 I = Mat2::Identity();
    Eigen::Matrix4d K;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            K.block<2, 2>(2 * j, 2 * i) = I(j, i) * A + A(j, i) * I;  // kron(I, A) + kron(A, I)
        }
    Eigen::Vector4d rhs;
    const Mat2 m = -2.0 * D;
    rhs << m(0, 0), m(1, 0), m(0, 1), m(1, 1);
    const Eigen::Vector4d c = K.fullPivLu().solve(rhs);
    Mat2 C;
    C << c[0], c[2], c[1], c[3];
    return symmetrized(C);
}

struct EffectiveFrequencyTerms {
    double omega_sq = 0.0;
    double delta_dot = 0.0;
    double delta_sq = 0.0;

    double total() const { return omega_sq + delta_dot - delta_sq; }
};

// omega^2, d(delta)/dt and delta^2 with delta = (gamma_x - gamma_p)/2 = -y gamma.
inline EffectiveFrequencyTerms effective_frequency_terms(const LangevinModel& model, double t) {
    const double w = model.omega()(t);
    EffectiveFrequencyTerms terms{w * w, 0.0, 0.0};
    if (model.y() == 0.0) return terms;
    if (!model.gamma_continuous())
        throw DomainError("effective frequency needs a continuous gamma(t) when y != 0; smooth the profile");
    const double delta = -model.y() * model.gamma()(t);
    terms.delta_dot = -model.y() * model.gamma().derivative(t);
    terms.delta_sq = delta * delta;
    return terms;
}

// omega_ef^2 = omega^2 + delta' - delta^2; exactly omega^2 when y = 0.
inline double effective_frequency(const LangevinModel& model, double t) {
    if (model.y() == 0.0) {
        const double w = model.omega()(t);
        return w * w;
    }
    return effective_frequency_terms(model, t).total();
}

struct EpsilonSolution {
    std::vector<double> t;
    std::vector<Complex> eps;
    std::vector<Complex> deps;
    double max_wronskian_drift = 0.0;  // relative
};

struct EpsilonOptions {
    double max_step = 0.0;
    double wronskian_limit = 1e-6;
};

// eps'' + omega_ef^2(t) eps = 0 with eps(0) = 1, eps'(0) = i omega0.
inline EpsilonSolution epsilon_solver(const LangevinModel& model, const std::vector<double>& grid,
                                      const EpsilonOptions& options = {}) {
    if (grid.empty() || grid.front() != 0.0) throw DomainError("epsilon grid must start at 0");
    const double h = options.max_step > 0.0 ? options.max_step : model.default_step();
    using CVec2 = Eigen::Vector2cd;
    auto rhs = [&model](double t, const CVec2& y) -> CVec2 {
        return CVec2(y[1], -effective_frequency(model, t) * y[0]);
    };
    auto wronskian = [](const CVec2& y) { return y[1] * std::conj(y[0]) - std::conj(y[1]) * y[0]; };

    EpsilonSolution sol;
    CVec2 y(Complex(1.0, 0.0), Complex(0.0, model.omega0()));
    const Complex w0 = wronskian(y);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (i > 0) {
            if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
            const double dt = grid[i] - grid[i - 1];
            detail::rk4_advance(y, grid[i - 1], dt, detail::substeps(dt, h), rhs);
        }
        const double drift = std::abs(wronskian(y) - w0) / std::abs(w0);
        if (!std::isfinite(drift) || drift > options.wronskian_limit)
            throw IntegrationError("Wronskian of the epsilon equation not conserved", grid[i]);
        sol.max_wronskian_drift = std::max(sol.max_wronskian_drift, drift);
        sol.t.push_back(grid[i]);
        sol.eps.push_back(y[0]);
        sol.deps.push_back(y[1]);
    }
    return sol;
}

struct SampleOptions {
    double max_step = 0.0;
    int threads = 0;
    std::size_t chunk = 64;  // trajectories per reduction block
};

struct TrajectorySummary {
    std::vector<double> t;
    std::vector<MomentState> estimate;
    std::vector<Vec2> se_mean;
    std::vector<Mat2> se_cov;
    std::size_t count = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// L with L L^T = S for symmetric PSD S (negative eigenvalues clamped).
inline Mat2 psd_sqrt(const Mat2& S) {
    Eigen::SelfAdjointEigenSolver<Mat2> es(symmetrized(S));
    const Vec2 ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}


// Every trajectory shares the same step sequence, so the per-step maps
// q -> (I + h A) q + sqrt(h) L xi are tabulated once.
struct EmStep {
    Mat2 M;
    Mat2 S;
};

struct EmTable {
    std::vector<EmStep> steps;
    std::vector<std::size_t> ends;  // steps[0, ends[g]) reach grid[g]
};

template <class Source>
EmTable em_steps(const Source& source, const std::vector<double>& grid, double h) {
    EmTable out;
    out.ends.assign(grid.size(), 0);
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const double dt = grid[g] - grid[g - 1];
        if (!(dt > 0.0)) throw DomainError("time grid must be strictly increasing");
        const int n = substeps(dt, h);
        const double hs = dt / n;
        for (int k = 0; k < n; ++k) {
            const double t = grid[g - 1] + k * hs;
            out.steps.push_back(
                {Mat2::Identity() + hs * source.drift(t), std::sqrt(hs) * psd_sqrt(2.0 * source.diffusion(t))});
        }
        out.ends[g] = out.steps.size();
    }
    return out;
}

}  // namespace detail

// Euler-Maruyama sampling of dQ = A Q dt + L dW with L L^T = 2D. Only the
// symmetric noise part can be realized classically. Trajectory i draws from
// its own stream seeded by (seed, i), and partial sums are reduced in a fixed
// block order, so results do not depend on the worker count.
template <class Source>
TrajectorySummary sample_trajectories(const Source& source, const MomentState& state0,
                                      const std::vector<double>& grid, std::size_t count, std::uint64_t seed,
                                      const SampleOptions& options = {}) {
    if (count < 2) throw DomainError("sample_trajectories needs count >= 2");
    if (grid.empty()) throw DomainError("empty time grid");
    const double h = options.max_step > 0.0 ? options.max_step : source.default_step();
    const std::size_t m = grid.size();

    struct Partial {
        std::vector<Vec2> s1;
        std::vector<Mat2> s2;
    };
    const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
    const std::size_t blocks = (count + chunk - 1) / chunk;
    std::vector<Partial> partial(blocks);
    const Mat2 L0 = detail::psd_sqrt(state0.cov);

    const auto table = detail::em_steps(source, grid, h);
    const auto& steps = table.steps;
    const auto& ends = table.ends;

    parallel_for(blocks, options.threads, [&](std::size_t b) {
        Partial& acc = partial[b];
        acc.s1.assign(m, Vec2::Zero());
        acc.s2.assign(m, Mat2::Zero());
        const std::size_t end = std::min(count, (b + 1) * chunk);
        for (std::size_t i = b * chunk; i < end; ++i) {
            std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(i)));
            std::normal_distribution<double> normal(0.0, 1.0);
            Vec2 q = state0.mean + L0 * Vec2(normal(rng), normal(rng));
            std::size_t k = 0;
            for (std::size_t g = 0; g < m; ++g) {
                for (; k < ends[g]; ++k) {
                    const Vec2 xi(normal(rng), normal(rng));
                    q = steps[k].M * q + steps[k].S * xi;
                }
                acc.s1[g] += q;
                acc.s2[g] += q * q.transpose();
            }
        }
    });

    TrajectorySummary out;
    out.t = grid;
    out.count = count;
    out.seed = seed;
    const double n = static_cast<double>(count);
    for (std::size_t g = 0; g < m; ++g) {
        Vec2 s1 = Vec2::Zero();
        Mat2 s2 = Mat2::Zero();
        for (const auto& p : partial) {
            s1 += p.s1[g];
            s2 += p.s2[g];
        }
        const Vec2 mean = s1 / n;
        const Mat2 cov = symmetrized((s2 - n * mean * mean.transpose()) / (n - 1.0));
        out.estimate.push_back({mean, cov});
        out.se_mean.push_back((cov.diagonal() / n).cwiseSqrt());
        Mat2 se;
        for (int a = 0; a < 2; ++a)
            for (int c = 0; c < 2; ++c) se(a, c) = std::sqrt((cov(a, a) * cov(c, c) + cov(a, c) * cov(a, c)) / n);
        out.se_cov.push_back(se);
    }
    return out;
}

// Exact first and second moments of the Euler-Maruyama chain itself,
// C -> M C M^T + S S^T. Differs from evolve_moments by the O(h) step bias.
template <class Source>
std::vector<MomentState> em_chain_moments(const Source& source, const MomentState& state0,
                                          const std::vector<double>& grid, const SampleOptions& options = {}) {
    if (grid.empty()) throw DomainError("empty time grid");
    const double h = options.max_step > 0.0 ? options.max_step : source.default_step();
    const auto table = detail::em_steps(source, grid, h);
    std::vector<MomentState> out;
    MomentState s = state0;
    std::size_t k = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (; k < table.ends[g]; ++k) {
            const auto& st = table.steps[k];
            s.mean = st.M * s.mean;
            s.cov = symmetrized(st.M * s.cov * st.M.transpose() + st.S * st.S.transpose());
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace dce
