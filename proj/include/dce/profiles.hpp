#pragma once

// Scalar time profiles driving nu(t), omega(t) and gamma(t).
//
// Every profile has the form  baseline + amplitude * shape(t)  where shape is
// normalized to unit peak. Times are in units of 1/omega0. Integrals of all
// kinds are closed-form so that derived quantities such as lambda(t) carry no
// quadrature noise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dce/common.hpp"

namespace dce {

enum class ProfileKind { constant, gaussian_pulse, exp_rise_decay_pulse, pulse_train, piecewise_linear };

inline std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::constant: return "constant";
        case ProfileKind::gaussian_pulse: return "gaussian-pulse";
        case ProfileKind::exp_rise_decay_pulse: return "exp-rise-decay";
        case ProfileKind::pulse_train: return "pulse-train";
        case ProfileKind::piecewise_linear: return "piecewise-linear";
    }
    return "unknown";
}

namespace shapes {

struct Flat {};

// exp(-(t - center)^2 / (2 width^2))
struct Gaussian {
    double center;
    double width;
};

// (1 - exp(-s/rise)) exp(-s/decay) / peak for s = t - onset >= 0, zero before
// the onset. rise == 0 is an instantaneous switch-on.
struct ExpRiseDecay {
    double onset;
    double rise;
    double decay;

    double peak() const {
        if (rise <= 0.0) return 1.0;
        const double a = rise, b = decay;
        return b / (a + b) * std::pow(a / (a + b), a / b);
    }
};

// Linear interpolation through (t_i, v_i); times strictly increasing.
struct PiecewiseLinear {
    std::vector<double> t;
    std::vector<double> v;
};

using Pulse = std::variant<Gaussian, ExpRiseDecay, PiecewiseLinear>;

// `count` windows of length `period` starting at `start`; inside window k the
// base pulse is evaluated at the local time t - start - k*period.
struct Train {
    Pulse base;
    double start;
    double period;
    int count;
};

inline double value(const Gaussian& g, double t) {
    const double s = (t - g.center) / g.width;
    return std::exp(-0.5 * s * s);
}

inline double value(const ExpRiseDecay& e, double t) {
    const double s = t - e.onset;
    if (s < 0.0) return 0.0;
    if (e.rise <= 0.0) return std::exp(-s / e.decay);
    return -std::expm1(-s / e.rise) * std::exp(-s / e.decay) / e.peak();
}

// Zero outside the sample range (used when the table acts as a train base).
inline double value(const PiecewiseLinear& p, double t) {
    if (t < p.t.front() || t > p.t.back()) return 0.0;
    auto it = std::upper_bound(p.t.begin(), p.t.end(), t);
    if (it == p.t.end()) return p.v.back();
    const auto i = static_cast<std::size_t>(it - p.t.begin());
    const double w = (t - p.t[i - 1]) / (p.t[i] - p.t[i - 1]);
    return p.v[i - 1] + w * (p.v[i] - p.v[i - 1]);
}

// Antiderivatives anchored at -infinity (zero before the pulse support).
inline double antiderivative(const Gaussian& g, double t) {
    return g.width * std::sqrt(kPi / 2.0) * (1.0 + std::erf((t - g.center) / (std::sqrt(2.0) * g.width)));
}

inline double antiderivative(const ExpRiseDecay& e, double t) {
    const double s = t - e.onset;
    if (s <= 0.0) return 0.0;
    const double slow = -e.decay * std::expm1(-s / e.decay);
    if (e.rise <= 0.0) return slow;
    const double c = e.rise * e.decay / (e.rise + e.decay);
    return (slow + c * std::expm1(-s / c)) / e.peak();
}

inline double antiderivative(const PiecewiseLinear& p, double t) {
    if (t <= p.t.front()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 1; i < p.t.size(); ++i) {
        const double a = p.t[i - 1], b = p.t[i];
        if (t >= b) {
            acc += 0.5 * (b - a) * (p.v[i - 1] + p.v[i]);
            continue;
        }
        const double vt = value(p, t);
        acc += 0.5 * (t - a) * (p.v[i - 1] + vt);
        return acc;
    }
    return acc;
}

inline double derivative(const Gaussian& g, double t) {
    const double s = t - g.center;
    return -s / (g.width * g.width) * value(g, t);
}

// Right derivative at the onset.
inline double derivative(const ExpRiseDecay& e, double t) {
    const double s = t - e.onset;
    if (s < 0.0) return 0.0;
    const double fall = std::exp(-s / e.decay);
    if (e.rise <= 0.0) return -fall / e.decay;
    const double rise = -std::expm1(-s / e.rise);
    return (std::exp(-s / e.rise) / e.rise * fall - rise * fall / e.decay) / e.peak();
}

inline double derivative(const PiecewiseLinear& p, double t) {
    // Slopes are ill-defined at the nodes; a centered difference smooths them.
    constexpr double h = 1e-4;
    const double lo = std::max(t - h, p.t.front());
    const double hi = std::min(t + h, p.t.back());
    if (hi <= lo) return 0.0;
    return (value(p, hi) - value(p, lo)) / (hi - lo);
}

inline double time_scale(const Gaussian& g) { return g.width; }
inline double time_scale(const ExpRiseDecay& e) { return e.decay; }
inline double time_scale(const PiecewiseLinear& p) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < p.t.size(); ++i) m = std::min(m, p.t[i] - p.t[i - 1]);
    return m;
}

inline double peak(const Gaussian&) { return 1.0; }
inline double peak(const ExpRiseDecay&) { return 1.0; }
inline double peak(const PiecewiseLinear& p) {
    double m = 0.0;
    for (double v : p.v) m = std::max(m, std::abs(v));
    return m;
}

// Largest jump of the shape at its own support boundaries, viewed on [0, inf).
inline double own_jump(const Gaussian&) { return 0.0; }
inline double own_jump(const ExpRiseDecay& e) { return (e.rise <= 0.0 && e.onset > 0.0) ? 1.0 : 0.0; }
inline double own_jump(const PiecewiseLinear& p) {
    const double left = p.t.front() > 0.0 ? std::abs(p.v.front()) : 0.0;
    return std::max(left, std::abs(p.v.back()));
}

inline double value(const Train& tr, double t) {
    const double local = t - tr.start;
    if (local < 0.0 || local >= tr.period * tr.count) return 0.0;
    const double k = std::floor(local / tr.period);
    const double tau = local - k * tr.period;
    return std::visit([tau](const auto& b) { return value(b, tau); }, tr.base);
}

inline double antiderivative(const Train& tr, double t) {
    const double span = tr.period * tr.count;
    const double local = std::clamp(t - tr.start, 0.0, span);
    auto base_int = [&tr](double tau) {
        return std::visit([tau](const auto& b) { return antiderivative(b, tau) - antiderivative(b, 0.0); }, tr.base);
    };
    double k = std::floor(local / tr.period);
    if (k > tr.count) k = tr.count;
    const double rem = local - k * tr.period;
    return k * base_int(tr.period) + base_int(rem);
}

inline double derivative(const Train& tr, double t) {
    const double local = t - tr.start;
    if (local < 0.0 || local >= tr.period * tr.count) return 0.0;
    const double tau = local - std::floor(local / tr.period) * tr.period;
    return std::visit([tau](const auto& b) { return derivative(b, tau); }, tr.base);
}

}  // namespace shapes

class TimeProfile {
public:
    static TimeProfile constant(double value) { return TimeProfile(value, 0.0, shapes::Flat{}); }

    static TimeProfile gaussian_pulse(double amplitude, double center, double width, double baseline = 0.0) {
        if (!(width > 0.0)) throw DomainError("gaussian-pulse width must be > 0");
        return TimeProfile(baseline, amplitude, shapes::Gaussian{center, width});
    }

    static TimeProfile exp_rise_decay(double amplitude, double onset, double rise, double decay,
                                      double baseline = 0.0) {
        if (!(decay > 0.0)) throw DomainError("exp-rise-decay decay time must be > 0");
        if (rise < 0.0) throw DomainError("exp-rise-decay rise time must be >= 0");
        return TimeProfile(baseline, amplitude, shapes::ExpRiseDecay{onset, rise, decay});
    }

    static TimeProfile piecewise_linear(const std::vector<std::pair<double, double>>& points,
                                        double amplitude = 1.0, double baseline = 0.0) {
        if (points.size() < 2) throw DomainError("piecewise-linear needs at least two points");
        shapes::PiecewiseLinear p;
        for (const auto& [t, v] : points) {
            if (!p.t.empty() && !(t > p.t.back()))
                throw DomainError("piecewise-linear times must be strictly increasing");
            p.t.push_back(t);
            p.v.push_back(v);
        }
        return TimeProfile(baseline, amplitude, std::move(p));
    }

    // Repeats the pulse of `base` (amplitude and baseline are inherited).
    static TimeProfile pulse_train(const TimeProfile& base, double period, int count, double start = 0.0) {
        if (!(period > 0.0)) throw DomainError("pulse-train period must be > 0");
        if (count < 1) throw DomainError("pulse-train count must be >= 1");
        shapes::Pulse pulse = std::visit(
            [](const auto& s) -> shapes::Pulse {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Gaussian> || std::is_same_v<S, shapes::ExpRiseDecay> ||
                              std::is_same_v<S, shapes::PiecewiseLinear>)
                    return s;
                else
                    throw DomainError("pulse-train base must be a single pulse");
            },
            base.shape_);
        return TimeProfile(base.baseline_, base.amplitude_, shapes::Train{std::move(pulse), start, period, count});
    }

    ProfileKind kind() const {
        return std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Flat>) return ProfileKind::constant;
                else if constexpr (std::is_same_v<S, shapes::Gaussian>) return ProfileKind::gaussian_pulse;
                else if constexpr (std::is_same_v<S, shapes::ExpRiseDecay>) return ProfileKind::exp_rise_decay_pulse;
                else if constexpr (std::is_same_v<S, shapes::PiecewiseLinear>) return ProfileKind::piecewise_linear;
                else return ProfileKind::pulse_train;
            },
            shape_);
    }

    double baseline() const { return baseline_; }
    double amplitude() const { return amplitude_; }

    // Declared domain [lower, upper].
    double lower() const {
        if (const auto* p = std::get_if<shapes::PiecewiseLinear>(&shape_)) return p->t.front();
        return 0.0;
    }
    double upper() const {
        if (const auto* p = std::get_if<shapes::PiecewiseLinear>(&shape_)) return p->t.back();
        return std::numeric_limits<double>::infinity();
    }

    double operator()(double t) const {
        check_domain(t);
        return baseline_ + amplitude_ * shape_value(t);
    }
    double eval(double t) const { return (*this)(t); }

    // Integral over [t0, t1]; a reversed interval yields the negated integral.
    double integral(double t0, double t1) const {
        check_domain(t0);
        check_domain(t1);
        return baseline_ * (t1 - t0) + amplitude_ * (shape_antiderivative(t1) - shape_antiderivative(t0));
    }

    // Analytic for parametric kinds, centered difference for piecewise-linear.
    double derivative(double t) const {
        check_domain(t);
        return std::visit(
            [this, t](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Flat>) return 0.0;
                else return amplitude_ * shapes::derivative(s, t);
            },
            shape_);
    }

    // Largest value jump anywhere inside the domain.
    double max_jump() const {
        return std::abs(amplitude_) *
               std::visit(
                   [](const auto& s) -> double {
                       using S = std::decay_t<decltype(s)>;
                       if constexpr (std::is_same_v<S, shapes::Flat>) return 0.0;
                       else if constexpr (std::is_same_v<S, shapes::Train>) {
                           return std::visit(
                               [&s](const auto& b) {
                                   const double wrap = std::abs(shapes::value(b, s.period) - shapes::value(b, 0.0));
                                   return std::max(shapes::own_jump(b), wrap);
                               },
                               s.base);
                       } else if constexpr (std::is_same_v<S, shapes::PiecewiseLinear>) {
                           return 0.0;  // interpolated table is continuous on its own domain
                       } else {
                           return shapes::own_jump(s);
                       }
                   },
                   shape_);
    }

    // Jumps below rel_tol * peak are treated as negligible.
    bool is_continuous(double rel_tol = 1e-2) const { return max_jump() <= rel_tol * peak_abs(); }

    // Largest |amplitude * shape|, not counting the baseline.
    double peak_abs() const {
        return std::abs(amplitude_) *
               std::visit(
                   [](const auto& s) -> double {
                       using S = std::decay_t<decltype(s)>;
                       if constexpr (std::is_same_v<S, shapes::Flat>) return 0.0;
                       else if constexpr (std::is_same_v<S, shapes::Train>)
                           return std::visit([](const auto& b) { return shapes::peak(b); }, s.base);
                       else return shapes::peak(s);
                   },
                   shape_);
    }

    // Shortest intrinsic time scale; +inf for constants.
    double characteristic_time() const {
        return std::visit(
            [](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Flat>) return std::numeric_limits<double>::infinity();
                else if constexpr (std::is_same_v<S, shapes::Train>)
                    return std::visit([](const auto& b) { return shapes::time_scale(b); }, s.base);
                else return shapes::time_scale(s);
            },
            shape_);
    }

    bool is_zero() const { return baseline_ == 0.0 && amplitude_ == 0.0; }

    TimeProfile scaled(double c) const { return TimeProfile(c * baseline_, c * amplitude_, shape_); }
    TimeProfile with_baseline(double b) const { return TimeProfile(b, amplitude_, shape_); }

    const auto& shape() const { return shape_; }

private:
    using Shape = std::variant<shapes::Flat, shapes::Gaussian, shapes::ExpRiseDecay, shapes::PiecewiseLinear,
                               shapes::Train>;

    TimeProfile(double baseline, double amplitude, Shape shape)
        : baseline_(baseline), amplitude_(amplitude), shape_(std::move(shape)) {}

    void check_domain(double t) const {
        if (!(t >= lower() && t <= upper()))
            throw DomainError(to_string(kind()) + " profile evaluated at t = " + std::to_string(t) +
                              " outside its domain");
    }

    double shape_value(double t) const {
        return std::visit(
            [t](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Flat>) return 0.0;
                else return shapes::value(s, t);
            },
            shape_);
    }

    double shape_antiderivative(double t) const {
        return std::visit(
            [t](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, shapes::Flat>) return 0.0;
                else return shapes::antiderivative(s, t);
            },
            shape_);
    }

    double baseline_;
    double amplitude_;
    Shape shape_;
};

// nu(t) * integral_0^t nu(tau) dtau, the scalar that controls every
// short-time dissipative coefficient under single-factor coupling.
inline double lambda_factor(const TimeProfile& nu, double t) { return nu(t) * nu.integral(0.0, t); }

}  // namespace dce
