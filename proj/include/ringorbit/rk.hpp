#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension. One stepper
// drives both the reduced system (std::array state) and the Cartesian
// (n+1)-body system (std::vector state).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "ringorbit/errors.hpp"

namespace ringorbit::rk {

template <class State>
State zeros_like(const State& s) {
    if constexpr (requires(State x) { x.resize(std::size_t{}); }) {
        return State(s.size(), 0.0);
    } else {
        return State{};
    }
}

/// Interpolant over one accepted step [t0, t0 + h].
template <class State>
struct DenseStep {
    double t0 = 0.0;
    double h = 0.0;
    double t_stop = 0.0;  ///< t0 + h, or exactly t_end on the final step
    State y0{};
    State y1{};  ///< endpoint exactly as produced by the stepper
    State ydiff{};
    State bspl{};
    State c4{};
    State c5{};

    [[nodiscard]] double t1() const { return t_stop; }

    [[nodiscard]] double component(std::size_t i, double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        return y0[i] + s * (ydiff[i] + s1 * (bspl[i] + s * (c4[i] + s1 * c5[i])));
    }

    [[nodiscard]] State eval(double t) const {
        State y = zeros_like(y0);
        for (std::size_t i = 0; i < y0.size(); ++i) y[i] = component(i, t);
        return y;
    }
};

struct StepControl {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    std::optional<double> max_step;
    std::size_t max_steps = 10'000'000;
    double initial_step = 0.0;  ///< 0 selects automatically
};

struct RunStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_calls = 0;
};

namespace tableau {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                        a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                        e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
} // namespace tableau

/// Integrates y' = rhs(t, y) from t0 to t_end (t_end > t0) and calls
/// on_step(const DenseStep&) after every accepted step. `Rhs` is
/// State(double, const State&) and may throw CollisionError for states
/// outside its domain; such trial steps are rejected and shrunk.
/// Returns the state at t_end.
template <class State, class Rhs, class OnStep>
State integrate(Rhs&& rhs, double t0, State y, double t_end, const StepControl& ctl, OnStep&& on_step,
                RunStats* stats = nullptr) {
    using namespace tableau;
    if (!(t_end > t0)) throw InvalidConfiguration("integration interval must have positive length");
    const std::size_t dim = y.size();
    const double span = t_end - t0;
    const double h_max = ctl.max_step ? std::min(*ctl.max_step, span) : span;
    RunStats local;
    RunStats& st = stats ? *stats : local;

    auto scale = [&](double a, double b) { return ctl.abs_tol + ctl.rel_tol * std::max(std::abs(a), std::abs(b)); };

    State k1 = rhs(t0, y);
    ++st.rhs_calls;

    double h = ctl.initial_step;
    if (!(h > 0.0)) {
        // Hairer's starting-step heuristic.
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double sc = scale(y[i], y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / dim);
        d1n = std::sqrt(d1n / dim);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, h_max);
        State y1 = zeros_like(y);
        for (std::size_t i = 0; i < dim; ++i) y1[i] = y[i] + h0 * k1[i];
        double d2 = 0.0;
        try {
            const State f1 = rhs(t0 + h0, y1);
            ++st.rhs_calls;
            for (std::size_t i = 0; i < dim; ++i) {
                const double sc = scale(y[i], y[i]);
                d2 += ((f1[i] - k1[i]) / sc) * ((f1[i] - k1[i]) / sc);
            }
            d2 = std::sqrt(d2 / dim) / h0;
        } catch (const CollisionError&) {
            d2 = 1.0 / (h0 * h0);
        }
        const double dmax = std::max(d1n, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 1.0 / 5.0);
        h = std::min({100.0 * h0, h1, h_max});
    }

    State tmp = zeros_like(y), k2 = tmp, k3 = tmp, k4 = tmp, k5 = tmp, k6 = tmp, k7 = tmp, ynew = tmp;
    double t = t0;
    bool last_rejected = false;
    while (t < t_end) {
        if (st.accepted + st.rejected >= ctl.max_steps) {
            throw ResourceExceeded("step budget of " + std::to_string(ctl.max_steps) + " exhausted at t = " +
                                   std::to_string(t));
        }
        bool last = false;
        if (t + h >= t_end || t + 1.01 * h >= t_end) {
            h = t_end - t;
            last = true;
        }
        if (h < 1e-14 * std::max(1.0, std::abs(t)) * 4.0) {
            throw CollisionSuspected("step size underflow at t = " + std::to_string(t));
        }

        double err = std::numeric_limits<double>::infinity();
        bool domain_failure = false;
        try {
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * k1[i];
            k2 = rhs(t + c2 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            k3 = rhs(t + c3 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            k4 = rhs(t + c4 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            k5 = rhs(t + c5 * h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            k6 = rhs(t + h, tmp);
            for (std::size_t i = 0; i < dim; ++i)
                ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
            k7 = rhs(t + h, ynew);
            st.rhs_calls += 6;

            err = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                const double e =
                    h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double r = e / scale(y[i], ynew[i]);
                err += r * r;
            }
            err = std::sqrt(err / dim);
            if (!std::isfinite(err)) domain_failure = true;
        } catch (const CollisionError&) {
            domain_failure = true;
        }

        if (domain_failure) {
            ++st.rejected;
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        if (err <= 1.0) {
            DenseStep<State> step;
            step.t0 = t;
            step.h = h;
            step.t_stop = last ? t_end : t + h;
            step.y0 = y;
            step.y1 = ynew;
            step.ydiff = zeros_like(y);
            step.bspl = zeros_like(y);
            step.c4 = zeros_like(y);
            step.c5 = zeros_like(y);
            for (std::size_t i = 0; i < dim; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                step.ydiff[i] = ydiff;
                step.bspl[i] = bspl;
                step.c4[i] = ydiff - h * k7[i] - bspl;
                step.c5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
            }
            t = last ? t_end : t + h;
            y = ynew;
            k1 = k7;
            ++st.accepted;
            on_step(static_cast<const DenseStep<State>&>(step));
            double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
            h = std::min(h * fac, h_max);
            last_rejected = false;
        } else {
            ++st.rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            last_rejected = true;
        }
    }
    return y;
}

} // namespace ringorbit::rk
