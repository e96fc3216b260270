#pragma once

// Adaptive integration of the reduced system with dense output, turning-point
// (dr/dt = 0) events and energy drift diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "ringorbit/dynamics.hpp"
#include "ringorbit/errors.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/rk.hpp"
#include "ringorbit/seed_io.hpp"

namespace ringorbit {

struct IntegratorSettings {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    std::optional<double> max_step;
    std::size_t max_steps = 20'000'000;
    /// Sign changes of dr/dt are ignored when |dr/dt| stays below this
    /// fraction of the orbital speed on both sides (circular orbits).
    double event_noise_floor = 1e-9;

    void validate() const {
        auto ok = [](double tol) { return tol > 0.0 && tol <= 1e-3; };
        if (!ok(rel_tol) || !ok(abs_tol)) throw InvalidConfiguration("tolerances must lie in (0, 1e-3]");
        if (max_step && !(*max_step > 0.0)) throw InvalidConfiguration("max_step must be positive");
        if (max_steps == 0) throw InvalidConfiguration("max_steps must be positive");
    }

    [[nodiscard]] rk::StepControl step_control() const {
        rk::StepControl c;
        c.rel_tol = rel_tol;
        c.abs_tol = abs_tol;
        c.max_step = max_step;
        c.max_steps = max_steps;
        return c;
    }
};

using ReducedVector = std::array<double, 5>;  // f, fdot, r, rdot, theta

inline ReducedVector to_vector(const ReducedState& s) { return {s.f, s.fdot, s.r, s.rdot, s.theta}; }

inline ReducedState to_state(double t, const ReducedVector& v) { return {t, v[0], v[1], v[2], v[3], v[4]}; }

inline auto reduced_field(const RingSystem& sys) {
    return [&sys](double t, const ReducedVector& v) -> ReducedVector {
        const auto d = reduced_rhs(to_state(t, v), sys);
        return {d.df, d.dfdot, d.dr, d.drdot, d.dtheta};
    };
}

enum class EventKind { rdot_zero_min, rdot_zero_max };

inline const char* to_string(EventKind k) {
    return k == EventKind::rdot_zero_min ? "rdot_zero_min" : "rdot_zero_max";
}

struct RadialEvent {
    double t = 0.0;
    EventKind kind = EventKind::rdot_zero_min;
    ReducedState state;
};

/// Immutable result of a reduced integration.
class Trajectory {
public:
    using Step = rk::DenseStep<ReducedVector>;

    Trajectory(RingSystem sys, std::vector<Step> steps, double event_noise_floor = 1e-9)
        : sys_(std::move(sys)), steps_(std::move(steps)) {
        if (steps_.empty()) throw InvalidConfiguration("trajectory needs at least one step");
        samples_.reserve(steps_.size() + 1);
        samples_.push_back(to_state(steps_.front().t0, steps_.front().y0));
        for (const auto& st : steps_) samples_.push_back(to_state(st.t1(), st.y1));
        c2_initial_ = energy(samples_.front(), sys_);
        drift_.reserve(samples_.size());
        for (const auto& s : samples_) drift_.push_back(relative_drift(energy(s, sys_)));
        locate_events(event_noise_floor);
    }

    [[nodiscard]] const RingSystem& system() const { return sys_; }
    [[nodiscard]] const std::vector<ReducedState>& samples() const { return samples_; }
    [[nodiscard]] const std::vector<RadialEvent>& events() const { return events_; }
    /// (c2(t) - c2(0)) / |c2(0)| at every sample.
    [[nodiscard]] const std::vector<double>& c2_drift() const { return drift_; }
    [[nodiscard]] const std::vector<Step>& steps() const { return steps_; }
    [[nodiscard]] double t_begin() const { return samples_.front().t; }
    [[nodiscard]] double t_end() const { return samples_.back().t; }
    [[nodiscard]] double initial_energy() const { return c2_initial_; }

    [[nodiscard]] double max_abs_drift() const {
        double m = 0.0;
        for (double d : drift_) m = std::max(m, std::abs(d));
        return m;
    }

    [[nodiscard]] ReducedState state_at(double t) const {
        if (!(t >= t_begin() && t <= t_end())) {
            throw OutOfRange("time " + format_17(t) + " outside trajectory range [" + format_17(t_begin()) + ", " +
                             format_17(t_end()) + "]");
        }
        if (t == t_end()) return samples_.back();
        const std::size_t i = step_index(t);
        if (t == steps_[i].t0) return samples_[i];
        return to_state(t, steps_[i].eval(t));
    }

private:
    [[nodiscard]] double relative_drift(double c2) const {
        const double scale = std::abs(c2_initial_);
        return scale > 0.0 ? (c2 - c2_initial_) / scale : c2 - c2_initial_;
    }

    [[nodiscard]] std::size_t step_index(double t) const {
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                   [](double v, const Step& s) { return v < s.t0; });
        const auto idx = static_cast<std::size_t>(std::distance(steps_.begin(), it));
        return idx == 0 ? 0 : idx - 1;
    }

    [[nodiscard]] double rdot_at(double t) const {
        if (t >= t_end()) return samples_.back().rdot;
        return steps_[step_index(t)].component(3, t);
    }

    void locate_events(double noise_floor) {
        struct Probe {
            double t;
            double v;
        };
        std::vector<Probe> probes;
        probes.reserve(4 * steps_.size() + 1);
        for (std::size_t i = 0; i < steps_.size(); ++i) {
            const auto& st = steps_[i];
            probes.push_back({st.t0, st.y0[3]});
            for (double frac : {0.25, 0.5, 0.75}) {
                const double t = st.t0 + frac * st.h;
                probes.push_back({t, st.component(3, t)});
            }
        }
        probes.push_back({t_end(), samples_.back().rdot});

        double speed = 0.0;
        for (const auto& s : samples_) {
            speed = std::max(speed, std::sqrt(s.rdot * s.rdot + sys_.c1 * sys_.c1 / (s.r * s.r) + s.fdot * s.fdot));
        }
        const double floor = noise_floor * speed;

        struct Candidate {
            double t;
            EventKind kind;
        };
        std::vector<Candidate> candidates;
        std::optional<Probe> last_nonzero;
        bool initial_turning = probes.front().v == 0.0;
        for (const auto& p : probes) {
            if (p.v == 0.0) continue;
            if (initial_turning && !last_nonzero) {
                candidates.push_back({t_begin(), p.v > 0.0 ? EventKind::rdot_zero_min : EventKind::rdot_zero_max});
            }
            if (last_nonzero && (last_nonzero->v > 0.0) != (p.v > 0.0)) {
                auto fn = [this](double t) { return rdot_at(t); };
                std::uintmax_t iters = 200;
                const auto bracket = boost::math::tools::toms748_solve(
                    fn, last_nonzero->t, p.t, last_nonzero->v, p.v, boost::math::tools::eps_tolerance<double>(52),
                    iters);
                double root = 0.5 * (bracket.first + bracket.second);
                if (std::abs(rdot_at(bracket.first)) < std::abs(rdot_at(root))) root = bracket.first;
                if (std::abs(rdot_at(bracket.second)) < std::abs(rdot_at(root))) root = bracket.second;
                candidates.push_back({root, last_nonzero->v < 0.0 ? EventKind::rdot_zero_min : EventKind::rdot_zero_max});
            }
            last_nonzero = p;
        }

        // Peak |dr/dt| on each gap between consecutive candidates.
        std::vector<double> boundaries{t_begin()};
        for (const auto& c : candidates) boundaries.push_back(c.t);
        boundaries.push_back(t_end());
        std::vector<double> peak(boundaries.size() - 1, 0.0);
        std::size_t seg = 0;
        for (const auto& p : probes) {
            while (seg + 1 < peak.size() && p.t > boundaries[seg + 1]) ++seg;
            peak[seg] = std::max(peak[seg], std::abs(p.v));
        }

        for (std::size_t j = 0; j < candidates.size(); ++j) {
            if (!(peak[j] > floor || peak[j + 1] > floor)) continue;
            if (!events_.empty() && candidates[j].t - events_.back().t < 1e-10) continue;
            RadialEvent ev;
            ev.t = candidates[j].t;
            ev.kind = candidates[j].kind;
            ev.state = state_at(ev.t);
            events_.push_back(ev);
        }
    }

    RingSystem sys_;
    std::vector<Step> steps_;
    std::vector<ReducedState> samples_;
    std::vector<double> drift_;
    std::vector<RadialEvent> events_;
    double c2_initial_ = 0.0;
};

/// Integrates an arbitrary reduced initial state from s0.t to t_end.
inline Trajectory integrate(const RingSystem& sys, const ReducedState& s0, double t_end,
                            const IntegratorSettings& settings = {}) {
    settings.validate();
    if (!(s0.r > 0.0)) throw CollisionError("initial ring radius must be positive");
    std::vector<Trajectory::Step> steps;
    rk::integrate(reduced_field(sys), s0.t, to_vector(s0), t_end, settings.step_control(),
                  [&steps](const Trajectory::Step& st) { steps.push_back(st); });
    return Trajectory(sys, std::move(steps), settings.event_noise_floor);
}

/// Integrates the seed's solution over [0, t_end] starting from
/// (f, f', r, r', theta) = (0, df0, y10, 0, 0).
inline Trajectory integrate(const SeedConfig& q, double t_end, const IntegratorSettings& settings = {}) {
    q.validate();
    return integrate(RingSystem::from_seed(q), initial_state(q), t_end, settings);
}

/// Final state only; no dense output is kept.
inline ReducedState propagate(const RingSystem& sys, const ReducedState& s0, double t_end,
                              const IntegratorSettings& settings = {}) {
    settings.validate();
    if (!(s0.r > 0.0)) throw CollisionError("initial ring radius must be positive");
    const auto y = rk::integrate(reduced_field(sys), s0.t, to_vector(s0), t_end, settings.step_control(),
                                 [](const Trajectory::Step&) {});
    return to_state(t_end, y);
}

inline ReducedState state_at(const Trajectory& traj, double t) { return traj.state_at(t); }

/// Maximal intervals on which dr/dt keeps one sign, bounded by consecutive turning events.
inline std::vector<std::pair<double, double>> monotone_segments(const Trajectory& traj) {
    std::vector<std::pair<double, double>> out;
    const auto& ev = traj.events();
    for (std::size_t i = 0; i + 1 < ev.size(); ++i) out.emplace_back(ev[i].t, ev[i + 1].t);
    return out;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,f,fdot,r,rdot,theta,c2_rel_drift\n";
    const auto& samples = traj.samples();
    const auto& drift = traj.c2_drift();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        os << format_17(s.t) << ',' << format_17(s.f) << ',' << format_17(s.fdot) << ',' << format_17(s.r) << ','
           << format_17(s.rdot) << ',' << format_17(s.theta) << ',' << format_17(drift[i]) << '\n';
    }
}

/// Result of checking r(t) against the closed-form radial band.
struct NoCollisionReport {
    double min_r = 0.0;
    double max_r = 0.0;
    double lower_margin = 0.0;  ///< min_r - r_lo
    double upper_margin = 0.0;  ///< r_hi - max_r
    std::size_t points_checked = 0;
};

/// Checks r_lo <= r(t) <= r_hi on every sample, three interior dense points per
/// step and every turning event. `slack` is a relative allowance for
/// integration error; the band is attained exactly only when f = f' = 0 at a
/// turning point (planar orbits).
inline NoCollisionReport no_collision_certificate(const Trajectory& traj, const RadialBounds& rb,
                                                  double slack = 1e-9) {
    NoCollisionReport rep;
    rep.min_r = std::numeric_limits<double>::infinity();
    rep.max_r = -std::numeric_limits<double>::infinity();
    auto visit = [&rep](double r) {
        rep.min_r = std::min(rep.min_r, r);
        rep.max_r = std::max(rep.max_r, r);
        ++rep.points_checked;
    };
    for (const auto& s : traj.samples()) visit(s.r);
    for (const auto& st : traj.steps()) {
        for (double frac : {0.25, 0.5, 0.75}) visit(st.component(2, st.t0 + frac * st.h));
    }
    for (const auto& ev : traj.events()) visit(ev.state.r);
    rep.lower_margin = rep.min_r - rb.r_lo;
    rep.upper_margin = rb.r_hi - rep.max_r;
    if (rep.lower_margin < -slack * rb.r_lo || rep.upper_margin < -slack * rb.r_hi) {
        throw TheoremViolation("r(t) left the radial band [" + format_17(rb.r_lo) + ", " + format_17(rb.r_hi) +
                               "]: observed [" + format_17(rep.min_r) + ", " + format_17(rep.max_r) + "]");
    }
    return rep;
}

/// Convenience overload computing the band from the trajectory itself.
inline NoCollisionReport no_collision_certificate(const Trajectory& traj, double slack = 1e-9) {
    const auto& sys = traj.system();
    const ConservedPair c{sys.c1, traj.initial_energy()};
    return no_collision_certificate(traj, radial_bounds(c, sys), slack);
}

} // namespace ringorbit
