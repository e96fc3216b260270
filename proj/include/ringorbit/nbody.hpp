#pragma once

// Cartesian ground truth: rebuild all n+1 bodies from a reduced state,
// integrate Newton's equations directly, and compare with the reduced flow.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "ringorbit/dynamics.hpp"
#include "ringorbit/errors.hpp"
#include "ringorbit/integrate.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/rk.hpp"
#include "ringorbit/seed_io.hpp"

namespace ringorbit {

using Vec3 = std::array<double, 3>;

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct Body {
    double mass = 0.0;
    Vec3 position{};
    Vec3 velocity{};
};

/// Body 0 is the axial body; bodies 1..n form the ring.
struct FullState {
    double t = 0.0;
    std::vector<Body> bodies;
};

inline FullState reconstruct_full(const ReducedState& s, const RingSystem& sys) {
    detail::require_positive_radius(s.r);
    const int n = sys.n;
    const double lift = -sys.m1 / (n * sys.m2);
    const double theta_dot = sys.c1 / (s.r * s.r);
    FullState fs;
    fs.t = s.t;
    fs.bodies.reserve(static_cast<std::size_t>(n) + 1);
    fs.bodies.push_back({sys.m1, {0.0, 0.0, s.f}, {0.0, 0.0, s.fdot}});
    for (int j = 0; j < n; ++j) {
        const double phi = s.theta + 2.0 * std::numbers::pi * j / n;
        const double c = std::cos(phi);
        const double sn = std::sin(phi);
        Body b;
        b.mass = sys.m2;
        b.position = {s.r * c, s.r * sn, lift * s.f};
        b.velocity = {s.rdot * c - s.r * theta_dot * sn, s.rdot * sn + s.r * theta_dot * c, lift * s.fdot};
        fs.bodies.push_back(b);
    }
    return fs;
}

/// Newtonian accelerations with G = 1.
inline std::vector<Vec3> nbody_rhs(const FullState& fs) {
    const std::size_t nb = fs.bodies.size();
    std::vector<Vec3> acc(nb, Vec3{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = i + 1; j < nb; ++j) {
            const Vec3 d = fs.bodies[j].position - fs.bodies[i].position;
            const double dist = norm(d);
            if (!(dist > 0.0)) throw CollisionError("bodies " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
            const double inv3 = 1.0 / (dist * dist * dist);
            for (int a = 0; a < 3; ++a) {
                acc[i][a] += fs.bodies[j].mass * d[a] * inv3;
                acc[j][a] -= fs.bodies[i].mass * d[a] * inv3;
            }
        }
    }
    return acc;
}

inline double cartesian_energy(const FullState& fs) {
    double kinetic = 0.0;
    double potential = 0.0;
    const std::size_t nb = fs.bodies.size();
    for (std::size_t i = 0; i < nb; ++i) {
        const auto& b = fs.bodies[i];
        kinetic += 0.5 * b.mass * dot(b.velocity, b.velocity);
        for (std::size_t j = i + 1; j < nb; ++j) {
            const double dist = norm(fs.bodies[j].position - b.position);
            if (!(dist > 0.0)) throw CollisionError("coincident bodies in energy evaluation");
            potential -= b.mass * fs.bodies[j].mass / dist;
        }
    }
    return kinetic + potential;
}

inline Vec3 center_of_mass_moment(const FullState& fs) {
    Vec3 m{0.0, 0.0, 0.0};
    for (const auto& b : fs.bodies)
        for (int a = 0; a < 3; ++a) m[a] += b.mass * b.position[a];
    return m;
}

inline Vec3 linear_momentum(const FullState& fs) {
    Vec3 p{0.0, 0.0, 0.0};
    for (const auto& b : fs.bodies)
        for (int a = 0; a < 3; ++a) p[a] += b.mass * b.velocity[a];
    return p;
}

inline Vec3 angular_momentum(const FullState& fs) {
    Vec3 l{0.0, 0.0, 0.0};
    for (const auto& b : fs.bodies) {
        const Vec3 c = cross(b.position, b.velocity);
        for (int a = 0; a < 3; ++a) l[a] += b.mass * c[a];
    }
    return l;
}

/// Sum of |m_i v_i|; the scale for momentum drift since total momentum is zero.
inline double momentum_scale(const FullState& fs) {
    double s = 0.0;
    for (const auto& b : fs.bodies) s += b.mass * norm(b.velocity);
    return s;
}

// Flat layout: positions of all bodies, then velocities.
inline std::vector<double> pack(const FullState& fs) {
    const std::size_t nb = fs.bodies.size();
    std::vector<double> y(6 * nb);
    for (std::size_t i = 0; i < nb; ++i) {
        for (int a = 0; a < 3; ++a) {
            y[3 * i + a] = fs.bodies[i].position[a];
            y[3 * nb + 3 * i + a] = fs.bodies[i].velocity[a];
        }
    }
    return y;
}

inline FullState unpack(double t, const std::vector<double>& y, const std::vector<double>& masses) {
    const std::size_t nb = masses.size();
    FullState fs;
    fs.t = t;
    fs.bodies.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        fs.bodies[i].mass = masses[i];
        for (int a = 0; a < 3; ++a) {
            fs.bodies[i].position[a] = y[3 * i + a];
            fs.bodies[i].velocity[a] = y[3 * nb + 3 * i + a];
        }
    }
    return fs;
}

class FullTrajectory {
public:
    using Step = rk::DenseStep<std::vector<double>>;

    FullTrajectory(std::vector<double> masses, std::vector<Step> steps)
        : masses_(std::move(masses)), steps_(std::move(steps)) {
        if (steps_.empty()) throw InvalidConfiguration("trajectory needs at least one step");
    }

    [[nodiscard]] double t_begin() const { return steps_.front().t0; }
    [[nodiscard]] double t_end() const { return steps_.back().t1(); }
    [[nodiscard]] const std::vector<Step>& steps() const { return steps_; }
    [[nodiscard]] const std::vector<double>& masses() const { return masses_; }

    [[nodiscard]] FullState state_at(double t) const {
        if (!(t >= t_begin() && t <= t_end())) throw OutOfRange("time outside full trajectory range");
        if (t == t_end()) return unpack(t, steps_.back().y1, masses_);
        auto it = std::upper_bound(steps_.begin(), steps_.end(), t, [](double v, const Step& s) { return v < s.t0; });
        const auto& st = *(it == steps_.begin() ? it : std::prev(it));
        if (t == st.t0) return unpack(t, st.y0, masses_);
        return unpack(t, st.eval(t), masses_);
    }

private:
    std::vector<double> masses_;
    std::vector<Step> steps_;
};

inline FullTrajectory integrate_full(const FullState& initial, double t_end, const IntegratorSettings& settings = {}) {
    settings.validate();
    std::vector<double> masses;
    masses.reserve(initial.bodies.size());
    for (const auto& b : initial.bodies) masses.push_back(b.mass);
    const std::size_t nb = masses.size();

    auto field = [&masses, nb](double t, const std::vector<double>& y) {
        std::vector<double> dy(6 * nb);
        const FullState fs = unpack(t, y, masses);
        const auto acc = nbody_rhs(fs);
        for (std::size_t i = 0; i < nb; ++i) {
            for (int a = 0; a < 3; ++a) {
                dy[3 * i + a] = y[3 * nb + 3 * i + a];
                dy[3 * nb + 3 * i + a] = acc[i][a];
            }
        }
        return dy;
    };
    std::vector<FullTrajectory::Step> steps;
    rk::integrate(field, initial.t, pack(initial), t_end, settings.step_control(),
                  [&steps](const FullTrajectory::Step& st) { steps.push_back(st); });
    return FullTrajectory(std::move(masses), std::move(steps));
}

struct CrossValidationReport {
    double max_position_deviation = 0.0;  ///< max over bodies and sample times, Euclidean
    double max_radius_spread = 0.0;       ///< ring bodies' distance to the axis, max - min
    double max_height_deviation = 0.0;    ///< |z_j + m1 f / (n m2)| with f taken from body 0
    double max_angle_deviation = 0.0;     ///< ring spacing vs 2 pi / n
    double max_axis_offset = 0.0;         ///< |(x, y)| of body 0
    double reduced_energy_drift = 0.0;
    double energy_drift = 0.0;            ///< relative
    double momentum_drift = 0.0;          ///< relative to sum |m v|
    double angular_momentum_drift = 0.0;  ///< relative to |L(0)|
    std::size_t samples = 0;
};

/// Compares reduced and Cartesian integrations of the same seed at `samples`
/// uniform times in [0, t_end]. Throws DivergenceError when `tolerance` is
/// given and the position deviation exceeds it.
inline CrossValidationReport cross_validate(const SeedConfig& q, double t_end, const IntegratorSettings& settings = {},
                                            std::optional<double> tolerance = std::nullopt,
                                            std::size_t samples = 1000) {
    const auto fam = validate_family(q);
    if (!fam.in_L) throw OutsideFamily("cross validation needs a seed with c2 < 0 and c1 != 0");
    const auto reduced = integrate(q, t_end, settings);
    const auto& sys = reduced.system();
    const FullState start = reconstruct_full(reduced.samples().front(), sys);
    const auto full = integrate_full(start, t_end, settings);

    const double e0 = cartesian_energy(start);
    const Vec3 p0 = linear_momentum(start);
    const double pscale = momentum_scale(start);
    const Vec3 l0 = angular_momentum(start);
    const double lscale = norm(l0);
    const double lift = -sys.m1 / (sys.n * sys.m2);

    CrossValidationReport rep;
    rep.samples = samples;
    rep.reduced_energy_drift = reduced.max_abs_drift();
    for (std::size_t i = 0; i < samples; ++i) {
        // t_end * k / k is not always t_end in binary64.
        const double t = i + 1 == samples ? t_end : t_end * static_cast<double>(i) / static_cast<double>(samples - 1);
        const FullState expect = reconstruct_full(reduced.state_at(t), sys);
        const FullState got = full.state_at(t);
        for (std::size_t b = 0; b < got.bodies.size(); ++b) {
            rep.max_position_deviation =
                std::max(rep.max_position_deviation, norm(got.bodies[b].position - expect.bodies[b].position));
        }
        const auto& axial = got.bodies[0].position;
        rep.max_axis_offset = std::max(rep.max_axis_offset, std::hypot(axial[0], axial[1]));
        const double f = axial[2];
        double rmin = std::numeric_limits<double>::infinity();
        double rmax = 0.0;
        const auto& first = got.bodies[1].position;
        const double phi1 = std::atan2(first[1], first[0]);
        for (int j = 0; j < sys.n; ++j) {
            const auto& p = got.bodies[1 + j].position;
            const double rho = std::hypot(p[0], p[1]);
            rmin = std::min(rmin, rho);
            rmax = std::max(rmax, rho);
            rep.max_height_deviation = std::max(rep.max_height_deviation, std::abs(p[2] - lift * f));
            double dphi = std::atan2(p[1], p[0]) - phi1 - 2.0 * std::numbers::pi * j / sys.n;
            dphi = std::remainder(dphi, 2.0 * std::numbers::pi);
            rep.max_angle_deviation = std::max(rep.max_angle_deviation, std::abs(dphi));
        }
        rep.max_radius_spread = std::max(rep.max_radius_spread, rmax - rmin);
    }
    // Conservation is measured on the stepper's own nodes, not on interpolated states.
    for (const auto& st : full.steps()) {
        const FullState node = unpack(st.t1(), st.y1, full.masses());
        rep.energy_drift = std::max(rep.energy_drift, std::abs(cartesian_energy(node) - e0) / std::abs(e0));
        rep.momentum_drift = std::max(rep.momentum_drift, norm(linear_momentum(node) - p0) / pscale);
        rep.angular_momentum_drift =
            std::max(rep.angular_momentum_drift, norm(angular_momentum(node) - l0) / lscale);
    }
    if (tolerance && rep.max_position_deviation > *tolerance) {
        throw DivergenceError("reduced and Cartesian solutions differ by " + format_17(rep.max_position_deviation) +
                              " (tolerance " + format_17(*tolerance) + ")");
    }
    return rep;
}

/// One row per body per sample: t,body,x,y,z,vx,vy,vz.
inline void write_full_csv_header(std::ostream& os) { os << "t,body,x,y,z,vx,vy,vz\n"; }

inline void write_full_csv_rows(std::ostream& os, const FullState& fs) {
    for (std::size_t b = 0; b < fs.bodies.size(); ++b) {
        const auto& body = fs.bodies[b];
        os << format_17(fs.t) << ',' << b;
        for (double v : body.position) os << ',' << format_17(v);
        for (double v : body.velocity) os << ',' << format_17(v);
        os << '\n';
    }
}

} // namespace ringorbit
