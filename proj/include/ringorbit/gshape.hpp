#pragma once

// f as a function of r on a monotone segment: the second-order ODE that
// g(r) = f satisfies, the energy identity solved for dr/dt, and the
// quadrature that turns a known g back into t(r) and theta(r).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "ringorbit/dynamics.hpp"
#include "ringorbit/errors.hpp"
#include "ringorbit/integrate.hpp"
#include "ringorbit/model.hpp"
#include "ringorbit/seed_io.hpp"

namespace ringorbit {

struct GSample {
    double r = 0.0;
    double g = 0.0;
    double gp = 0.0;
    std::optional<double> gpp;
};

struct GOdeCoefficients {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// a g'' + b g' + c = 0 for general n. a equals -dr/dt^2 with dr/dt^2
/// eliminated through the energy.
inline GOdeCoefficients g_ode_coefficients(double r, double g, double gp, const ConservedPair& cp, int n_bodies,
                                           double m1, double m2, const RingConstants& rc) {
    detail::require_positive_radius(r);
    const double n = n_bodies;
    const double k = rc.k;
    const double h = axial_distance(r, g, k);
    const double h3 = h * h * h;
    const double c1 = cp.c1;
    GOdeCoefficients out;
    out.a = -(2.0 * n * n * m1 * m2 * m2 * r * r +
              (n * n * rc.b_n * m2 * m2 * m2 * r + 2.0 * n * cp.c2 * m2 * r * r - n * n * c1 * c1 * m2 * m2) * h) /
            (r * r * h * (n * n * m2 * m2 + m1 * (m1 + n * m2) * gp * gp));
    out.b = -c1 * c1 / (r * r * r) + rc.a_n * m2 / (r * r) + n * (k - 1.0) * m2 * r / h3;
    out.c = -n * k * m2 * g / h3;
    return out;
}

inline GOdeCoefficients g_ode_coefficients(double r, double g, double gp, const ConservedPair& cp,
                                           const RingSystem& sys) {
    return g_ode_coefficients(r, g, gp, cp, sys.n, sys.m1, sys.m2, sys.rc);
}

/// The n = 2 coefficients as displayed for the three-body problem.
inline GOdeCoefficients g_ode_coefficients_three_body(double r, double g, double gp, const ConservedPair& cp,
                                                      double m1, double m2) {
    detail::require_positive_radius(r);
    const double k = (m1 + 2.0 * m2) / (2.0 * m2);
    const double h = std::sqrt(r * r + k * k * g * g);
    const double h3 = h * h * h;
    const double c1 = cp.c1;
    const double c2 = cp.c2;
    GOdeCoefficients out;
    out.a = (8.0 * (1.0 - k) * m2 * m2 * r * r + (2.0 * c1 * c1 * m2 - r * (m2 * m2 + 2.0 * c2 * r)) * h) /
            (2.0 * m2 * r * r * h * (1.0 + (k - 1.0) * k * gp * gp));
    out.b = -(c1 * c1 / (r * r * r) - m2 / (4.0 * r * r) - 2.0 * (-1.0 + k) * m2 * r / h3);
    out.c = -2.0 * k * m2 * g / h3;
    return out;
}

/// The n = 3 coefficients as displayed for the four-body problem, l = sqrt(3).
inline GOdeCoefficients g_ode_coefficients_four_body(double r, double g, double gp, const ConservedPair& cp,
                                                     double m1, double m2) {
    detail::require_positive_radius(r);
    const double l = std::numbers::sqrt3;
    const double k = (m1 + 3.0 * m2) / (3.0 * m2);
    const double h = std::sqrt(r * r + k * k * g * g);
    const double h3 = h * h * h;
    const double c1 = cp.c1;
    const double c2 = cp.c2;
    GOdeCoefficients out;
    out.a = -(18.0 * l * m1 * m2 * m2 * r * r +
              (18.0 * m2 * m2 * m2 * r + 6.0 * l * c2 * m2 * r * r - 9.0 * l * c1 * c1 * m2 * m2) * h) /
            (l * r * r * h * (9.0 * m2 * m2 + m1 * (m1 + 3.0 * m2) * gp * gp));
    out.b = -c1 * c1 / (r * r * r) + m2 * std::sqrt(3.0) / (3.0 * r * r) + 3.0 * (k - 1.0) * m2 * r / h3;
    out.c = -3.0 * k * m2 * g / h3;
    return out;
}

inline double g_ode_residual(const GSample& s, const ConservedPair& cp, const RingSystem& sys) {
    if (!s.gpp) throw InvalidConfiguration("residual needs g'' at the sample");
    const auto co = g_ode_coefficients(s.r, s.g, s.gp, cp, sys);
    return co.a * *s.gpp + co.b * s.gp + co.c;
}

/// |a g''| + |b g'| + |c|, the scale residuals are normalized by.
inline double g_ode_scale(const GSample& s, const ConservedPair& cp, const RingSystem& sys) {
    const auto co = g_ode_coefficients(s.r, s.g, s.gp, cp, sys);
    return std::abs(co.a * s.gpp.value_or(0.0)) + std::abs(co.b * s.gp) + std::abs(co.c);
}

/// Energy identity solved for dr/dt^2 after substituting df/dt = g' dr/dt.
/// Negative values mean r is outside the reachable band.
inline double rdot_squared_from_g(double r, double g, double gp, const ConservedPair& cp, const RingSystem& sys) {
    detail::require_positive_radius(r);
    const double n = sys.n;
    const double m1 = sys.m1;
    const double m2 = sys.m2;
    const double h = axial_distance(r, g, sys.rc.k);
    const double num = cp.c2 + n * m1 * m2 / h + n * sys.rc.b_n * m2 * m2 / (2.0 * r) -
                       n * m2 * cp.c1 * cp.c1 / (2.0 * r * r);
    const double den = 0.5 * n * m2 + m1 * sys.rc.mu_f / (2.0 * n * m2) * gp * gp;
    return num / den;
}

/// Left side of the n = 2 separable relation; equals 2 c2 / m2 on solutions.
inline double separable_relation_three_body(double r, double g, double gp, double rdot, double c1, double m1,
                                            double m2) {
    const double k = (m1 + 2.0 * m2) / (2.0 * m2);
    return -8.0 * (-1.0 + k) * m2 / std::sqrt(r * r + k * k * g * g) +
           (2.0 * c1 * c1 - m2 * r + 2.0 * r * r * (1.0 + (-1.0 + k) * k * gp * gp) * rdot * rdot) / (r * r);
}

/// Chain-rule samples on (t_a, t_b): g = f, g' = f'/r', g'' = (f'' r' - f' r'') / r'^3.
/// Points with |r'| below `turning_buffer` times the segment's peak |r'| are dropped.
inline std::vector<GSample> g_samples_from_segment(const Trajectory& traj, double t_a, double t_b,
                                                   std::size_t count, double turning_buffer = 1e-5) {
    if (!(t_b > t_a)) throw InvalidSegment("segment must have positive length");
    if (count == 0) return {};
    const auto& sys = traj.system();
    std::vector<ReducedState> states;
    states.reserve(count);
    double peak = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = t_a + (t_b - t_a) * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        states.push_back(traj.state_at(t));
        peak = std::max(peak, std::abs(states.back().rdot));
    }
    std::vector<GSample> out;
    out.reserve(count);
    for (const auto& s : states) {
        if (!(std::abs(s.rdot) >= turning_buffer * peak) || s.rdot == 0.0) continue;
        const auto d = reduced_rhs(s, sys);
        GSample g;
        g.r = s.r;
        g.g = s.f;
        g.gp = s.fdot / s.rdot;
        g.gpp = (d.dfdot * s.rdot - s.fdot * d.drdot) / (s.rdot * s.rdot * s.rdot);
        out.push_back(g);
    }
    return out;
}

struct ResidualSummary {
    double max_normalized = 0.0;
    std::size_t samples = 0;
};

inline ResidualSummary residual_summary(std::span<const GSample> samples, const ConservedPair& cp,
                                        const RingSystem& sys) {
    ResidualSummary out;
    for (const auto& s : samples) {
        const double scale = g_ode_scale(s, cp, sys);
        const double res = std::abs(g_ode_residual(s, cp, sys));
        const double normalized = scale > 0.0 ? res / scale : res;
        out.max_normalized = std::max(out.max_normalized, normalized);
        ++out.samples;
    }
    return out;
}

inline void write_gsample_csv(std::ostream& os, std::span<const GSample> samples, const ConservedPair& cp,
                              const RingSystem& sys) {
    os << "r,g,gp,gpp,residual\n";
    for (const auto& s : samples) {
        os << format_17(s.r) << ',' << format_17(s.g) << ',' << format_17(s.gp) << ',';
        if (s.gpp) {
            os << format_17(*s.gpp) << ',' << format_17(g_ode_residual(s, cp, sys));
        } else {
            os << ',';
        }
        os << '\n';
    }
}

/// g and g' at a radius.
struct GValue {
    double g = 0.0;
    double gp = 0.0;
};

using GFunction = std::function<GValue(double)>;

struct QuadraturePoint {
    double r = 0.0;
    double t = 0.0;      ///< time since r_a
    double theta = 0.0;  ///< angle swept since r_a
    double f = 0.0;
};

struct QuadratureOptions {
    /// Sign of dr/dt on the segment; 0 takes it from the direction r_a -> r_b.
    int branch = 0;
    double tolerance = 1e-13;
    unsigned max_depth = 15;
};

namespace detail {

// Integral of F over [u, v] with both halves mapped by rho = end -+ w s^2, which
// removes inverse square-root singularities at either end.
template <class F>
double split_sqrt_integral(F&& fn, double u, double v, const QuadratureOptions& opt) {
    using boost::math::quadrature::gauss_kronrod;
    if (u == v) return 0.0;
    const double mid = 0.5 * (u + v);
    const double wl = mid - u;
    const double wr = v - mid;
    auto left = [&](double s) { return s == 0.0 ? 0.0 : fn(u + wl * s * s) * 2.0 * wl * s; };
    auto right = [&](double s) { return s == 0.0 ? 0.0 : fn(v - wr * s * s) * 2.0 * wr * s; };
    double err = 0.0;
    const double a = gauss_kronrod<double, 31>::integrate(left, 0.0, 1.0, opt.max_depth, opt.tolerance, &err);
    const double b = gauss_kronrod<double, 31>::integrate(right, 0.0, 1.0, opt.max_depth, opt.tolerance, &err);
    return a + b;
}

} // namespace detail

/// t(r), theta(r) and f(r) along a monotone segment from r_a towards r_b,
/// evaluated at every radius in `radii` (which must lie in the closed segment).
/// An endpoint where dr/dt^2 <= 0 is replaced by the nearby root of dr/dt^2, the
/// true turning radius of g.
inline std::vector<QuadraturePoint> reconstruct_by_quadrature(const GFunction& g, double r_a, double r_b,
                                                              std::span<const double> radii, const ConservedPair& cp,
                                                              const RingSystem& sys,
                                                              const QuadratureOptions& opt = {}) {
    if (!(r_a > 0.0 && r_b > 0.0) || r_a == r_b) throw InvalidSegment("segment radii must be positive and distinct");
    const double dir = r_b > r_a ? 1.0 : -1.0;
    const double sign = opt.branch == 0 ? dir : (opt.branch > 0 ? 1.0 : -1.0);
    auto p = [&](double r) {
        const auto v = g(r);
        return rdot_squared_from_g(r, v.g, v.gp, cp, sys);
    };

    // Effective endpoints.
    double lo = r_a;
    double hi = r_b;
    const double width = std::abs(r_b - r_a);
    const double mid = 0.5 * (r_a + r_b);
    if (!(p(mid) > 0.0)) throw InvalidSegment("dr/dt^2 is not positive inside the segment");
    auto effective_end = [&](double end) {
        if (p(end) > 0.0) return end;
        std::uintmax_t iters = 200;
        const auto br = boost::math::tools::toms748_solve(p, std::min(end, mid), std::max(end, mid),
                                                          boost::math::tools::eps_tolerance<double>(52), iters);
        // Keep the outer side of the bracket: dropping even an eps-wide sliver
        // next to a simple root costs sqrt(eps) in t.
        return std::abs(br.first - end) < std::abs(br.second - end) ? br.first : br.second;
    };
    lo = effective_end(r_a);
    hi = effective_end(r_b);
    const double edge = 1e-9 * width;

    auto integrand_t = [&](double r) {
        const double v = p(r);
        if (!(v > 0.0)) {
            if (std::abs(r - lo) < edge || std::abs(r - hi) < edge) return 0.0;
            throw InvalidSegment("dr/dt^2 is not positive at interior radius " + format_17(r));
        }
        return 1.0 / (sign * std::sqrt(v));
    };
    auto integrand_theta = [&](double r) { return cp.c1 / (r * r) * integrand_t(r); };

    std::vector<QuadraturePoint> out;
    out.reserve(radii.size());
    double prev = lo;
    double t_acc = 0.0;
    double th_acc = 0.0;
    const double rmin = std::min(lo, hi);
    const double rmax = std::max(lo, hi);
    for (double r : radii) {
        const double lo_raw = std::min(r_a, r_b);
        const double hi_raw = std::max(r_a, r_b);
        if (r < lo_raw - edge || r > hi_raw + edge) {
            throw OutOfRange("radius " + format_17(r) + " outside the segment");
        }
        const double rc = std::clamp(r, rmin, rmax);
        if ((rc - prev) * dir < 0.0) throw InvalidSegment("radii must be ordered from r_a towards r_b");
        t_acc += detail::split_sqrt_integral(integrand_t, prev, rc, opt);
        th_acc += detail::split_sqrt_integral(integrand_theta, prev, rc, opt);
        prev = rc;
        out.push_back({r, t_acc, th_acc, g(rc).g});
    }
    return out;
}

} // namespace ringorbit
