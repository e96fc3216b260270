#pragma once

// Reduced equations of motion for the axial body plus rotating n-gon, the
// conserved energy in reduced variables, and the closed-form radial bounds.

#include <cmath>
#include <numbers>

#include "ringorbit/errors.hpp"
#include "ringorbit/model.hpp"

namespace ringorbit {

/// (t, f, df/dt, r, dr/dt, theta); theta is unwrapped.
struct ReducedState {
    double t = 0.0;
    double f = 0.0;
    double fdot = 0.0;
    double r = 1.0;
    double rdot = 0.0;
    double theta = 0.0;
};

struct ReducedDerivative {
    double df = 0.0;
    double dfdot = 0.0;
    double dr = 0.0;
    double drdot = 0.0;
    double dtheta = 0.0;
};

/// Masses, ring constants and angular momentum: everything the vector field needs.
struct RingSystem {
    int n = 2;
    double m1 = 1.0;
    double m2 = 1.0;
    double c1 = 0.0;
    RingConstants rc;

    static RingSystem make(int n, double m1, double m2, double c1) {
        return {n, m1, m2, c1, make_constants(n, m1, m2)};
    }

    static RingSystem from_seed(const SeedConfig& q) {
        q.validate();
        return make(q.n, q.m1, q.m2, q.y10 * q.dy20);
    }
};

inline ReducedState initial_state(const SeedConfig& q) {
    return {0.0, 0.0, q.df0, q.y10, 0.0, 0.0};
}

/// Axial-body to ring distance sqrt(r^2 + k^2 f^2).
inline double axial_distance(double r, double f, double k) {
    return std::hypot(r, k * f);
}

namespace detail {

inline void require_positive_radius(double r) {
    if (!(r > 0.0)) throw CollisionError("ring radius is not positive (r = " + std::to_string(r) + ")");
}

} // namespace detail

/// General-n vector field:
///   f'' = -(m1 + n m2) f / h^3
///   r'' = c1^2 / r^3 - a_n m2 / r^2 - m1 r / h^3
///   theta' = c1 / r^2
inline ReducedDerivative reduced_rhs(const ReducedState& s, const RingSystem& sys) {
    detail::require_positive_radius(s.r);
    const double h = axial_distance(s.r, s.f, sys.rc.k);
    const double h3 = h * h * h;
    const double r2 = s.r * s.r;
    ReducedDerivative d;
    d.df = s.fdot;
    d.dfdot = -sys.rc.mu_f * s.f / h3;
    d.dr = s.rdot;
    d.drdot = sys.c1 * sys.c1 / (r2 * s.r) - sys.rc.a_n * sys.m2 / r2 - sys.m1 * s.r / h3;
    d.dtheta = sys.c1 / r2;
    return d;
}

/// The n = 2 vector field written with k = (m1 + 2 m2) / (2 m2):
///   f'' = -2 m2 k f / h^3,  r'' = c1^2/r^3 - m2/(4 r^2) - 2 (k - 1) m2 r / h^3
inline ReducedDerivative reduced_rhs_three_body(const ReducedState& s, double c1, double m1, double m2) {
    detail::require_positive_radius(s.r);
    const double k = (m1 + 2.0 * m2) / (2.0 * m2);
    const double h = axial_distance(s.r, s.f, k);
    const double h3 = h * h * h;
    ReducedDerivative d;
    d.df = s.fdot;
    d.dfdot = -2.0 * m2 * k * s.f / h3;
    d.dr = s.rdot;
    d.drdot = c1 * c1 / (s.r * s.r * s.r) - m2 / (4.0 * s.r * s.r) - 2.0 * (k - 1.0) * m2 * s.r / h3;
    d.dtheta = c1 / (s.r * s.r);
    return d;
}

/// The n = 3 vector field with l = sqrt(3):
///   f'' = -(m1 + 3 m2) f / h^3,  r'' = c1^2/r^3 - 3 m2 / (l^3 r^2) - m1 r / h^3
inline ReducedDerivative reduced_rhs_four_body(const ReducedState& s, double c1, double m1, double m2) {
    detail::require_positive_radius(s.r);
    const double l = std::numbers::sqrt3;
    const double k = (m1 + 3.0 * m2) / (3.0 * m2);
    const double h = axial_distance(s.r, s.f, k);
    const double h3 = h * h * h;
    ReducedDerivative d;
    d.df = s.fdot;
    d.dfdot = -(m1 + 3.0 * m2) * s.f / h3;
    d.dr = s.rdot;
    d.drdot = c1 * c1 / (s.r * s.r * s.r) - 3.0 * m2 / (l * l * l * s.r * s.r) - m1 * s.r / h3;
    d.dtheta = c1 / (s.r * s.r);
    return d;
}

/// Total energy of the reconstructed (n+1)-body configuration.
inline double energy(const ReducedState& s, const RingSystem& sys) {
    detail::require_positive_radius(s.r);
    const double n = sys.n;
    const double h = axial_distance(s.r, s.f, sys.rc.k);
    const double kinetic = 0.5 * n * sys.m2 * (s.rdot * s.rdot + sys.c1 * sys.c1 / (s.r * s.r))
                         + sys.m1 * sys.rc.mu_f / (2.0 * n * sys.m2) * s.fdot * s.fdot;
    const double potential = -n * sys.m1 * sys.m2 / h - n * sys.rc.b_n * sys.m2 * sys.m2 / (2.0 * s.r);
    return kinetic + potential;
}

/// n = 2 energy in the three-body variables; Y' . Y' = r'^2 + c1^2 / r^2.
inline double three_body_energy(const ReducedState& s, double c1, double m1, double m2) {
    detail::require_positive_radius(s.r);
    const double k = (m1 + 2.0 * m2) / (2.0 * m2);
    const double h = axial_distance(s.r, s.f, k);
    return m2 * c1 * c1 / (s.r * s.r) - 2.0 * m1 * m2 / h - m2 * m2 / (2.0 * s.r)
         + (m1 * m1 + 2.0 * m1 * m2) / (4.0 * m2) * s.fdot * s.fdot + m2 * s.rdot * s.rdot;
}

struct RadialBounds {
    double d = 0.0;     ///< discriminant
    double r_lo = 0.0;
    double r_hi = 0.0;
};

/// Band that r(t) cannot leave when c2 < 0 and c1 != 0:
///   D = 2 n c1^2 c2 m2 + n^2 (m1 m2 + b_n m2^2 / 2)^2
///   r = (-n m1 m2 - n b_n m2^2 / 2 +- sqrt(D)) / (2 c2)
inline RadialBounds radial_bounds(const ConservedPair& c, const RingSystem& sys) {
    if (!(c.c2 < 0.0)) throw OutsideFamily("radial bounds need negative energy (c2 = " + std::to_string(c.c2) + ")");
    if (c.c1 == 0.0) throw OutsideFamily("radial bounds need nonzero angular momentum");
    const double n = sys.n;
    const double m1 = sys.m1;
    const double m2 = sys.m2;
    const double linear = n * m1 * m2 + 0.5 * n * sys.rc.b_n * m2 * m2;
    RadialBounds rb;
    rb.d = 2.0 * n * c.c1 * c.c1 * c.c2 * m2 + linear * linear;
    if (!(rb.d > 0.0)) throw TheoremViolation("radial discriminant is not positive");
    const double root = std::sqrt(rb.d);
    rb.r_lo = (-linear + root) / (2.0 * c.c2);
    rb.r_hi = (-linear - root) / (2.0 * c.c2);
    if (!(rb.r_lo > 0.0 && rb.r_lo < rb.r_hi)) throw TheoremViolation("radial bounds are not ordered");
    return rb;
}

/// n = 2 bounds with denominator 4 c2.
inline RadialBounds three_body_radial_bounds(const ConservedPair& c, double m1, double m2) {
    if (!(c.c2 < 0.0) || c.c1 == 0.0) throw OutsideFamily("three-body bounds need c2 < 0 and c1 != 0");
    const double linear = 4.0 * m1 * m2 + m2 * m2;
    RadialBounds rb;
    rb.d = 16.0 * c.c1 * c.c1 * c.c2 * m2 + linear * linear;
    rb.r_lo = (-linear + std::sqrt(rb.d)) / (4.0 * c.c2);
    rb.r_hi = (-linear - std::sqrt(rb.d)) / (4.0 * c.c2);
    return rb;
}

/// n = 3 bounds with l = sqrt(3).
inline RadialBounds four_body_radial_bounds(const ConservedPair& c, double m1, double m2) {
    if (!(c.c2 < 0.0) || c.c1 == 0.0) throw OutsideFamily("four-body bounds need c2 < 0 and c1 != 0");
    const double l = std::numbers::sqrt3;
    const double linear = 3.0 * m1 * m2 + 3.0 / l * m2 * m2;
    RadialBounds rb;
    rb.d = 6.0 * c.c1 * c.c1 * c.c2 * m2 + linear * linear;
    rb.r_lo = (-linear + std::sqrt(rb.d)) / (2.0 * c.c2);
    rb.r_hi = (-linear - std::sqrt(rb.d)) / (2.0 * c.c2);
    return rb;
}

/// Period of the planar Kepler orbit with the same radial band: a time scale
/// for property tests. mu = m1 + a_n m2 is the effective central mass when f = 0.
inline double characteristic_time(const RadialBounds& rb, const RingSystem& sys) {
    const double semi_major = 0.5 * (rb.r_lo + rb.r_hi);
    const double mu = sys.m1 + sys.rc.a_n * sys.m2;
    return 2.0 * std::numbers::pi * std::sqrt(semi_major * semi_major * semi_major / mu);
}

} // namespace ringorbit
