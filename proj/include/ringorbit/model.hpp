#pragma once

// Domain types shared by every module: seeds, ring constants, conserved
// quantities and family membership.
//
// Units have G = 1. Body 0 (mass m1) moves on the z axis; n bodies of mass m2
// sit on a regular n-gon of radius r at height -(m1 / (n m2)) f.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>

#include "ringorbit/errors.hpp"

namespace ringorbit {

/// An angle stored exactly as (num / den) * pi, den > 0, gcd(|num|, den) = 1.
class PiFraction {
public:
    constexpr PiFraction() = default;

    PiFraction(std::int64_t num, std::int64_t den) {
        if (den == 0) {
            throw InvalidConfiguration("angle denominator must be nonzero");
        }
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        num_ = num / g;
        den_ = den / g;
    }

    /// Parses "p/q" or a bare integer "p".
    static PiFraction parse(const std::string& text) {
        const auto slash = text.find('/');
        try {
            std::size_t used = 0;
            if (slash == std::string::npos) {
                const auto p = std::stoll(text, &used);
                if (used != text.size()) throw InvalidConfiguration("trailing characters");
                return {p, 1};
            }
            const std::string ps = text.substr(0, slash);
            const std::string qs = text.substr(slash + 1);
            const auto p = std::stoll(ps, &used);
            if (used != ps.size()) throw InvalidConfiguration("trailing characters");
            const auto q = std::stoll(qs, &used);
            if (used != qs.size()) throw InvalidConfiguration("trailing characters");
            return {p, q};
        } catch (const std::logic_error&) {
            throw InvalidConfiguration("cannot parse angle '" + text + "' as p/q");
        } catch (const InvalidConfiguration&) {
            throw InvalidConfiguration("cannot parse angle '" + text + "' as p/q");
        }
    }

    [[nodiscard]] constexpr std::int64_t num() const { return num_; }
    [[nodiscard]] constexpr std::int64_t den() const { return den_; }

    /// The only place the rational is rounded to binary64.
    [[nodiscard]] double radians() const {
        return static_cast<double>(num_) * std::numbers::pi / static_cast<double>(den_);
    }

    [[nodiscard]] std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    friend constexpr bool operator==(const PiFraction&, const PiFraction&) = default;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Smallest s > 0 with s * theta0 an integer multiple of 2 pi.
inline std::int64_t full_period_multiplier(const PiFraction& theta0) {
    const std::int64_t p = theta0.num() < 0 ? -theta0.num() : theta0.num();
    const std::int64_t two_q = 2 * theta0.den();
    return two_q / std::gcd(p, two_q);
}

/// A point of the family: masses, ring size, initial speeds and the periodicity target.
struct SeedConfig {
    int n = 2;
    double m1 = 1.0;
    double m2 = 1.0;
    double y10 = 1.0;   ///< r(0)
    double dy20 = 0.0;  ///< tangential speed of ring body 1 at t = 0
    double df0 = 0.0;   ///< axial speed of body 0 at t = 0
    PiFraction theta0;
    std::optional<double> t0;

    void validate() const {
        if (n < 2) throw InvalidConfiguration("n must be at least 2, got " + std::to_string(n));
        if (!(m1 > 0.0) || !std::isfinite(m1)) throw InvalidConfiguration("m1 must be positive");
        if (!(m2 > 0.0) || !std::isfinite(m2)) throw InvalidConfiguration("m2 must be positive");
        if (!(y10 > 0.0) || !std::isfinite(y10)) throw InvalidConfiguration("y10 must be positive");
        if (!std::isfinite(dy20) || !std::isfinite(df0)) {
            throw InvalidConfiguration("initial speeds must be finite");
        }
        if (t0 && !(*t0 > 0.0)) throw InvalidConfiguration("t0 must be positive when given");
    }

    friend bool operator==(const SeedConfig&, const SeedConfig&) = default;
};

struct RingConstants {
    int n = 2;
    double k = 1.0;     ///< (m1 + n m2) / (n m2)
    double a_n = 0.0;   ///< ring force constant
    double b_n = 0.0;   ///< ring potential constant
    double mu_f = 0.0;  ///< m1 + n m2
};

/// sum_{j=1}^{n-1} (1 - w^j) / |w^j - 1|^3 with w = exp(2 pi i / n), summed as
/// conjugate pairs so the imaginary part is reported, not assumed.
inline std::complex<double> ring_force_sum(int n) {
    if (n < 2) throw InvalidConfiguration("n must be at least 2");
    auto term = [n](int j) {
        // Reduce j/n to (-1/2, 1/2] turns so that w^{n-j} is the exact conjugate of w^j.
        const int jj = 2 * j > n ? j - n : j;
        const double phi = 2.0 * std::numbers::pi * jj / n;
        const std::complex<double> w{std::cos(phi), std::sin(phi)};
        const double d = std::abs(w - 1.0);
        return (1.0 - w) / (d * d * d);
    };
    std::complex<double> sum{0.0, 0.0};
    for (int j = 1; 2 * j < n; ++j) {
        sum += term(j) + term(n - j);
    }
    if (n % 2 == 0) sum += term(n / 2);
    return sum;
}

/// sum_{j=1}^{n-1} 1 / |w^j - 1|
inline double ring_potential_sum(int n) {
    if (n < 2) throw InvalidConfiguration("n must be at least 2");
    double sum = 0.0;
    for (int j = 1; j < n; ++j) {
        const int jj = 2 * j > n ? j - n : j;
        const double phi = 2.0 * std::numbers::pi * jj / n;
        sum += 1.0 / std::abs(std::complex<double>{std::cos(phi) - 1.0, std::sin(phi)});
    }
    return sum;
}

inline RingConstants make_constants(int n, double m1, double m2) {
    if (n < 2) throw InvalidConfiguration("n must be at least 2, got " + std::to_string(n));
    if (!(m1 > 0.0) || !(m2 > 0.0)) throw InvalidConfiguration("masses must be positive");
    const auto force = ring_force_sum(n);
    if (std::abs(force.imag()) >= 1e-14) {
        throw InvalidConfiguration("ring force sum has a non-cancelling imaginary part");
    }
    RingConstants rc;
    rc.n = n;
    rc.mu_f = m1 + n * m2;
    rc.k = rc.mu_f / (n * m2);
    rc.a_n = force.real();
    rc.b_n = ring_potential_sum(n);
    return rc;
}

struct ConservedPair {
    double c1 = 0.0;  ///< r^2 dtheta/dt
    double c2 = 0.0;  ///< total energy
};

/// Energy and angular momentum at t = 0, where f = 0, dr/dt = 0 and h = r = y10.
inline ConservedPair conserved_from_seed(const SeedConfig& q) {
    q.validate();
    const auto rc = make_constants(q.n, q.m1, q.m2);
    const double n = q.n;
    ConservedPair c;
    c.c1 = q.y10 * q.dy20;
    c.c2 = 0.5 * n * q.m2 * q.dy20 * q.dy20
         + q.m1 * rc.mu_f / (2.0 * n * q.m2) * q.df0 * q.df0
         - n * q.m1 * q.m2 / q.y10
         - n * rc.b_n * q.m2 * q.m2 / (2.0 * q.y10);
    return c;
}

/// Closed form for n = 2 written in the three-body variables (df0 squared).
inline double three_body_seed_energy(double m1, double m2, double y10, double dy20, double df0) {
    return m2 * dy20 * dy20 - m2 / (2.0 * y10) * (4.0 * m1 + m2)
         + m1 / (4.0 * m2) * (m1 + 2.0 * m2) * df0 * df0;
}

/// Left side of the boundedness inequality; negative means bounded.
inline double boundedness_margin(const ConservedPair& c, int n, double m1, double m2, const RingConstants& rc) {
    return 2.0 * c.c1 * c.c1 * c.c2
         + n * rc.a_n * m2 * m2 * (2.0 * m1 + (rc.b_n - rc.a_n) * m2);
}

/// 8 m1 m2^2 + m2^3 + 16 c2 c1^2, the n = 2 form (eight times the general one).
inline double three_body_boundedness_margin(const ConservedPair& c, double m1, double m2) {
    return 8.0 * m1 * m2 * m2 + m2 * m2 * m2 + 16.0 * c.c2 * c.c1 * c.c1;
}

struct FamilyMembership {
    bool in_L = false;  ///< c1 != 0 and c2 < 0: collisionless, defined for all time
    bool in_B = false;  ///< in_L and the boundedness inequality holds
};

inline FamilyMembership validate_family(const SeedConfig& q) {
    const auto c = conserved_from_seed(q);
    const auto rc = make_constants(q.n, q.m1, q.m2);
    FamilyMembership fm;
    fm.in_L = c.c1 != 0.0 && c.c2 < 0.0;
    fm.in_B = fm.in_L && boundedness_margin(c, q.n, q.m1, q.m2, rc) < 0.0;
    return fm;
}

} // namespace ringorbit
