#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "ringorbit/gshape.hpp"
#include "ringorbit/spline.hpp"
#include "support/oracles.hpp"

using namespace ringorbit;

namespace {

SeedConfig table_seed() {
    SeedConfig q;
    q.n = 2;
    q.m1 = 41.0495;
    q.m2 = 81.3134;
    q.y10 = 11.3361;
    q.dy20 = 2.20041;
    q.df0 = 1.5009;
    q.theta0 = PiFraction(7, 6);
    q.t0 = 18.5318;
    return q;
}

SeedConfig kepler_seed() {
    SeedConfig q;
    q.n = 18;
    q.m1 = 2.0;
    q.m2 = oracle::nineteen_body_m2();
    q.y10 = 2.0;
    q.dy20 = -1.0;
    return q;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

} // namespace

TEST(Spline, ReproducesCubicsExactly) {
    std::vector<double> x, y;
    for (int i = 0; i < 9; ++i) {
        const double xi = 0.3 * i + 0.05 * i * i;
        x.push_back(xi);
        y.push_back(2.0 - xi + 0.5 * xi * xi - 0.25 * xi * xi * xi);
    }
    const CubicSpline s(x, y);
    for (double t = 0.0; t <= x.back(); t += 0.037) {
        EXPECT_NEAR(s(t), 2.0 - t + 0.5 * t * t - 0.25 * t * t * t, 1e-12);
        EXPECT_NEAR(s.derivative(t), -1.0 + t - 0.75 * t * t, 1e-11);
    }
}

TEST(Spline, AcceptsDecreasingAbscissaeAndRejectsBadInput) {
    const std::vector<double> x{3.0, 2.0, 1.0, 0.0};
    const std::vector<double> y{9.0, 4.0, 1.0, 0.0};
    const CubicSpline s(x, y);
    EXPECT_NEAR(s(1.5), 2.25, 1e-12);
    EXPECT_THROW(CubicSpline(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 2}), InvalidConfiguration);
    EXPECT_THROW(CubicSpline(std::vector<double>{0, 1, 1, 2}, std::vector<double>{0, 1, 2, 3}), InvalidConfiguration);
}

TEST(GOde, ThreeBodyDisplayMatchesGeneral) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double m1 = u(rng), m2 = u(rng), r = u(rng), g = u(rng) - 5.0, gp = u(rng) - 5.0;
        const ConservedPair cp{u(rng) - 5.0, -u(rng)};
        const auto rc = make_constants(2, m1, m2);
        const auto gen = g_ode_coefficients(r, g, gp, cp, 2, m1, m2, rc);
        const auto disp = g_ode_coefficients_three_body(r, g, gp, cp, m1, m2);
        EXPECT_LT(rel(gen.a, disp.a), 1e-12);
        EXPECT_LT(rel(gen.b, disp.b), 1e-12);
        EXPECT_LT(rel(gen.c, disp.c), 1e-12);
    }
}

TEST(GOde, FourBodyDisplayMatchesGeneral) {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double m1 = u(rng), m2 = u(rng), r = u(rng), g = u(rng) - 5.0, gp = u(rng) - 5.0;
        const ConservedPair cp{u(rng) - 5.0, -u(rng)};
        const auto rc = make_constants(3, m1, m2);
        const auto gen = g_ode_coefficients(r, g, gp, cp, 3, m1, m2, rc);
        const auto disp = g_ode_coefficients_four_body(r, g, gp, cp, m1, m2);
        EXPECT_LT(rel(gen.a, disp.a), 1e-12);
        EXPECT_LT(rel(gen.b, disp.b), 1e-12);
        EXPECT_LT(rel(gen.c, disp.c), 1e-12);
    }
}

TEST(GOde, PlanarAndLinearity) {
    const auto sys = RingSystem::make(4, 3.0, 2.0, 1.5);
    const ConservedPair cp{1.5, -2.0};
    EXPECT_EQ(g_ode_coefficients(2.0, 0.0, 0.3, cp, sys).c, 0.0);
    GSample s{2.0, 0.0, 0.0, 0.0};
    EXPECT_EQ(g_ode_residual(s, cp, sys), 0.0);
    GSample p{2.0, 0.4, -0.7, 1.3};
    const double r0 = g_ode_residual(p, cp, sys);
    p.gpp = *p.gpp + 1.0;
    EXPECT_NEAR(g_ode_residual(p, cp, sys) - r0, g_ode_coefficients(2.0, 0.4, -0.7, cp, sys).a, 1e-12);
    p.gpp.reset();
    EXPECT_THROW(g_ode_residual(p, cp, sys), InvalidConfiguration);
}

TEST(GOde, ChainRuleResidualOnTrajectorySegments) {
    for (const auto& q : {table_seed(), oracle::SeedSampler(5).sample_L(3), oracle::SeedSampler(6).sample_L(5)}) {
        const auto sys = RingSystem::from_seed(q);
        const auto cp = conserved_from_seed(q);
        const auto rb = radial_bounds(cp, sys);
        const auto traj = integrate(q, 4.0 * characteristic_time(rb, sys));
        const auto segs = monotone_segments(traj);
        ASSERT_FALSE(segs.empty());
        for (const auto& [a, b] : segs) {
            const auto samples = g_samples_from_segment(traj, a, b, 200);
            ASSERT_GT(samples.size(), 150u);
            EXPECT_LT(residual_summary(samples, cp, sys).max_normalized, 1e-6);
        }
    }
}

TEST(GOde, WrongEnergyIsDetected) {
    const auto q = table_seed();
    const auto sys = RingSystem::from_seed(q);
    auto cp = conserved_from_seed(q);
    const auto traj = integrate(q, *q.t0);
    const auto segs = monotone_segments(traj);
    ASSERT_FALSE(segs.empty());
    const auto samples = g_samples_from_segment(traj, segs[0].first, segs[0].second, 100);
    cp.c2 *= 1.01;
    EXPECT_GT(residual_summary(samples, cp, sys).max_normalized, 1e-4);
}

TEST(RdotSquared, MatchesTrajectory) {
    const auto q = table_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    const auto traj = integrate(q, *q.t0);
    for (const auto& s : traj.samples()) {
        if (s.rdot == 0.0) continue;
        const double p = rdot_squared_from_g(s.r, s.f, s.fdot / s.rdot, cp, sys);
        const double want = s.rdot * s.rdot;
        EXPECT_TRUE(std::abs(p - want) <= 1e-8 * want || std::abs(p - want) < 1e-10) << s.t;
    }
}

TEST(RdotSquared, VanishesAtPlanarTurningRadii) {
    const auto q = kepler_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    EXPECT_NEAR(rdot_squared_from_g(2.0, 0.0, 0.0, cp, sys), 0.0, 1e-14);
    EXPECT_NEAR(rdot_squared_from_g(2.0 / 3.0, 0.0, 0.0, cp, sys), 0.0, 1e-13);
    EXPECT_LT(rdot_squared_from_g(2.5, 0.0, 0.0, cp, sys), 0.0);
}

TEST(SeparableRelation, ThreeBodyDisplay) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    int checked = 0;
    while (checked < 100) {
        const double m1 = u(rng), m2 = u(rng), r = u(rng), g = u(rng) - 5.0, gp = u(rng) - 5.0;
        const ConservedPair cp{u(rng) - 5.0, -u(rng)};
        const auto sys = RingSystem::make(2, m1, m2, cp.c1);
        const double p = rdot_squared_from_g(r, g, gp, cp, sys);
        if (!(p > 0.0)) continue;
        const double lhs = separable_relation_three_body(r, g, gp, std::sqrt(p), cp.c1, m1, m2);
        EXPECT_LT(rel(lhs, 2.0 * cp.c2 / m2), 1e-11);
        ++checked;
    }
}

TEST(Quadrature, KeplerConic) {
    const oracle::KeplerExample kep;
    const auto q = kepler_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    std::vector<double> radii;
    for (int i = 1; i <= 40; ++i) radii.push_back(2.0 - (4.0 / 3.0) * i / 40.0);
    const auto pts = reconstruct_by_quadrature([](double) { return GValue{0.0, 0.0}; }, 2.0, 2.0 / 3.0, radii, cp,
                                               sys);
    ASSERT_EQ(pts.size(), radii.size());
    // Times counted from a turning radius move by sqrt(eps) when the root does
    // (m2 is rounded), so absolute values get 1e-7 and increments 1e-10.
    for (const auto& p : pts) {
        EXPECT_NEAR(p.t, kep.t_of_r(p.r), 1e-7) << p.r;
        EXPECT_NEAR(p.theta, oracle::KeplerExample::theta_of_r(p.r), 1e-7) << p.r;
        EXPECT_EQ(p.f, 0.0);
    }
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        EXPECT_NEAR(pts[i].t - pts[0].t, kep.t_of_r(pts[i].r) - kep.t_of_r(pts[0].r), 1e-10) << pts[i].r;
        EXPECT_NEAR(pts[i].theta - pts[0].theta,
                    oracle::KeplerExample::theta_of_r(pts[i].r) - oracle::KeplerExample::theta_of_r(pts[0].r), 1e-10);
    }
    EXPECT_NEAR(pts.back().t, 0.5 * kep.period(), 1e-7);
}

TEST(Quadrature, ReversedBranchMirrors) {
    const auto q = kepler_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    auto g0 = [](double) { return GValue{0.0, 0.0}; };
    const std::vector<double> radii{1.0, 1.5, 2.0};
    const auto fwd = reconstruct_by_quadrature(g0, 2.0 / 3.0, 2.0, radii, cp, sys);
    QuadratureOptions flip;
    flip.branch = -1;
    const auto rev = reconstruct_by_quadrature(g0, 2.0 / 3.0, 2.0, radii, cp, sys, flip);
    for (std::size_t i = 0; i < radii.size(); ++i) {
        EXPECT_GT(fwd[i].t, 0.0);
        EXPECT_NEAR(rev[i].t, -fwd[i].t, 1e-12);
        EXPECT_NEAR(rev[i].theta, -fwd[i].theta, 1e-12);
    }
}

TEST(Quadrature, InteriorNegativeIsInvalid) {
    const auto q = kepler_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    const std::vector<double> radii{3.0};
    EXPECT_THROW(reconstruct_by_quadrature([](double) { return GValue{0.0, 0.0}; }, 2.5, 3.5, radii, cp, sys),
                 InvalidSegment);
    EXPECT_THROW(reconstruct_by_quadrature([](double) { return GValue{0.0, 0.0}; }, 1.0, 1.0, radii, cp, sys),
                 InvalidSegment);
}

TEST(Quadrature, RoundTripThroughSpline) {
    const auto q = table_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto cp = conserved_from_seed(q);
    const auto traj = integrate(q, *q.t0);
    const auto segs = monotone_segments(traj);
    ASSERT_FALSE(segs.empty());
    const auto [ta, tb] = segs.front();
    std::vector<double> rs, fs, ts;
    const int count = 3000;
    for (int i = 1; i < count; ++i) {
        const double t = ta + (tb - ta) * i / count;
        const auto s = traj.state_at(t);
        rs.push_back(s.r);
        fs.push_back(s.f);
        ts.push_back(t);
    }
    const CubicSpline g(rs, fs);
    // Stay away from the turning points, where g has square-root behaviour a spline cannot follow.
    const std::size_t i0 = count / 10, i1 = 9 * count / 10;
    std::vector<double> radii;
    for (std::size_t i = i0 + 50; i <= i1; i += 50) radii.push_back(rs[i]);
    const auto pts = reconstruct_by_quadrature([&g](double r) { return GValue{g(r), g.derivative(r)}; }, rs[i0],
                                               rs[i1], radii, cp, sys);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const std::size_t i = i0 + 50 * (k + 1);
        EXPECT_NEAR(pts[k].t, ts[i] - ts[i0], 1e-6);
        EXPECT_NEAR(pts[k].theta, traj.state_at(ts[i]).theta - traj.state_at(ts[i0]).theta, 1e-6);
        EXPECT_NEAR(pts[k].f, fs[i], 1e-6);
    }
}

TEST(GSampleCsv, Columns) {
    const auto sys = RingSystem::make(2, 1.0, 1.0, 1.0);
    const std::vector<GSample> s{{1.0, 0.1, 0.2, 0.3}, {1.1, 0.1, 0.2, std::nullopt}};
    std::ostringstream os;
    write_gsample_csv(os, s, {1.0, -1.0}, sys);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "r,g,gp,gpp,residual");
}
