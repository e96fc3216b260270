#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "ringorbit/integrate.hpp"
#include "support/oracles.hpp"

using namespace ringorbit;

namespace {

SeedConfig kepler_seed() {
    SeedConfig q;
    q.n = 18;
    q.m1 = 2.0;
    q.m2 = oracle::nineteen_body_m2();
    q.y10 = 2.0;
    q.dy20 = -1.0;
    q.df0 = 0.0;
    q.theta0 = PiFraction(-2, 1);
    q.t0 = oracle::KeplerExample{}.period();
    return q;
}

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

} // namespace

TEST(Integrate, KeplerExampleFollowsTheConic) {
    const oracle::KeplerExample kep;
    const auto q = kepler_seed();
    const auto traj = integrate(q, 2.0 * kep.period());
    for (const auto& s : traj.samples()) {
        EXPECT_EQ(s.f, 0.0);
        EXPECT_NEAR(s.r, oracle::KeplerExample::r_of_theta(s.theta), 1e-9);
        const auto [r, th] = kep.r_theta_at(s.t);
        EXPECT_NEAR(s.r, r, 1e-9);
    }
    const auto end = traj.samples().back();
    EXPECT_NEAR(end.r, 2.0, 1e-9);
    EXPECT_NEAR(end.theta, -4.0 * std::numbers::pi, 1e-9);
}

TEST(Integrate, EventsAlternateAtApsides) {
    const oracle::KeplerExample kep;
    const auto traj = integrate(kepler_seed(), 3.25 * kep.period());
    const auto& ev = traj.events();
    // t = 0 is an apocentre (r' = 0 there); then peri/apo alternate every half period.
    ASSERT_EQ(ev.size(), 7u);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        EXPECT_NEAR(ev[i].t, 0.5 * kep.period() * static_cast<double>(i), 1e-9) << i;
        EXPECT_EQ(ev[i].kind, i % 2 == 0 ? EventKind::rdot_zero_max : EventKind::rdot_zero_min) << i;
        EXPECT_NEAR(ev[i].state.r, i % 2 == 0 ? 2.0 : 2.0 / 3.0, 1e-9);
    }
    const auto segs = monotone_segments(traj);
    ASSERT_EQ(segs.size(), 6u);
    for (const auto& [a, b] : segs) EXPECT_NEAR(b - a, 0.5 * kep.period(), 1e-9);
}

TEST(Integrate, CircularOrbitHasNoSpuriousEvents) {
    SeedConfig q;
    q.n = 3;
    q.m1 = 5.0;
    q.m2 = 2.0;
    q.y10 = 3.0;
    const auto rc = make_constants(3, 5.0, 2.0);
    q.dy20 = std::sqrt((q.m1 + rc.a_n * q.m2) / q.y10);
    const auto traj = integrate(q, 50.0);
    EXPECT_TRUE(traj.events().empty());
    for (const auto& s : traj.samples()) EXPECT_NEAR(s.r, 3.0, 1e-9);
    EXPECT_LT(traj.max_abs_drift(), 1e-12);
}

TEST(Integrate, TimeReversalReturnsToStart) {
    const auto q = table_seed();
    const auto sys = RingSystem::from_seed(q);
    const auto end = propagate(sys, initial_state(q), 10.0);
    ReducedState back = end;
    back.t = 0.0;
    back.fdot = -end.fdot;
    back.rdot = -end.rdot;
    const auto sys_rev = RingSystem::make(q.n, q.m1, q.m2, -sys.c1);
    back.theta = 0.0;
    const auto home = propagate(sys_rev, back, 10.0);
    EXPECT_NEAR(home.f, 0.0, 1e-8);
    EXPECT_NEAR(home.fdot, -q.df0, 1e-8);
    EXPECT_NEAR(home.r, q.y10, 1e-8);
    EXPECT_NEAR(home.rdot, 0.0, 1e-8);
    EXPECT_NEAR(home.theta, -end.theta, 1e-8);
}

TEST(Integrate, ConvergesAsToleranceTightens) {
    const auto q = table_seed();
    const auto sys = RingSystem::from_seed(q);
    IntegratorSettings ref;
    ref.rel_tol = ref.abs_tol = 1e-13;
    const auto exact = propagate(sys, initial_state(q), 10.0, ref);
    double prev = 1.0;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        IntegratorSettings s;
        s.rel_tol = s.abs_tol = tol;
        const auto got = propagate(sys, initial_state(q), 10.0, s);
        const double err = std::abs(got.r - exact.r) + std::abs(got.f - exact.f);
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-7);
}

TEST(Integrate, EnergyDriftAndStateAt) {
    const auto q = table_seed();
    const auto traj = integrate(q, *q.t0);
    EXPECT_LT(traj.max_abs_drift(), 1e-9);
    EXPECT_THROW(traj.state_at(-1.0), OutOfRange);
    EXPECT_THROW(traj.state_at(*q.t0 + 1.0), OutOfRange);
    const auto& s = traj.samples()[5];
    const auto at = traj.state_at(s.t);
    EXPECT_EQ(at.r, s.r);
    EXPECT_EQ(traj.state_at(traj.t_end()).r, traj.samples().back().r);
    // Dense output agrees with an independent run stopped at the same time.
    const double t = 0.37 * *q.t0;
    const auto direct = propagate(traj.system(), initial_state(q), t);
    EXPECT_NEAR(traj.state_at(t).r, direct.r, 1e-9);
    EXPECT_NEAR(traj.state_at(t).f, direct.f, 1e-9);
}

TEST(Integrate, SettingsValidation) {
    IntegratorSettings s;
    s.rel_tol = 0.0;
    EXPECT_THROW(s.validate(), InvalidConfiguration);
    s.rel_tol = 1e-2;
    EXPECT_THROW(s.validate(), InvalidConfiguration);
    s.rel_tol = 1e-9;
    s.max_step = -1.0;
    EXPECT_THROW(s.validate(), InvalidConfiguration);
    EXPECT_THROW(integrate(table_seed(), 0.0), InvalidConfiguration);
}

TEST(Integrate, CsvHasHeaderAndOneRowPerSample) {
    const auto traj = integrate(table_seed(), 1.0);
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "t,f,fdot,r,rdot,theta,c2_rel_drift");
    std::size_t rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, traj.samples().size());
}

TEST(NoCollision, TableSeedStaysInBand) {
    const auto q = table_seed();
    const auto traj = integrate(q, 3.0 * *q.t0);
    const auto rep = no_collision_certificate(traj);
    EXPECT_GT(rep.lower_margin, 0.0);
    EXPECT_GT(rep.upper_margin, 0.0);
    EXPECT_GT(rep.points_checked, traj.samples().size());
}

TEST(NoCollision, ViolationIsReported) {
    const auto traj = integrate(table_seed(), 5.0);
    RadialBounds fake{1.0, 100.0, 200.0};
    EXPECT_THROW(no_collision_certificate(traj, fake), TheoremViolation);
}
