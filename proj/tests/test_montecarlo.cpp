#include <doctest.h>

#include <cmath>
#include <random>

#include "narrowcap/asymptotics.hpp"
#include "narrowcap/error.hpp"
#include "narrowcap/montecarlo.hpp"
#include "oracles.hpp"

using namespace narrowcap;
using doctest::Approx;

namespace {

WalkerConfig small(std::int64_t n, std::uint64_t seed = 7) {
    WalkerConfig c;
    c.n_walkers = n;
    c.seed = seed;
    return c;
}

const Trap kCentered({0, 0}, 1, 1, 0.1, 0);

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("reflection examples") {
    const Domain sq = Domain::rectangle(1, 1), disk = Domain::unit_disk();
    const Point2 a = reflect(sq, {0.95, 0.5}, {1.07, 0.5});
    CHECK(a.x1 == Approx(0.93));
    CHECK(a.x2 == Approx(0.5));
    const Point2 b = reflect(disk, {0.99, 0}, {1.03, 0});
    CHECK(b.x1 == Approx(0.97));
    CHECK(std::abs(b.x2) < 1e-15);
    const Point2 c = reflect(sq, {0.97, 0.02}, {1.05, -0.03});
    CHECK(c.x1 == Approx(0.95));
    CHECK(c.x2 == Approx(0.03));
    const Point2 in = reflect(disk, {0.2, 0.1}, {0.3, 0.1});
    CHECK(in == Point2{0.3, 0.1});
}

TEST_CASE("reflection is specular on curved walls") {
    const Domain ell = Domain::ellipse(1.5, 1.0);
    const Point2 from{1.2, 0.5}, to{1.5, 0.7};
    const Point2 r = reflect(ell, from, to);
    CHECK(ell.contains(r));
    CHECK(norm(r - from) <= norm(to - from) + 1e-12);
}

TEST_CASE("reflection keeps points inside") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> step(0.0, 0.2);
    for (const Domain& d : {Domain::unit_disk(), Domain::rectangle(1.0, 0.8), Domain::ellipse(1.5, 1.0)}) {
        for (int i = 0; i < 2000; ++i) {
            const Point2 from = oracle::uniform_in(d, rng);
            bool projected = false;
            const Point2 to = reflect(d, from, from + Vec2{step(rng), step(rng)}, &projected);
            CHECK(d.contains_closed(to));
        }
    }
}

TEST_CASE("configuration validation") {
    WalkerConfig c;
    CHECK_NOTHROW(c.validate());
    c.dt = 0;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
    c = WalkerConfig{};
    c.max_dt = 1e-6;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
    c = WalkerConfig{};
    c.n_walkers = 0;
    CHECK_THROWS_AS(c.validate(), PreconditionError);
}

TEST_CASE("preconditions") {
    const Domain disk = Domain::unit_disk();
    CHECK_THROWS_AS(simulate_mfpt({0.05, 0}, disk, kCentered, 1.0, small(10)), PreconditionError);
    CHECK_THROWS_AS(simulate_mfpt({1.5, 0}, disk, kCentered, 1.0, small(10)), PreconditionError);
    CHECK_THROWS_AS(simulate_gmfpt(disk, Trap({0, 0}, 1, 0, 0.1, 0), 1.0, small(10)), PreconditionError);
    CHECK_THROWS_AS(simulate_gmfpt(disk, Trap({0.95, 0}, 1, 1, 0.1, 0), 1.0, small(10)), PreconditionError);
    CHECK_THROWS_AS(simulate_gmfpt(disk, kCentered, 0.0, small(10)), PreconditionError);
}

TEST_CASE("deterministic and independent of the thread count") {
    const Domain disk = Domain::unit_disk();
    WalkerConfig c = small(400);
    c.threads = 1;
    const FptEstimate one = simulate_gmfpt(disk, kCentered, 1.0, c);
    c.threads = 4;
    const FptEstimate four = simulate_gmfpt(disk, kCentered, 1.0, c);
    const FptEstimate again = simulate_gmfpt(disk, kCentered, 1.0, c);
    CHECK(one.mean == four.mean);
    CHECK(one.std_error == four.std_error);
    CHECK(one.total_steps == four.total_steps);
    CHECK(four.mean == again.mean);
}

TEST_CASE("summary statistics") {
    const FptEstimate e = summarize({1.0, 2.0, 3.0, -1.0});
    CHECK(e.n_walkers == 4);
    CHECK(e.n_absorbed == 3);
    CHECK(e.n_censored == 1);
    CHECK(e.mean == Approx(2.0));
    CHECK(e.std_error == Approx(1.0 / std::sqrt(3.0)));
    CHECK(e.censoring_flag);
}

TEST_CASE("small runs agree with the exact radial solution") {
    const Domain disk = Domain::unit_disk();
    const FptEstimate g = simulate_gmfpt(disk, kCentered, 1.0, small(4000));
    CHECK(g.n_censored == 0);
    CHECK_FALSE(g.censoring_flag);
    CHECK_FALSE(g.step_flag);
    CHECK_FALSE(g.cap_flag);
    CHECK(std::abs(g.mean - exact_radial_gmfpt(0.1, 1.0)) < 4 * g.std_error);

    const FptEstimate u = simulate_mfpt({0.6, 0.0}, disk, kCentered, 1.0, small(4000));
    CHECK(std::abs(u.mean - exact_radial_u(0.6, 0.1, 1.0)) < 4 * u.std_error);
}

TEST_CASE("disjoint seeds agree") {
    const Domain rect = Domain::rectangle(1.0, 0.8);
    const Trap t({0.4, 0.4}, 2, 1, 0.05, 0.3);
    const FptEstimate a = simulate_gmfpt(rect, t, 1.0, small(2000, 1));
    const FptEstimate b = simulate_gmfpt(rect, t, 1.0, small(2000, 2));
    CHECK(a.mean != b.mean);
    CHECK(std::abs(a.mean - b.mean) < 6 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("doubling the diffusivity halves the time") {
    const Domain ell = Domain::ellipse(1.5, 1.0);
    const Trap t({0.3, 0.2}, 2, 1, 0.05, 1.0);
    const FptEstimate a = simulate_gmfpt(ell, t, 1.0, small(2000, 3));
    const FptEstimate b = simulate_gmfpt(ell, t, 2.0, small(2000, 3));
    CHECK(std::abs(2 * b.mean - a.mean) < 3 * std::hypot(2 * b.std_error, a.std_error));
}

TEST_CASE("step flag fires for coarse steps") {
    WalkerConfig c = small(50);
    c.dt = 1e-3;
    c.max_dt = 1e-2;
    const FptEstimate e = simulate_gmfpt(Domain::unit_disk(), Trap({0, 0}, 2, 1, 0.05, 0), 1.0, c);
    CHECK(e.step_flag);
}

TEST_CASE("censoring is reported, not averaged") {
    WalkerConfig c = small(200);
    c.max_steps = 2000;  // clock runs out at t = 0.02
    const FptEstimate e = simulate_mfpt({0.9, 0.0}, Domain::unit_disk(), kCentered, 1.0, c);
    CHECK(e.n_censored > 0);
    CHECK(e.n_absorbed + e.n_censored == 200);
    CHECK(e.censoring_flag);

    c.max_steps = 100'000;  // t = 1, far below 50 mean first-passage times
    CHECK(simulate_mfpt({0.9, 0.0}, Domain::unit_disk(), kCentered, 1.0, c).cap_flag);
}

TEST_CASE("time-step bias probe") {
    WalkerConfig c = small(1500);
    const BiasProbeReport r = timestep_bias_probe({4e-5, 1e-5}, c);
    REQUIRE(r.rows.size() == 2);
    CHECK(r.exact == Approx(0.7891718).epsilon(1e-7));
    for (const auto& row : r.rows) {
        CHECK(row.estimate.n_walkers == 1500);
        CHECK(row.error == Approx(row.estimate.mean - r.exact));
    }
    CHECK(std::isfinite(r.extrapolated));
    CHECK(r.extrapolated_std_error > 0.0);
    CHECK_THROWS_AS(timestep_bias_probe({1e-5}, c), PreconditionError);
    CHECK_THROWS_AS(timestep_bias_probe({1e-5, 4e-5}, c), PreconditionError);
}

}
