#include "smib/swing_dynamics.hpp"

#include <cmath>

#include "doctest.h"

using namespace smib;

namespace {

const SwingParams kDefault{0.4, 0.15, 0.2, 1.0, 1.0};

// Fixed-step classical RK4, the independent oracle for the adaptive integrator.
State rk4_at(const SwingParams& params, double p1, State init, double t_target, double h) {
    State y = init;
    const long n = std::lround(t_target / h);
    auto f = [&](const State& s) { return swing_rhs(s, params, p1); };
    for (long i = 0; i < n; ++i) {
        const StateDeriv k1 = f(y);
        const StateDeriv k2 = f({y.delta + 0.5 * h * k1.ddelta, y.omega + 0.5 * h * k1.domega});
        const StateDeriv k3 = f({y.delta + 0.5 * h * k2.ddelta, y.omega + 0.5 * h * k2.domega});
        const StateDeriv k4 = f({y.delta + h * k3.ddelta, y.omega + h * k3.domega});
        y.delta += h / 6.0 * (k1.ddelta + 2 * k2.ddelta + 2 * k3.ddelta + k4.ddelta);
        y.omega += h / 6.0 * (k1.domega + 2 * k2.domega + 2 * k3.domega + k4.domega);
    }
    return y;
}

}  // namespace

TEST_CASE("swing_rhs at the equilibrium angle is zero") {
    SwingParams p = kDefault;
    const State eq{std::asin(0.5), 0.0};
    const StateDeriv d = swing_rhs(eq, p, 0.1);
    CHECK(d.ddelta == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(d.domega == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("swing_rhs closed-form value") {
    const StateDeriv d = swing_rhs({0.1, 0.1}, kDefault, 0.1);
    CHECK(d.ddelta == doctest::Approx(0.1));
    CHECK(d.domega == doctest::Approx((0.1 - 0.015 - 0.2 * std::sin(0.1)) / 0.4).epsilon(1e-12));
    CHECK(d.domega == doctest::Approx(0.1625833).epsilon(1e-6));
}

TEST_CASE("swing_rhs zero input zero state") {
    const StateDeriv d = swing_rhs({0.0, 0.0}, kDefault, 0.0);
    CHECK(d.ddelta == 0.0);
    CHECK(d.domega == 0.0);
}

TEST_CASE("rhs output satisfies the swing equation identically") {
    // m·ω̇ + d·ω + b12·v1·v2·sin(δ) − p1 must recompose to exactly zero.
    SwingParams p{0.31, 0.07, 0.2, 1.02, 0.98};
    for (double delta : {-1.0, 0.0, 0.37, 2.5}) {
        for (double omega : {-0.5, 0.0, 0.21}) {
            for (double p1 : {0.0, 0.1, 0.17}) {
                const StateDeriv d = swing_rhs({delta, omega}, p, p1);
                const double residual = p.m * d.domega + p.d * omega +
                                        p.b12 * p.v1 * p.v2 * std::sin(delta) - p1;
                CHECK(std::abs(residual) <= 1e-15);
            }
        }
    }
}

TEST_CASE("equilibrium") {
    SUBCASE("zero power") {
        const State eq = equilibrium(kDefault, 0.0);
        CHECK(eq.delta == 0.0);
        CHECK(eq.omega == 0.0);
    }
    SUBCASE("operating range value") {
        const State eq = equilibrium(kDefault, 0.1);
        CHECK(eq.delta == doctest::Approx(0.5235988).epsilon(1e-6));
        CHECK(eq.omega == 0.0);
    }
    SUBCASE("beyond pull-out power") {
        CHECK_THROWS_AS(equilibrium(kDefault, 0.25), NoEquilibriumError);
        CHECK_THROWS_AS(equilibrium(kDefault, -0.25), NoEquilibriumError);
    }
    SUBCASE("equilibrium state is stationary") {
        for (double p1 : {0.0, 0.05, 0.1, 0.18}) {
            const State eq = equilibrium(kDefault, p1);
            const StateDeriv d = swing_rhs(eq, kDefault, p1);
            CHECK(d.ddelta == 0.0);
            CHECK(std::abs(d.domega) <= 1e-16);
        }
    }
}

TEST_CASE("energy") {
    SUBCASE("hand value at the origin") {
        CHECK(energy({0.0, 0.0}, kDefault, 0.0) == doctest::Approx(-0.2).epsilon(1e-14));
    }
    SUBCASE("even in omega") {
        const double e1 = energy({0.3, 0.7}, kDefault, 0.1);
        const double e2 = energy({0.3, -0.7}, kDefault, 0.1);
        CHECK(e1 == e2);
    }
}

TEST_CASE("integrate input validation") {
    CHECK_THROWS_AS(integrate(kDefault, 0.1, {0.1, 0.1}, -1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(integrate(kDefault, 0.1, {0.1, 0.1}, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(integrate(kDefault, 0.1, {0.1, 0.1}, 1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(integrate(kDefault, 0.1, {0.1, 0.1}, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("equilibrium initial state stays fixed over a single-step grid") {
    const State eq = equilibrium(kDefault, 0.1);
    const Trajectory traj = integrate(kDefault, 0.1, eq, 0.1, 0.1);
    REQUIRE(traj.size() == 2);
    CHECK(traj.states[0].delta == eq.delta);
    for (const State& s : traj.states) {
        CHECK(s.delta == doctest::Approx(eq.delta).epsilon(1e-12));
        CHECK(std::abs(s.omega) <= 1e-12);
    }
}

TEST_CASE("default scenario matches the fixed-step RK4 oracle") {
    const Trajectory traj = integrate(kDefault, 0.1, {0.1, 0.1}, 20.0, 0.1);
    REQUIRE(traj.size() == 201);
    CHECK(traj.states[0].delta == 0.1);
    CHECK(traj.states[0].omega == 0.1);
    // Spot-check the oracle on a subset of the grid (full-grid agreement is
    // covered by the acceptance suite).
    for (std::size_t k : {1u, 7u, 50u, 123u, 200u}) {
        const State oracle = rk4_at(kDefault, 0.1, {0.1, 0.1}, traj.times[k], 1e-4);
        CHECK(std::abs(traj.states[k].delta - oracle.delta) <= 1e-6);
    }
    // Converges toward the equilibrium angle.
    CHECK(traj.states.back().delta == doctest::Approx(std::asin(0.5)).epsilon(1e-2));
}

TEST_CASE("undamped trajectory conserves energy") {
    SwingParams p = kDefault;
    p.d = 0.0;
    const Trajectory traj = integrate(p, 0.1, {0.1, 0.1}, 20.0, 0.1);
    const double e0 = energy(traj.states[0], p, 0.1);
    for (const State& s : traj.states) {
        CHECK(std::abs(energy(s, p, 0.1) - e0) / std::abs(e0) <= 1e-6);
    }
}

TEST_CASE("damped trajectory has non-increasing energy") {
    const Trajectory traj = integrate(kDefault, 0.1, {0.1, 0.1}, 20.0, 0.1);
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
        CHECK(energy(traj.states[k + 1], kDefault, 0.1) <=
              energy(traj.states[k], kDefault, 0.1) + 1e-9);
    }
}

TEST_CASE("halving the tolerance never worsens the deviation from the oracle") {
    std::vector<double> deviations;
    for (double rtol : {1e-5, 5e-6, 2.5e-6, 1.25e-6}) {
        const Trajectory traj = integrate(kDefault, 0.1, {0.1, 0.1}, 20.0, 0.1, rtol, rtol * 1e-2);
        double dev = 0.0;
        for (std::size_t k : {20u, 60u, 120u, 200u}) {
            const State oracle = rk4_at(kDefault, 0.1, {0.1, 0.1}, traj.times[k], 1e-4);
            dev = std::max(dev, std::abs(traj.states[k].delta - oracle.delta));
        }
        deviations.push_back(dev);
    }
    for (std::size_t i = 0; i + 1 < deviations.size(); ++i) {
        CHECK(deviations[i + 1] <= deviations[i] + 1e-15);
    }
}
