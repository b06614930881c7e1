#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cav/trajectory.hpp"
#include "oracles.hpp"

using namespace cav;

namespace {

VehicleLimits baseline_limits() {
    VehicleLimits l;
    l.v_min = 4.0;
    l.v_max = 16.0;
    l.u_min = -5.0;
    l.u_max = 2.0;
    return l;
}

} // namespace

TEST_CASE("earliest_arrival, both branches") {
    VehicleLimits l = baseline_limits();

    // v_max reachable over 400 m from 12 m/s.
    InitialCondition a{0.0, 12.0, 0.0, 400.0};
    CHECK(vmax_reachable(a, l));
    CHECK(earliest_arrival(a, l) == doctest::Approx(25.25).epsilon(1e-12));

    // Entering at v_max: pure cruise term.
    InitialCondition b{3.0, 16.0, 0.0, 400.0};
    CHECK(earliest_arrival(b, l) == doctest::Approx(3.0 + 400.0 / 16.0));

    // Short segment, v_max unreachable.
    InitialCondition c{0.0, 4.0, 0.0, 30.0};
    CHECK(!vmax_reachable(c, l));
    CHECK(reachable_speed_cap(c, l) == doctest::Approx(std::sqrt(136.0)));
    CHECK(earliest_arrival(c, l) == doctest::Approx((std::sqrt(136.0) - 4.0) / 2.0));
}

TEST_CASE("free-speed solve: cruise identity and closed forms") {
    InitialCondition cruise{0.0, 10.0, 0.0, 400.0};
    CubicTrajectory t = solve_free_speed(cruise, 40.0);
    CHECK(std::abs(t.a) <= 1e-12);
    CHECK(std::abs(t.b) <= 1e-12);
    CHECK(t.terminal_speed == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(t.energy() <= 1e-12);

    // Acceleration case, T = 35.
    CubicTrajectory u = solve_free_speed(cruise, 35.0);
    CHECK(u.terminal_speed == doctest::Approx(3.0 * 400.0 / 70.0 - 5.0)); // 12.142857
    double T = 35.0;
    double A = 3.0 * (10.0 * T - 400.0) / (T * T * T);
    CHECK(u.a == doctest::Approx(A).epsilon(1e-9));
    CHECK(u.control(u.tm) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(A == doctest::Approx(-3.4985e-3).epsilon(1e-3));

    // Deceleration case, T = 50.
    CubicTrajectory d = solve_free_speed(cruise, 50.0);
    CHECK(d.terminal_speed == doctest::Approx(7.0));

    // Boundary exactness.
    CHECK(u.position(u.t0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(u.speed(u.t0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(u.position(u.tm) == doctest::Approx(400.0).epsilon(1e-12));
}

TEST_CASE("free-speed solve respects a shifted planning window") {
    InitialCondition ic{12.5, 9.0, 150.0, 400.0};
    CubicTrajectory t = solve_free_speed(ic, 40.0);
    CHECK(t.position(12.5) == doctest::Approx(150.0));
    CHECK(t.speed(12.5) == doctest::Approx(9.0));
    CHECK(t.position(40.0) == doctest::Approx(400.0));
    CHECK(t.control(40.0) == doctest::Approx(0.0));
}

TEST_CASE("fixed-speed solve: cruise, closed form, reachability cap") {
    VehicleLimits l = baseline_limits();

    InitialCondition cruise{0.0, 10.0, 0.0, 400.0};
    CubicTrajectory t = solve_fixed_speed(cruise, 40.0, 10.0, l);
    CHECK(std::abs(t.a) <= 1e-10);
    CHECK(std::abs(t.b) <= 1e-10);

    InitialCondition ic{0.0, 10.0, 0.0, 400.0};
    CubicTrajectory f = solve_fixed_speed(ic, 30.0, 16.0, l);
    double T = 30.0;
    double A = (6.0 / (T * T)) * (10.0 + 16.0 - 2.0 * 400.0 / T);
    CHECK(f.a == doctest::Approx(A).epsilon(1e-9));
    CHECK(A == doctest::Approx(-0.0044444).epsilon(1e-3));
    CHECK(f.speed(f.tm) == doctest::Approx(16.0));
    CHECK(f.position(f.tm) == doctest::Approx(400.0));

    // Unreachable target speed is capped.
    InitialCondition s{0.0, 4.0, 0.0, 30.0};
    CubicTrajectory capped = solve_fixed_speed(s, 4.0, 16.0, l);
    CHECK(capped.terminal_speed == doctest::Approx(std::sqrt(136.0)).epsilon(1e-9));
}

TEST_CASE("penalized solve: sigma = 0 reduction and monotonicity") {
    InitialCondition ic{0.0, 10.0, 0.0, 400.0};
    CubicTrajectory base = solve_free_speed(ic, 35.0);
    CubicTrajectory zero = solve_penalized_speed(ic, 35.0, 0.0, 16.0);
    CHECK(zero.a == doctest::Approx(base.a).epsilon(1e-12));
    CHECK(zero.b == doctest::Approx(base.b).epsilon(1e-12));
    CHECK(zero.terminal_speed == doctest::Approx(base.terminal_speed).epsilon(1e-12));

    double prev = base.terminal_speed;
    for (double sigma : {0.1, 0.5, 1.0, 5.0, 25.0, 1e3, 1e6}) {
        CubicTrajectory t = solve_penalized_speed(ic, 35.0, sigma, 16.0);
        CHECK(t.terminal_speed >= prev - 1e-12);
        CHECK(t.terminal_speed <= 16.0 + 1e-9);
        // Transversality: u(tm) = sigma (v_max - v(tm)).
        CHECK(t.control(t.tm) ==
              doctest::Approx(sigma * (16.0 - t.terminal_speed)).epsilon(1e-6));
        prev = t.terminal_speed;
    }
    CubicTrajectory hard = solve_penalized_speed(ic, 35.0, 1e6, 16.0);
    CHECK(hard.terminal_speed == doctest::Approx(16.0).epsilon(1e-3));

    CubicTrajectory mid = solve_penalized_speed(ic, 35.0, 1.0, 16.0);
    CHECK(mid.terminal_speed > base.terminal_speed);
    CHECK(mid.terminal_speed < 16.0);
}

TEST_CASE("free-time solve: limits and monotonicity in rho") {
    VehicleLimits l = baseline_limits();
    InitialCondition ic{0.0, 10.0, 0.0, 400.0};

    FreeTimeResult tiny = solve_free_time(ic, 1e-9, l);
    CHECK(tiny.tm == doctest::Approx(40.0).epsilon(1e-3)); // cruise limit
    CHECK(!tiny.clamped_to_tc);

    double prev = tiny.tm;
    for (double rho : {0.01, 0.1, 1.0, 5.0, 20.0}) {
        FreeTimeResult r = solve_free_time(ic, rho, l);
        CHECK(r.tm <= prev + 1e-9);
        CHECK(r.tm >= earliest_arrival(ic, l) - 1e-9);
        CHECK(r.traj.position(r.tm) == doctest::Approx(400.0));
        CHECK(r.traj.control(r.tm) == doctest::Approx(0.0).epsilon(1e-6));
        prev = r.tm;
    }

    FreeTimeResult hard = solve_free_time(ic, 1e9, l);
    CHECK(hard.clamped_to_tc);
    CHECK(hard.tm == doctest::Approx(earliest_arrival(ic, l)));
}

TEST_CASE("eval boundaries and window enforcement") {
    InitialCondition ic{2.0, 10.0, 0.0, 400.0};
    CubicTrajectory t = solve_free_speed(ic, 37.0);
    StateSample a = eval(t, 2.0);
    CHECK(a.p == doctest::Approx(0.0));
    CHECK(a.v == doctest::Approx(10.0));
    StateSample b = eval(t, 37.0);
    CHECK(b.p == doctest::Approx(400.0));
    CHECK(b.v == doctest::Approx(t.terminal_speed));
    CHECK_THROWS(eval(t, 1.0));
    CHECK_THROWS(eval(t, 38.0));
}

TEST_CASE("check_limits: analytic extrema") {
    VehicleLimits l = baseline_limits();

    InitialCondition cruise{0.0, 10.0, 0.0, 400.0};
    CHECK(check_limits(solve_free_speed(cruise, 40.0), l).empty());

    // Long window pushes the terminal speed to 2.5 < v_min = 4.
    CubicTrajectory slow = solve_free_speed(cruise, 80.0);
    CHECK(slow.terminal_speed == doctest::Approx(2.5));
    auto viol = check_limits(slow, l);
    REQUIRE(!viol.empty());
    bool vmin_hit = false;
    for (const auto& v : viol) {
        if (v.bound == "v_min") {
            vmin_hit = true;
            CHECK(v.extremal_value < 4.0);
            CHECK(v.first_time > slow.t0);
            CHECK(v.first_time <= slow.tm + 1e-9);
        }
    }
    CHECK(vmin_hit);

    // Aggressive fixed-speed plan exceeds u_max at the start.
    CubicTrajectory hard = solve_fixed_speed({0.0, 10.0, 0.0, 400.0}, 20.0, 16.0, l);
    bool umax_hit = false;
    for (const auto& v : check_limits(hard, l))
        if (v.bound == "u_max") umax_hit = true;
    CHECK(umax_hit);
}

TEST_CASE("earliest_arrival is a true lower bound") {
    VehicleLimits l = baseline_limits();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> v0d(4.0, 16.0), Ld(50.0, 600.0);
    for (int i = 0; i < 200; ++i) {
        InitialCondition ic{0.0, v0d(rng), 0.0, Ld(rng)};
        double tc = earliest_arrival(ic, l);
        double tm = tc - 1e-3;
        if (tm <= 0.0) continue;
        CHECK(!check_limits(solve_free_speed(ic, tm), l).empty());
        CHECK(!check_limits(solve_fixed_speed(ic, tm, l.v_max, l), l).empty());
    }
}

TEST_CASE("min_feasible_tm produces a clean plan at the smallest window") {
    VehicleLimits l = baseline_limits();
    InitialCondition ic{0.0, 10.0, 0.0, 400.0};
    double tm = min_feasible_tm(ic, l, 20.0); // hint below t_c = 26.39
    CHECK(check_limits(solve_free_speed(ic, tm), l).empty());
    CHECK(!check_limits(solve_free_speed(ic, tm - 0.05), l).empty());
}

TEST_CASE("fuel_total: constant-rate anchor and quadrature convergence") {
    FuelCoefficients fc = default_fuel_coefficients();

    // Zero-speed, zero-control dummy: rate is the constant polynomial term.
    CubicTrajectory still;
    still.t0 = 0.0;
    still.tm = 10.0;
    CHECK(fuel_total(still, fc, 0.01) == doctest::Approx(0.1569 * 10.0 * 1e-3));

    InitialCondition ic{0.0, 10.0, 0.0, 400.0};
    CubicTrajectory t = solve_free_speed(ic, 33.0);
    double coarse = fuel_total(t, fc, 0.02);
    double fine = fuel_total(t, fc, 0.01);
    CHECK(std::abs(coarse - fine) / fine < 1e-3);

    // Deceleration-only plan draws no acceleration fuel.
    CubicTrajectory d = solve_free_speed(ic, 50.0);
    FuelCoefficients cruise_only = fc;
    cruise_only.accel = {0.0, 0.0, 0.0};
    CHECK(fuel_total(d, fc, 0.01) == doctest::Approx(fuel_total(d, cruise_only, 0.01)));
}

TEST_CASE("closed form matches the discretized QP oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> v0d(4.0, 16.0), Ld(50.0, 600.0),
        stretch(1.0, 2.5);
    VehicleLimits l = baseline_limits();
    for (int i = 0; i < 50; ++i) {
        double v0 = v0d(rng), L = Ld(rng);
        InitialCondition ic{0.0, v0, 0.0, L};
        double T = earliest_arrival(ic, l) * stretch(rng);
        CubicTrajectory t = solve_free_speed(ic, T);
        oracle::QpResult qp = oracle::qp_free_speed(v0, L, T);
        CHECK(std::abs(t.energy() - qp.energy) <= 1e-3 * std::max(qp.energy, 1e-6));
        CHECK(std::abs(qp.p_end - L) < 1e-4 * std::max(1.0, L));
        CHECK(std::abs(qp.v_end - t.terminal_speed) < 1e-4 * std::max(1.0, t.terminal_speed));
    }
}
