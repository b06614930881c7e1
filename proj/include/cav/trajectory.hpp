#pragma once

#include <string>
#include <vector>

#include "cav/config.hpp"

namespace cav {

// Boundary data of one energy-minimization problem: state at the start of the
// (re)planning window and the target position at the MZ entry. p0 = 0 at the
// CZ entry; replanning mid-zone passes the current position.
struct InitialCondition {
    double t0 = 0.0;       // window start [s]
    double v0 = 0.0;       // speed at t0 [m/s]
    double p0 = 0.0;       // position at t0 [m]
    double target = 0.0;   // MZ entry position (= segment length L) [m]

    double distance() const { return target - p0; }
};

// With s = t - t0: u = a s + b, v = a s^2/2 + b s + c, p = a s^3/6 + b s^2/2
// + c s + d, valid on [t0, tm]. The minimum-energy plan between two boundary
// states; coefficients live in the window-local frame (c = v(t0), d = p(t0))
// so evaluation stays well conditioned at large absolute times.
struct CubicTrajectory {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    double t0 = 0.0, tm = 0.0;
    double terminal_speed = 0.0; // v(tm)

    double control(double t) const { return a * (t - t0) + b; }
    double speed(double t) const {
        double s = t - t0;
        return (0.5 * a * s + b) * s + c;
    }
    double position(double t) const {
        double s = t - t0;
        return ((a * s / 6.0 + 0.5 * b) * s + c) * s + d;
    }

    // (1/2) K integral u^2 dt over the validity window.
    double energy(double weight = 1.0) const;
};

struct TrajectoryError : std::runtime_error {
    explicit TrajectoryError(const std::string& what) : std::runtime_error(what) {}
};

// Earliest physically achievable MZ arrival t_c under full acceleration and
// the speed cap: the lower bound of any assignable terminal time.
double earliest_arrival(const InitialCondition& ic, const VehicleLimits& limits);

// True iff v_max can be reached before covering the remaining distance.
bool vmax_reachable(const InitialCondition& ic, const VehicleLimits& limits);

// Largest terminal speed achievable over the remaining distance.
double reachable_speed_cap(const InitialCondition& ic, const VehicleLimits& limits);

// Free terminal speed: p(tm) = target, u(tm) = 0.
CubicTrajectory solve_free_speed(const InitialCondition& ic, double tm);

// Fixed terminal speed: p(tm) = target, v(tm) = vm. If vm exceeds the
// reachable cap for this condition, the cap is substituted.
CubicTrajectory solve_fixed_speed(const InitialCondition& ic, double tm, double vm,
                                  const VehicleLimits& limits);

// Terminal-speed penalty (sigma/2)(v(tm) - v_max)^2: stationarity gives the
// boundary condition u(tm) = sigma (v_max - v(tm)). sigma = 0 reduces to
// solve_free_speed.
CubicTrajectory solve_penalized_speed(const InitialCondition& ic, double tm, double sigma,
                                      double v_max);

struct FreeTimeResult {
    CubicTrajectory traj;
    double tm = 0.0;
    bool clamped_to_tc = false; // rho pushed tm below t_c; clamped and reported
};

// Free terminal time with running cost u^2/2 + rho: u(tm) = 0 plus the
// transversality condition a v(tm) = -rho, found by bisection on the window
// length. Requires rho > 0.
FreeTimeResult solve_free_time(const InitialCondition& ic, double rho,
                               const VehicleLimits& limits);

struct StateSample {
    double p = 0.0, v = 0.0, u = 0.0;
};

// Evaluates (p, v, u) at t; throws if t is outside [t0, tm].
StateSample eval(const CubicTrajectory& traj, double t);

struct LimitViolation {
    std::string bound;    // "v_min" | "v_max" | "u_min" | "u_max"
    double first_time = 0.0;
    double extremal_value = 0.0;
};

// Analytic box check: u is linear and v quadratic on the window, so the
// extrema are closed-form. No sampling.
std::vector<LimitViolation> check_limits(const CubicTrajectory& traj,
                                         const VehicleLimits& limits);

// Smallest tm >= hint for which the free-speed plan stays inside the (v,u)
// box, found by bisection. Used by the relax-on-violation policy option.
double min_feasible_tm(const InitialCondition& ic, const VehicleLimits& limits, double hint);

// Composite-midpoint integral of the fuel-rate metamodel over the plan [l].
double fuel_total(const CubicTrajectory& traj, const FuelCoefficients& coeffs, double dt);

} // namespace cav
