#include "cav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cav {

namespace {

constexpr double kBoundTol = 1e-9;

// The solves work in the window-local frame tau = t - t0; the coefficients
// are stored in that frame directly.
CubicTrajectory from_local(const InitialCondition& ic, double T, double A, double B) {
    CubicTrajectory traj;
    traj.t0 = ic.t0;
    traj.tm = ic.t0 + T;
    traj.a = A;
    traj.b = B;
    traj.c = ic.v0;
    traj.d = ic.p0;
    traj.terminal_speed = (0.5 * A * T + B) * T + ic.v0;
    return traj;
}

void require_window(const InitialCondition& ic, double tm) {
    if (!(tm > ic.t0))
        throw TrajectoryError("terminal time must lie strictly after the window start");
    if (!(ic.distance() > 0.0))
        throw TrajectoryError("target position must lie ahead of the current position");
}

} // namespace

double CubicTrajectory::energy(double weight) const {
    double T = tm - t0;
    return 0.5 * weight * ((a * a * T * T / 3.0 + a * b * T + b * b) * T);
}

bool vmax_reachable(const InitialCondition& ic, const VehicleLimits& limits) {
    return std::sqrt(2.0 * ic.distance() * limits.u_max + ic.v0 * ic.v0) >= limits.v_max;
}

double reachable_speed_cap(const InitialCondition& ic, const VehicleLimits& limits) {
    return std::sqrt(ic.v0 * ic.v0 + 2.0 * limits.u_max * ic.distance());
}

double earliest_arrival(const InitialCondition& ic, const VehicleLimits& limits) {
    const double L = ic.distance();
    if (vmax_reachable(ic, limits)) {
        double dv = limits.v_max - ic.v0;
        return ic.t0 + L / limits.v_max + dv * dv / (2.0 * limits.u_max * limits.v_max);
    }
    return ic.t0 + (reachable_speed_cap(ic, limits) - ic.v0) / limits.u_max;
}

CubicTrajectory solve_free_speed(const InitialCondition& ic, double tm) {
    require_window(ic, tm);
    const double T = tm - ic.t0;
    const double A = 3.0 * (ic.v0 * T - ic.distance()) / (T * T * T);
    return from_local(ic, T, A, -A * T); // u(tm) = 0
}

CubicTrajectory solve_fixed_speed(const InitialCondition& ic, double tm, double vm,
                                  const VehicleLimits& limits) {
    require_window(ic, tm);
    vm = std::min(vm, reachable_speed_cap(ic, limits));
    const double T = tm - ic.t0;
    const double L = ic.distance();
    const double A = 6.0 / (T * T) * (ic.v0 + vm - 2.0 * L / T);
    const double B = (vm - ic.v0) / T - 0.5 * A * T;
    CubicTrajectory traj = from_local(ic, T, A, B);
    // Reject plans that would need the vehicle to back up.
    double vmin_on_window = traj.speed(traj.t0);
    vmin_on_window = std::min(vmin_on_window, traj.speed(traj.tm));
    if (traj.a != 0.0) {
        double tv = traj.t0 - traj.b / traj.a; // vertex of the speed parabola
        if (tv > traj.t0 && tv < traj.tm) vmin_on_window = std::min(vmin_on_window, traj.speed(tv));
    }
    if (vmin_on_window < 0.0)
        throw TrajectoryError("fixed-speed plan requires negative speed (non-monotone position)");
    return traj;
}

CubicTrajectory solve_penalized_speed(const InitialCondition& ic, double tm, double sigma,
                                      double v_max) {
    require_window(ic, tm);
    if (sigma < 0.0) throw TrajectoryError("sigma must be nonnegative");
    const double T = tm - ic.t0;
    const double L = ic.distance();
    // p(T) = L:                 A T^3/6 + B T^2/2 = L - v0 T
    // u(T) = sigma(vmax - v(T)): A (T + sigma T^2/2) + B (1 + sigma T)
    //                            = sigma (vmax - v0)
    const double m11 = T * T * T / 6.0, m12 = 0.5 * T * T;
    const double m21 = T + 0.5 * sigma * T * T, m22 = 1.0 + sigma * T;
    const double r1 = L - ic.v0 * T;
    const double r2 = sigma * (v_max - ic.v0);
    const double det = m11 * m22 - m12 * m21;
    const double A = (r1 * m22 - m12 * r2) / det;
    const double B = (m11 * r2 - r1 * m21) / det;
    return from_local(ic, T, A, B);
}

FreeTimeResult solve_free_time(const InitialCondition& ic, double rho,
                               const VehicleLimits& limits) {
    if (!(rho > 0.0)) throw TrajectoryError("rho must be positive");
    if (!(ic.v0 > 0.0)) throw TrajectoryError("free-time solve requires positive entry speed");
    const double L = ic.distance();
    // Stationarity in the terminal time: a v(tm) = -rho with u(tm) = 0.
    // g(T) -> -inf as T -> 0+ and g(L/v0) = rho > 0, so the root is bracketed.
    auto g = [&](double T) {
        double A = 3.0 * (ic.v0 * T - L) / (T * T * T);
        double vT = 1.5 * L / T - 0.5 * ic.v0;
        return A * vT + rho;
    };
    double hi = L / ic.v0;
    double lo = hi * 1e-6;
    while (g(lo) >= 0.0 && lo > 1e-300) lo *= 0.5;
    double T = hi;
    for (int iter = 0; iter < 200; ++iter) {
        T = 0.5 * (lo + hi);
        double val = g(T);
        if (std::abs(val) < 1e-9) break;
        (val < 0.0 ? lo : hi) = T;
    }
    FreeTimeResult res;
    res.tm = ic.t0 + T;
    const double tc = earliest_arrival(ic, limits);
    if (res.tm < tc) {
        res.tm = tc;
        res.clamped_to_tc = true;
    }
    res.traj = solve_free_speed(ic, res.tm);
    return res;
}

StateSample eval(const CubicTrajectory& traj, double t) {
    if (t < traj.t0 - kBoundTol || t > traj.tm + kBoundTol)
        throw TrajectoryError("eval time outside the trajectory window");
    return {traj.position(t), traj.speed(t), traj.control(t)};
}

namespace {

// First time in [t0, tm] at which the quadratic speed profile crosses `bound`.
double first_speed_crossing(const CubicTrajectory& tr, double bound) {
    const double T = tr.tm - tr.t0;
    if (tr.speed(tr.t0) > bound) return tr.t0;
    // Solve a/2 s^2 + b s + (c - bound) = 0 in window-local time.
    double a2 = 0.5 * tr.a, b = tr.b, c = tr.c - bound;
    if (std::abs(a2) < 1e-300) {
        if (std::abs(b) < 1e-300) return tr.t0;
        return tr.t0 + std::clamp(-c / b, 0.0, T);
    }
    double disc = b * b - 4.0 * a2 * c;
    if (disc < 0.0) return tr.t0;
    double sq = std::sqrt(disc);
    double r1 = (-b - sq) / (2.0 * a2), r2 = (-b + sq) / (2.0 * a2);
    if (r1 > r2) std::swap(r1, r2);
    for (double r : {r1, r2})
        if (r >= -kBoundTol && r <= T + kBoundTol) return tr.t0 + std::clamp(r, 0.0, T);
    return tr.t0;
}

} // namespace

std::vector<LimitViolation> check_limits(const CubicTrajectory& tr, const VehicleLimits& lim) {
    std::vector<LimitViolation> out;

    // Control is linear: extrema at the window ends.
    double u0 = tr.control(tr.t0), um = tr.control(tr.tm);
    double u_hi = std::max(u0, um), u_lo = std::min(u0, um);
    if (u_hi > lim.u_max + kBoundTol) {
        double t = (u0 >= um) ? tr.t0 : tr.t0 + (lim.u_max - tr.b) / tr.a;
        if (u0 > lim.u_max) t = tr.t0;
        out.push_back({"u_max", std::clamp(t, tr.t0, tr.tm), u_hi});
    }
    if (u_lo < lim.u_min - kBoundTol) {
        double t = (u0 <= um) ? tr.t0 : tr.t0 + (lim.u_min - tr.b) / tr.a;
        if (u0 < lim.u_min) t = tr.t0;
        out.push_back({"u_min", std::clamp(t, tr.t0, tr.tm), u_lo});
    }

    // Speed is quadratic: extrema at the ends or at the vertex -b/a (u = 0).
    double v0 = tr.speed(tr.t0), vm = tr.speed(tr.tm);
    double v_hi = std::max(v0, vm), v_lo = std::min(v0, vm);
    if (tr.a != 0.0) {
        double tv = tr.t0 - tr.b / tr.a;
        if (tv > tr.t0 && tv < tr.tm) {
            double vv = tr.speed(tv);
            v_hi = std::max(v_hi, vv);
            v_lo = std::min(v_lo, vv);
        }
    }
    if (v_hi > lim.v_max + kBoundTol)
        out.push_back({"v_max", first_speed_crossing(tr, lim.v_max), v_hi});
    if (v_lo < lim.v_min - kBoundTol) {
        // Crossing of v = v_min from above: reuse the quadratic root finder on
        // the reflected profile.
        CubicTrajectory neg = tr;
        neg.a = -tr.a;
        neg.b = -tr.b;
        neg.c = -tr.c;
        out.push_back({"v_min", first_speed_crossing(neg, -lim.v_min), v_lo});
    }
    return out;
}

double min_feasible_tm(const InitialCondition& ic, const VehicleLimits& limits, double hint) {
    auto feasible = [&](double tm) {
        return check_limits(solve_free_speed(ic, tm), limits).empty();
    };
    if (feasible(hint)) return hint;
    // Scan forward for a feasible window end, then bisect back.
    double lo = hint;
    double hi = hint;
    double step = std::max(0.25, 0.01 * (hint - ic.t0));
    bool found = false;
    for (int i = 0; i < 400; ++i) {
        hi += step;
        step *= 1.2;
        if (feasible(hi)) {
            found = true;
            break;
        }
        lo = hi;
    }
    if (!found) return hint; // no free-speed plan fits the box; report as-is
    for (int i = 0; i < 100; ++i) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

double fuel_total(const CubicTrajectory& traj, const FuelCoefficients& coeffs, double dt) {
    if (!(dt > 0.0)) throw TrajectoryError("quadrature step must be positive");
    const double T = traj.tm - traj.t0;
    if (T <= 0.0) return 0.0;
    const int n = std::max(1, static_cast<int>(std::ceil(T / dt)));
    const double h = T / n;
    double ml = 0.0;
    for (int k = 0; k < n; ++k) {
        double t = traj.t0 + (k + 0.5) * h;
        ml += coeffs.rate_mlps(traj.speed(t), traj.control(t)) * h;
    }
    return ml * 1e-3; // liters
}

} // namespace cav
