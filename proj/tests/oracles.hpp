#pragma once

// Independent reference implementations used only by tests. Deliberately
// different algorithms from the library: discretized quadratic programs for
// the boundary-value solves and direct enumeration for the resequencer.

#include <cmath>
#include <cstddef>
#include <vector>

#include "cav/resequencer.hpp"
#include "cav/scheduler.hpp"
#include "cav/trajectory.hpp"

namespace oracle {

struct QpResult {
    double energy = 0.0;   // (1/2) h sum u_k^2
    double p_end = 0.0;
    double v_end = 0.0;
    std::vector<double> u; // piecewise-constant control
};

// Minimum-energy control over n piecewise-constant steps with the single
// terminal constraint p(T) = L. KKT gives u_k proportional to the constraint
// gradient c_k = h (T - t_k - h/2).
inline QpResult qp_free_speed(double v0, double L, double T, std::size_t n = 2000) {
    const double h = T / static_cast<double>(n);
    std::vector<double> c(n);
    double gram = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double tk = static_cast<double>(k) * h;
        c[k] = h * (T - tk - 0.5 * h);
        gram += c[k] * c[k] / h;
    }
    const double r = L - v0 * T;
    const double nu = r / gram;

    QpResult out;
    out.u.resize(n);
    double v = v0, p = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out.u[k] = nu * c[k] / h;
        out.energy += 0.5 * h * out.u[k] * out.u[k];
        p += v * h + 0.5 * out.u[k] * h * h;
        v += out.u[k] * h;
    }
    out.p_end = p;
    out.v_end = v;
    return out;
}

// Same program with the additional terminal constraint v(T) = vm; two
// multipliers solved from the 2x2 Gram system.
inline QpResult qp_fixed_speed(double v0, double L, double T, double vm, std::size_t n = 2000) {
    const double h = T / static_cast<double>(n);
    std::vector<double> c(n);
    double g11 = 0.0, g12 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        double tk = static_cast<double>(k) * h;
        c[k] = h * (T - tk - 0.5 * h);
        g11 += c[k] * c[k] / h;
        g12 += c[k];
    }
    const double g22 = T;
    const double r1 = L - v0 * T;
    const double r2 = vm - v0;
    const double det = g11 * g22 - g12 * g12;
    const double nu1 = (r1 * g22 - r2 * g12) / det;
    const double nu2 = (g11 * r2 - g12 * r1) / det;

    QpResult out;
    out.u.resize(n);
    double v = v0, p = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        out.u[k] = nu1 * c[k] / h + nu2;
        out.energy += 0.5 * h * out.u[k] * out.u[k];
        p += v * h + 0.5 * out.u[k] * h * h;
        v += out.u[k] * h;
    }
    out.p_end = p;
    out.v_end = v;
    return out;
}

// Direct enumeration of every insertion position of the newcomer in
// (same-lane predecessor, tail], filtered by the scheduler's feasibility test:
// the currently assigned terminal time of the CAV occupying the target slot
// must not precede the newcomer's earliest arrival. Tail insertion (identity)
// is unconditionally feasible.
inline std::vector<std::vector<const cav::QueueEntry*>>
enumerate_insertions(std::span<const cav::QueueEntry* const> queue,
                     const cav::QueueEntry& newcomer) {
    const std::size_t n = queue.size();
    std::size_t k_pos = 0; // first insertable slot
    for (std::size_t j = n; j-- > 0;) {
        if (queue[j]->lane == newcomer.lane) {
            k_pos = j + 1;
            break;
        }
    }
    std::vector<std::vector<const cav::QueueEntry*>> out;
    for (std::size_t pos = n + 1; pos-- > k_pos;) {
        if (pos < n && queue[pos]->has_assignment() && queue[pos]->tm < newcomer.t_c) continue;
        std::vector<const cav::QueueEntry*> order;
        order.reserve(n + 1);
        for (std::size_t j = 0; j < pos; ++j) order.push_back(queue[j]);
        order.push_back(&newcomer);
        for (std::size_t j = pos; j < n; ++j) order.push_back(queue[j]);
        out.push_back(std::move(order)); // tail-first, so identity comes first
    }
    return out;
}

} // namespace oracle
