#include "cav/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace cav {

namespace {
constexpr double kTol = 1e-9;
}

Relation classify(int lane_i, int lane_j, const Geometry& geometry) {
    return geometry.relation(lane_i, lane_j);
}

double effective_mz_speed(double vm) { return std::max(vm, 0.5); }

double terminal_time(Relation pred_relation, double tm_pred, double vm_pred,
                     std::optional<std::pair<double, double>> same_lane_pred, double t_c,
                     double mz_side, double delta) {
    double tm = t_c;
    switch (pred_relation) {
        case Relation::SameRoadSameDir:
        case Relation::Opposite:
            tm = std::max(tm, tm_pred);
            if (same_lane_pred)
                tm = std::max(tm, same_lane_pred->first +
                                      delta / effective_mz_speed(same_lane_pred->second));
            break;
        case Relation::SameLane:
            tm = std::max(tm, tm_pred + delta / effective_mz_speed(vm_pred));
            break;
        case Relation::Conflict:
            tm = std::max(tm, tm_pred + mz_side / effective_mz_speed(vm_pred));
            break;
    }
    return tm;
}

double first_vehicle_terminal_time(const QueueEntry& e, const SchedulingContext& ctx) {
    switch (ctx.policy.formulation) {
        case Formulation::RhoPenalty1: {
            InitialCondition ic{e.entry_time, e.entry_speed, 0.0, e.segment_length};
            return solve_free_time(ic, ctx.policy.rho, ctx.limits).tm;
        }
        case Formulation::ForceTc1:
            return e.t_c;
        case Formulation::Cruise1:
        case Formulation::SigmaPenalty:
        case Formulation::ForceVmax:
            return e.entry_time + e.segment_length / e.entry_speed;
    }
    return e.t_c;
}

namespace {

bool uses_free_speed(Formulation f) {
    return f == Formulation::Cruise1 || f == Formulation::RhoPenalty1 ||
           f == Formulation::ForceTc1;
}

CubicTrajectory solve_variant(const QueueEntry& e, double tm, const SchedulingContext& ctx) {
    InitialCondition ic{e.plan_time, e.plan_speed, e.plan_pos, e.segment_length};
    CubicTrajectory traj;
    switch (ctx.policy.formulation) {
        case Formulation::SigmaPenalty:
            traj = solve_penalized_speed(ic, tm, ctx.policy.sigma, ctx.limits.v_max);
            break;
        case Formulation::ForceVmax:
            return solve_fixed_speed(ic, tm, e.target_vm.value_or(ctx.limits.v_max), ctx.limits);
        default:
            traj = solve_free_speed(ic, tm);
            break;
    }
    // When the unconstrained terminal speed leaves the admissible band the
    // constrained optimum pins it at the bound; re-solve with vm fixed there.
    // If even the pinned problem is infeasible (window too long for v_min)
    // keep the unconstrained plan and let check_limits report it.
    try {
        if (traj.terminal_speed < ctx.limits.v_min)
            return solve_fixed_speed(ic, tm, ctx.limits.v_min, ctx.limits);
        if (traj.terminal_speed > ctx.limits.v_max)
            return solve_fixed_speed(ic, tm, ctx.limits.v_max, ctx.limits);
    } catch (const TrajectoryError&) {
    }
    return traj;
}

} // namespace

Schedule schedule_sequence(std::span<const QueueEntry* const> seq, const SchedulingContext& ctx) {
    const Geometry& geo = *ctx.geometry;
    const double S = geo.mz_side;
    const double delta = ctx.limits.delta;

    Schedule out;
    out.slots.reserve(seq.size());

    for (std::size_t m = 0; m < seq.size(); ++m) {
        const QueueEntry& e = *seq[m];
        SlotAssignment slot;

        if (e.committed()) {
            // Already at (or inside) the MZ: nothing left to schedule.
            slot.tm = e.tm;
            slot.vm = e.vm;
            slot.tf = e.tf;
            slot.traj = e.traj;
            out.slots.push_back(slot);
            continue;
        }

        bool keep_assigned = (m == 0 && e.has_assignment());
        if (keep_assigned) {
            slot.tm = e.tm;
        } else if (m == 0) {
            slot.tm = first_vehicle_terminal_time(e, ctx);
            slot.tc_clamped = slot.tm <= e.t_c + kTol;
        } else {
            InitialCondition now_ic{e.plan_time, e.plan_speed, e.plan_pos, e.segment_length};
            double floor_tc = std::max(e.t_c, earliest_arrival(now_ic, ctx.limits));
            double pred_bound = -std::numeric_limits<double>::infinity();

            const SlotAssignment& prev = out.slots[m - 1];
            switch (classify(e.lane, seq[m - 1]->lane, geo)) {
                case Relation::SameLane:
                    pred_bound = std::max(pred_bound, prev.tm + delta / effective_mz_speed(prev.vm));
                    break;
                case Relation::Conflict:
                    pred_bound = std::max(pred_bound, prev.tm + S / effective_mz_speed(prev.vm));
                    break;
                default:
                    pred_bound = std::max(pred_bound, prev.tm);
                    break;
            }
            // Floors against every earlier CAV, not only the adjacent one:
            // the nearest same-lane predecessor and all lateral conflicts.
            bool found_same_lane = false;
            for (std::size_t j = m; j-- > 0;) {
                const SlotAssignment& sj = out.slots[j];
                Relation rel = classify(e.lane, seq[j]->lane, geo);
                if (rel == Relation::Conflict)
                    pred_bound = std::max(pred_bound, sj.tm + S / effective_mz_speed(sj.vm));
                else if (rel == Relation::SameLane && !found_same_lane) {
                    pred_bound = std::max(pred_bound, sj.tm + delta / effective_mz_speed(sj.vm));
                    found_same_lane = true;
                }
            }
            slot.tm = std::max(floor_tc, pred_bound);
            slot.tc_clamped = pred_bound < floor_tc;
        }

        const double remaining = e.segment_length - e.plan_pos;
        // Sub-millisecond windows (the CAV is a centimeter from the MZ) are
        // numerically hopeless and physically settled; keep the running plan.
        if (slot.tm > e.plan_time + 1e-3 && remaining > kTol) {
            try {
                slot.traj = solve_variant(e, slot.tm, ctx);
                slot.limit_violations = check_limits(slot.traj, ctx.limits);
                if (!slot.limit_violations.empty() && ctx.policy.relax_on_violation &&
                    uses_free_speed(ctx.policy.formulation) && !keep_assigned) {
                    InitialCondition ic{e.plan_time, e.plan_speed, e.plan_pos, e.segment_length};
                    double relaxed = min_feasible_tm(ic, ctx.limits, slot.tm);
                    if (relaxed > slot.tm) {
                        slot.tm = relaxed;
                        slot.traj = solve_variant(e, slot.tm, ctx);
                        slot.limit_violations = check_limits(slot.traj, ctx.limits);
                    }
                }
                slot.vm = slot.traj.terminal_speed;
            } catch (const TrajectoryError&) {
                slot.solver_fault = true;
                slot.traj = e.traj;
                slot.vm = e.has_assignment() ? e.vm : e.plan_speed;
            }
        } else {
            // Degenerate window (vehicle effectively at the MZ entry).
            slot.traj = e.traj;
            slot.vm = e.has_assignment() ? e.vm : e.plan_speed;
        }
        // MZ transit happens at a speed inside the admissible band even when
        // the CZ plan could not end there; the violation stays reported.
        slot.vm = std::clamp(slot.vm, ctx.limits.v_min, ctx.limits.v_max);
        slot.tf = slot.tm + S / effective_mz_speed(slot.vm);
        out.slots.push_back(slot);
    }
    return out;
}

Schedule schedule_sequence(std::span<const QueueEntry> seq, const SchedulingContext& ctx) {
    std::vector<const QueueEntry*> ptrs;
    ptrs.reserve(seq.size());
    for (const QueueEntry& e : seq) ptrs.push_back(&e);
    return schedule_sequence(std::span<const QueueEntry* const>(ptrs), ctx);
}

std::vector<SafetyViolation> verify_schedule(std::span<const QueueEntry* const> seq,
                                             const Schedule& sched, const Geometry& geometry,
                                             const VehicleLimits& limits, double grid_dt) {
    std::vector<SafetyViolation> out;
    const std::size_t n = seq.size();

    // (a) MZ occupancy disjointness for Conflict pairs.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (classify(seq[i]->lane, seq[j]->lane, geometry) != Relation::Conflict) continue;
            const SlotAssignment &si = sched.slots[i], &sj = sched.slots[j];
            double overlap = std::min(si.tf, sj.tf) - std::max(si.tm, sj.tm);
            if (overlap > kTol)
                out.push_back({"conflict_overlap", seq[i]->id, seq[j]->id,
                               std::max(si.tm, sj.tm), overlap});
        }
    }

    // (b) same-lane MZ-entry spacing and (c) rear-end gap inside the CZ.
    for (std::size_t m = 0; m < n; ++m) {
        std::size_t k = n; // nearest same-lane predecessor position
        for (std::size_t j = m; j-- > 0;) {
            if (classify(seq[m]->lane, seq[j]->lane, geometry) == Relation::SameLane) {
                k = j;
                break;
            }
        }
        if (k == n) continue;
        const SlotAssignment &sm = sched.slots[m], &sk = sched.slots[k];
        double required = sk.tm + limits.delta / effective_mz_speed(sk.vm);
        if (sm.tm < required - kTol)
            out.push_back({"mz_spacing", seq[m]->id, seq[k]->id, sm.tm, required - sm.tm});

        if (sm.solver_fault || sk.solver_fault) continue;
        const CubicTrajectory &tm_ = sm.traj, &tk = sk.traj;
        if (tm_.tm <= tm_.t0 || tk.tm <= tk.t0) continue;
        double start = std::max(tm_.t0, tk.t0);
        for (double t = start; t <= tm_.tm + kTol; t += grid_dt) {
            double tt = std::min(t, tm_.tm);
            double p_follow = tm_.position(tt);
            double p_lead = (tt <= tk.tm)
                                ? tk.position(tt)
                                : seq[k]->segment_length + sk.vm * (tt - tk.tm);
            double gap = p_lead - p_follow;
            if (gap < limits.delta - kTol) {
                out.push_back({"rear_end_gap", seq[m]->id, seq[k]->id, tt, gap});
                break; // one report per pair
            }
        }
    }
    return out;
}

} // namespace cav
