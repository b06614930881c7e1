#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cav/config.hpp"
#include "cav/trajectory.hpp"

namespace cav {

// Live record of one CAV in the crossing queue. plan_* is the state at the
// scheduling instant (equal to the entry state for a fresh arrival); tm/vm/tf
// are unset (NaN tm) until the first schedule assigns them.
struct QueueEntry {
    int id = -1;
    int lane = -1;
    double entry_time = 0.0;  // t^0
    double entry_speed = 0.0; // v^0
    double t_c = 0.0;         // earliest MZ arrival from the entry state
    double segment_length = 0.0;

    double plan_time = 0.0;
    double plan_pos = 0.0;
    double plan_speed = 0.0;

    double tm = std::numeric_limits<double>::quiet_NaN();
    double vm = 0.0;
    double tf = 0.0;
    CubicTrajectory traj;
    std::optional<double> target_vm; // ForceVmax target, capped at arrival
    std::optional<int> same_lane_pred; // id of the nearest CAV ahead on the lane

    bool has_assignment() const { return !std::isnan(tm); }
    bool committed() const { return has_assignment() && tm <= plan_time; }
};

// One slot of a computed schedule.
struct SlotAssignment {
    double tm = 0.0;
    double vm = 0.0;
    double tf = 0.0;
    CubicTrajectory traj;
    bool tc_clamped = false;   // the t_c floor (not a predecessor) fixed tm
    bool solver_fault = false; // boundary-value solve failed; traj invalid
    std::vector<LimitViolation> limit_violations;
};

struct Schedule {
    std::vector<SlotAssignment> slots; // parallel to the scheduled sequence
    // Throughput objective of Eq-style gap minimization: last minus first
    // terminal time.
    double objective() const {
        return slots.empty() ? 0.0 : slots.back().tm - slots.front().tm;
    }
};

struct SchedulingContext {
    const Geometry* geometry = nullptr;
    VehicleLimits limits;
    PolicySpec policy;
};

// Definition-1 classification straight from the conflict table.
Relation classify(int lane_i, int lane_j, const Geometry& geometry);

// The terminal-time recursion for one CAV given its queue predecessor, branch
// relation, optional same-lane predecessor (tm, vm), and the t_c lower bound.
double terminal_time(Relation pred_relation, double tm_pred, double vm_pred,
                     std::optional<std::pair<double, double>> same_lane_pred, double t_c,
                     double mz_side, double delta);

// Forward pass over a candidate sequence: assigns terminal times by the
// recursion (with the same-lane and lateral-conflict floors applied against
// every predecessor, not only the adjacent one), then solves each CAV's
// trajectory from its planning state under the policy's formulation.
//
// Entries that are committed (tm already in the past) keep their assignment;
// a head entry that already holds an assignment keeps its terminal time, so
// the first-vehicle rule only ever applies to fresh arrivals.
Schedule schedule_sequence(std::span<const QueueEntry* const> seq, const SchedulingContext& ctx);
Schedule schedule_sequence(std::span<const QueueEntry> seq, const SchedulingContext& ctx);

struct SafetyViolation {
    std::string kind; // "conflict_overlap" | "mz_spacing" | "rear_end_gap"
    int id_a = -1;
    int id_b = -1;
    double time = 0.0;
    double value = 0.0;
};

// Reporting check of the schedule: (a) MZ occupancy disjointness for Conflict
// pairs, (b) same-lane MZ-entry spacing, (c) continuous rear-end gap inside
// the CZ sampled on a fixed grid (reported, not enforced).
std::vector<SafetyViolation> verify_schedule(std::span<const QueueEntry* const> seq,
                                             const Schedule& sched, const Geometry& geometry,
                                             const VehicleLimits& limits, double grid_dt = 0.01);

// First terminal time for a CAV with no predecessors, per the formulation.
double first_vehicle_terminal_time(const QueueEntry& e, const SchedulingContext& ctx);

// MZ transit speed used for exit times and spacing terms; keeps tf finite
// when a solve degenerates (the violation itself is still reported).
double effective_mz_speed(double vm);

} // namespace cav
