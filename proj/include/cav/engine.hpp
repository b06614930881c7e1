#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cav/config.hpp"
#include "cav/resequencer.hpp"
#include "cav/scheduler.hpp"

namespace cav {

enum class EventKind { Arrival, MZEntry, MZExit };

struct SimEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int id = -1;
    int lane = -1;
};

struct ResequenceEvent {
    double time = 0.0;
    int old_order = 0;
    int new_order = 0;
};

struct VehicleRecord {
    int id = -1;
    int lane = -1;
    double t0 = 0.0;
    double v0 = 0.0;
    double tm = 0.0;
    double vm = 0.0;
    double tf = 0.0;
    double fuel = 0.0;        // liters, CZ portion
    double travel_time = 0.0; // tm - t0
    double deferral = 0.0;    // entry delay applied to restore the entry gap
    int limit_violations = 0; // (v,u) box exits on the final executed plan
    bool fault = false;       // a replanning solve failed at least once
    std::vector<ResequenceEvent> resequence_events;
    // Executed plan segments; segment s is in force on [history[s].t0,
    // history[s+1].t0) and the last one up to tm.
    std::vector<CubicTrajectory> history;

    double position_at(double t) const; // valid on [t0, tf]
    double speed_at(double t) const;
    double control_at(double t) const;
};

struct Metrics {
    double mean_travel_time = 0.0; // mean (tm - t0)
    double median_travel_time = 0.0;
    double p95_travel_time = 0.0;
    double mean_transit_time = 0.0; // mean (tf - t0), MZ included
    double total_fuel = 0.0;
    double mean_fuel = 0.0;
    double makespan = 0.0; // t_N^m
    double mean_swap_count = 0.0;
    double max_replan_discontinuity = 0.0; // (p,v) jump at resequencing instants
    int conflict_overlaps = 0;
    int mz_spacing_violations = 0;
    int rear_end_gap_reports = 0;
    int limit_violations = 0;
    int solver_faults = 0;
    int deferrals = 0;
};

struct SimResult {
    Scenario scenario;
    PolicySpec policy;
    std::vector<SimEvent> events;
    std::vector<VehicleRecord> vehicles;
    ComplexityStats complexity;
    Metrics metrics;
    double end_time = 0.0;
};

// Runs the discrete-event simulation: seeded Poisson arrivals per segment,
// scheduling (and optional resequencing) on every arrival, replanning from
// the current state for every CAV whose terminal time moved, retirement at
// the MZ exit. Deterministic given the scenario seed.
SimResult run(const Scenario& scenario, const PolicySpec& policy);

inline SimResult run(const Scenario& scenario) { return run(scenario, scenario.policy); }

struct SnapshotRow {
    int id = -1;
    int lane = -1;
    double p = 0.0;
    double v = 0.0;
    double u = 0.0;
    int order = 0;
};

// Active CAVs (entered, not yet past the MZ) at time t, evaluated from the
// executed plans.
std::vector<SnapshotRow> snapshot(const SimResult& result, double t);

// The ten case-study formulations: 1-3 without resequencing, 4-10 with.
PolicySpec policy_for_case(int case_number);

struct ComparisonRow {
    std::string label;
    PolicySpec policy;
    Metrics metrics;
};

// Runs every policy on the identical arrival stream (same seed).
std::vector<ComparisonRow> compare(const Scenario& scenario,
                                   const std::vector<PolicySpec>& policies);

} // namespace cav
