#pragma once

#include <span>
#include <vector>

#include "cav/scheduler.hpp"

namespace cav {

// One candidate insertion of the newcomer; the relative order of everyone
// else is preserved and the newcomer never passes its same-lane predecessor.
struct SequenceCandidate {
    std::vector<const QueueEntry*> order;
    Schedule schedule;
    double objective = 0.0;   // t_last^m - t_first^m
    int newcomer_position = 0; // 0-based slot of the newcomer
    int swap_count = 0;        // evaluations spent up to this candidate
};

struct FeasibleSet {
    std::vector<SequenceCandidate> candidates; // identity first
    int swap_count = 0;                        // evaluations for this arrival
};

// Enumerates feasible insertion positions for the newcomer, walking backward
// from the tail. A slot ahead of an existing CAV is feasible only if that
// CAV's currently assigned terminal time is no earlier than the newcomer's
// lower bound t_c; assigned terminal times are nondecreasing along the queue,
// so the walk stops at the first infeasible slot (or at the same-lane
// predecessor). The identity sequence is always included.
FeasibleSet feasible_sequences(std::span<const QueueEntry* const> queue,
                               const QueueEntry& newcomer, const SchedulingContext& ctx);

// Argmin of the gap objective; ties resolve toward the candidate closest to
// the identity order (fewest displaced CAVs). Deterministic.
const SequenceCandidate& best_sequence(const FeasibleSet& set);

// Worst-case number of candidate evaluations for one arrival:
// max_p (sum_{r != p} L_r) / (l_v + delta) + 1.
double worst_case_swaps(const Geometry& geometry, double vehicle_length, double delta);

struct ExpectedSwaps {
    double mean = 0.0;                    // rate-weighted mean, equals the lane count
    std::vector<double> per_segment;      // E[N^p] = (sum_{r != p} lambda_r)/lambda_p + 1
};

ExpectedSwaps expected_swaps(std::span<const double> rates);

struct ComplexityStats {
    std::vector<int> per_arrival;
    double bound = 0.0;    // worst_case_swaps
    double analytic = 0.0; // expected_swaps mean

    double mean() const {
        if (per_arrival.empty()) return 0.0;
        double s = 0.0;
        for (int c : per_arrival) s += c;
        return s / static_cast<double>(per_arrival.size());
    }
};

} // namespace cav
