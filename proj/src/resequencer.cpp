#include "cav/resequencer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cav {

FeasibleSet feasible_sequences(std::span<const QueueEntry* const> queue,
                               const QueueEntry& newcomer, const SchedulingContext& ctx) {
    const int n = static_cast<int>(queue.size());

    // Lowest admissible slot: just behind the same-lane predecessor (no
    // overtaking on a lane), or the head of the queue if there is none.
    int k_pos = -1;
    for (int j = n - 1; j >= 0; --j) {
        if (classify(newcomer.lane, queue[j]->lane, *ctx.geometry) == Relation::SameLane) {
            k_pos = j;
            break;
        }
    }

    FeasibleSet set;
    std::vector<const QueueEntry*> order(queue.begin(), queue.end());
    order.push_back(&newcomer);

    for (int pos = n; pos > k_pos; --pos) {
        set.swap_count += 1;
        if (pos < n) {
            // Slot `pos` currently belongs to queue[pos]; the newcomer can
            // only claim it if it could physically arrive by then.
            if (queue[pos]->has_assignment() && queue[pos]->tm < newcomer.t_c) break;
            std::swap(order[pos], order[pos + 1]);
        }
        SequenceCandidate cand;
        cand.order = order;
        cand.schedule = schedule_sequence(std::span<const QueueEntry* const>(order), ctx);
        cand.objective = cand.schedule.objective();
        cand.newcomer_position = pos;
        cand.swap_count = set.swap_count;
        set.candidates.push_back(std::move(cand));
    }
    return set;
}

const SequenceCandidate& best_sequence(const FeasibleSet& set) {
    if (set.candidates.empty()) throw std::logic_error("empty feasible sequence set");
    // Candidates are ordered from identity downward, so a strict comparison
    // keeps the least-displacing candidate on ties.
    const SequenceCandidate* best = &set.candidates.front();
    for (const SequenceCandidate& c : set.candidates)
        if (c.objective < best->objective) best = &c;
    return *best;
}

double worst_case_swaps(const Geometry& geometry, double vehicle_length, double delta) {
    double total = 0.0;
    for (double L : geometry.segment_lengths) total += L;
    double worst = 0.0;
    for (double L : geometry.segment_lengths)
        worst = std::max(worst, (total - L) / (vehicle_length + delta));
    return worst + 1.0;
}

ExpectedSwaps expected_swaps(std::span<const double> rates) {
    ExpectedSwaps out;
    double sum = 0.0;
    for (double r : rates) {
        if (!(r > 0.0)) throw std::invalid_argument("arrival rates must be positive");
        sum += r;
    }
    out.per_segment.reserve(rates.size());
    for (double r : rates) out.per_segment.push_back((sum - r) / r + 1.0);
    // Rate-weighted mean: each term lambda_p * E[N^p] simplifies to sum(lambda),
    // so the mean is exactly the lane count.
    out.mean = static_cast<double>(rates.size());
    return out;
}

} // namespace cav
