#include "cav/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <stdexcept>

namespace cav {

namespace {

constexpr double kTol = 1e-9;

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Per-lane arrival stream: exponential interarrivals, uniform entry speeds,
// plus a tie-break draw for simultaneous arrivals.
struct LaneStream {
    std::mt19937_64 rng;
    double t = 0.0;

    struct Draw {
        double time;
        double speed;
        double tiebreak;
    };

    Draw next(double rate, double lo, double hi) {
        t += -std::log(1.0 - uniform01(rng)) / rate;
        return {t, lo + uniform01(rng) * (hi - lo), uniform01(rng)};
    }
};

struct PendingEvent {
    double time;
    int rank; // MZExit < MZEntry < Arrival at equal times
    double tiebreak;
    long seq;
    EventKind kind;
    int id;
    int version;

    bool operator>(const PendingEvent& o) const {
        if (time != o.time) return time > o.time;
        if (rank != o.rank) return rank > o.rank;
        if (tiebreak != o.tiebreak) return tiebreak > o.tiebreak;
        return seq > o.seq;
    }
};

struct Live {
    QueueEntry q;
    VehicleRecord rec;
    int version = 0;
    bool exited = false;
};

double segment_position(const CubicTrajectory& tr, double vm, double L, double t) {
    if (t <= tr.tm) return tr.position(t);
    return L + vm * (t - tr.tm);
}

} // namespace

double VehicleRecord::position_at(double t) const {
    if (history.empty()) return 0.0;
    std::size_t s = 0;
    while (s + 1 < history.size() && history[s + 1].t0 <= t) ++s;
    const CubicTrajectory& tr = history[s];
    if (t >= tm) {
        double L = tr.position(tr.tm);
        return L + vm * (t - tm);
    }
    return tr.position(std::clamp(t, tr.t0, tr.tm));
}

double VehicleRecord::speed_at(double t) const {
    if (history.empty()) return v0;
    std::size_t s = 0;
    while (s + 1 < history.size() && history[s + 1].t0 <= t) ++s;
    if (t >= tm) return vm;
    return history[s].speed(std::clamp(t, history[s].t0, history[s].tm));
}

double VehicleRecord::control_at(double t) const {
    if (history.empty() || t >= tm) return 0.0;
    std::size_t s = 0;
    while (s + 1 < history.size() && history[s + 1].t0 <= t) ++s;
    return history[s].control(std::clamp(t, history[s].t0, history[s].tm));
}

PolicySpec policy_for_case(int case_number) {
    PolicySpec p;
    p.resequencing = case_number >= 4;
    switch (case_number) {
        case 1:
        case 4: p.formulation = Formulation::Cruise1; break;
        case 2:
        case 5:
            p.formulation = Formulation::RhoPenalty1;
            p.rho = 5.0;
            break;
        case 3:
        case 6: p.formulation = Formulation::ForceTc1; break;
        case 7:
            p.formulation = Formulation::SigmaPenalty;
            p.sigma = 0.1;
            break;
        case 8:
            p.formulation = Formulation::SigmaPenalty;
            p.sigma = 1.0;
            break;
        case 9:
            p.formulation = Formulation::SigmaPenalty;
            p.sigma = 10.0;
            break;
        case 10: p.formulation = Formulation::ForceVmax; break;
        default: throw std::invalid_argument("case number must be in [1, 10]");
    }
    return p;
}

namespace {

class Simulation {
  public:
    Simulation(const Scenario& scenario, const PolicySpec& policy)
        : scn_(scenario), ctx_{&scenario.geometry, scenario.limits, policy} {
        result_.scenario = scenario;
        result_.policy = policy;
    }

    SimResult run() {
        draw_arrivals();
        while (!events_.empty()) {
            PendingEvent ev = events_.top();
            events_.pop();
            switch (ev.kind) {
                case EventKind::Arrival: on_arrival(ev); break;
                case EventKind::MZEntry:
                    if (valid(ev)) log(ev.time, EventKind::MZEntry, ev.id);
                    break;
                case EventKind::MZExit:
                    if (valid(ev)) on_exit(ev);
                    break;
            }
        }
        finalize();
        return std::move(result_);
    }

  private:
    struct ArrivalPayload {
        int lane;
        double raw_time;
        double speed;
        double tiebreak;
    };

    void draw_arrivals() {
        const ArrivalModel& a = scn_.arrivals;
        const int lanes = scn_.geometry.num_segments();
        std::vector<LaneStream> streams(lanes);
        std::vector<LaneStream::Draw> next(lanes);
        for (int l = 0; l < lanes; ++l) {
            streams[l].rng.seed(a.seed * 0x9e3779b97f4a7c15ULL + 0x100000001b3ULL * (l + 1));
            next[l] = streams[l].next(a.rates[l], a.speed_lo, a.speed_hi);
        }
        int admitted = 0;
        while (true) {
            int l = 0;
            for (int j = 1; j < lanes; ++j) {
                if (next[j].time < next[l].time ||
                    (next[j].time == next[l].time && next[j].tiebreak < next[l].tiebreak))
                    l = j;
            }
            if (a.vehicle_count > 0 && admitted >= a.vehicle_count) break;
            if (a.vehicle_count <= 0 && next[l].time > a.end_time) break;
            payloads_.push_back({l, next[l].time, next[l].speed, next[l].tiebreak});
            push_event(next[l].time, 2, next[l].tiebreak, EventKind::Arrival,
                       static_cast<int>(payloads_.size()) - 1, 0);
            next[l] = streams[l].next(a.rates[l], a.speed_lo, a.speed_hi);
            ++admitted;
        }
    }

    void push_event(double time, int rank, double tiebreak, EventKind kind, int id, int version) {
        events_.push({time, rank, tiebreak, seq_++, kind, id, version});
    }

    bool valid(const PendingEvent& ev) const {
        return ev.id >= 0 && ev.id < static_cast<int>(pool_.size()) &&
               pool_[ev.id].version == ev.version && !pool_[ev.id].exited;
    }

    void log(double time, EventKind kind, int id) {
        result_.events.push_back({time, kind, id, pool_[id].q.lane});
    }

    void refresh_plan_states(double t) {
        for (int id : order_) {
            Live& v = pool_[id];
            v.q.plan_time = t;
            if (t <= v.q.tm) {
                v.q.plan_pos = v.q.traj.position(std::clamp(t, v.q.traj.t0, v.q.traj.tm));
                v.q.plan_speed = v.q.traj.speed(std::clamp(t, v.q.traj.t0, v.q.traj.tm));
            } else {
                v.q.plan_pos = v.q.segment_length;
                v.q.plan_speed = v.q.vm;
            }
        }
    }

    // Entry-gap enforcement: a CAV may not enter the CZ while its same-lane
    // predecessor is still within delta of the entry point.
    bool entry_blocked(int lane, double t, double& release_time) {
        auto it = last_on_lane_.find(lane);
        if (it == last_on_lane_.end()) return false;
        const Live& pred = pool_[it->second];
        if (pred.exited) return false;
        double pos = segment_position(pred.q.traj, pred.q.vm, pred.q.segment_length, t);
        if (pos >= ctx_.limits.delta - kTol) return false;
        double lo = t, hi = pred.q.tm > t ? pred.q.tm : t + 1.0;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            double p = segment_position(pred.q.traj, pred.q.vm, pred.q.segment_length, mid);
            (p < ctx_.limits.delta ? lo : hi) = mid;
        }
        release_time = hi;
        return true;
    }

    void on_arrival(const PendingEvent& ev) {
        const ArrivalPayload& pay = payloads_[ev.id];
        double release = 0.0;
        if (entry_blocked(pay.lane, ev.time, release)) {
            push_event(std::max(release, ev.time + 1e-6), 2, pay.tiebreak, EventKind::Arrival,
                       ev.id, 0);
            return;
        }

        const double t = ev.time;
        const int id = static_cast<int>(pool_.size());
        Live live;
        live.q.id = id;
        live.q.lane = pay.lane;
        live.q.entry_time = t;
        live.q.entry_speed = pay.speed;
        live.q.segment_length = scn_.geometry.segment_lengths[pay.lane];
        live.q.plan_time = t;
        live.q.plan_pos = 0.0;
        live.q.plan_speed = pay.speed;
        InitialCondition ic{t, pay.speed, 0.0, live.q.segment_length};
        live.q.t_c = earliest_arrival(ic, ctx_.limits);
        if (ctx_.policy.formulation == Formulation::ForceVmax)
            live.q.target_vm = std::min(ctx_.limits.v_max, reachable_speed_cap(ic, ctx_.limits));
        auto it = last_on_lane_.find(pay.lane);
        if (it != last_on_lane_.end() && !pool_[it->second].exited)
            live.q.same_lane_pred = it->second;

        live.rec.id = id;
        live.rec.lane = pay.lane;
        live.rec.t0 = t;
        live.rec.v0 = pay.speed;
        live.rec.deferral = t - pay.raw_time;
        if (live.rec.deferral > kTol) result_.metrics.deferrals += 1;
        pool_.push_back(std::move(live));
        last_on_lane_[pay.lane] = id;
        log(t, EventKind::Arrival, id);

        refresh_plan_states(t);

        std::vector<const QueueEntry*> queue;
        queue.reserve(order_.size());
        for (int qid : order_) queue.push_back(&pool_[qid].q);

        std::vector<const QueueEntry*> chosen_order;
        Schedule chosen;
        int swaps = 1;
        if (ctx_.policy.resequencing) {
            FeasibleSet set = feasible_sequences(queue, pool_[id].q, ctx_);
            const SequenceCandidate& best = best_sequence(set);
            chosen_order = best.order;
            chosen = best.schedule;
            swaps = set.swap_count;
        } else {
            chosen_order = queue;
            chosen_order.push_back(&pool_[id].q);
            chosen = schedule_sequence(std::span<const QueueEntry* const>(chosen_order), ctx_);
        }
        result_.complexity.per_arrival.push_back(swaps);

        apply_schedule(t, chosen_order, chosen);
    }

    void apply_schedule(double t, const std::vector<const QueueEntry*>& chosen_order,
                        const Schedule& chosen) {
        std::vector<int> new_order;
        new_order.reserve(chosen_order.size());
        for (const QueueEntry* e : chosen_order) new_order.push_back(e->id);

        for (std::size_t pos = 0; pos < new_order.size(); ++pos) {
            Live& v = pool_[new_order[pos]];
            const SlotAssignment& slot = chosen.slots[pos];
            if (v.q.committed()) continue;
            if (slot.solver_fault) {
                v.rec.fault = true;
                result_.metrics.solver_faults += 1;
                continue;
            }
            bool fresh = !v.q.has_assignment();
            if (!fresh && std::abs(slot.tm - v.q.tm) <= 1e-12) continue;

            if (!fresh) {
                // Position/speed continuity across the replan instant.
                double dp = std::abs(slot.traj.position(t) - v.q.plan_pos);
                double dv = std::abs(slot.traj.speed(t) - v.q.plan_speed);
                result_.metrics.max_replan_discontinuity =
                    std::max({result_.metrics.max_replan_discontinuity, dp, dv});
            }
            v.q.tm = slot.tm;
            v.q.vm = slot.vm;
            v.q.tf = slot.tf;
            v.q.traj = slot.traj;
            if (!v.rec.history.empty() && std::abs(v.rec.history.back().t0 - t) < 1e-12)
                v.rec.history.back() = slot.traj;
            else
                v.rec.history.push_back(slot.traj);
            v.version += 1;
            push_event(v.q.tm, 1, 0.0, EventKind::MZEntry, v.q.id, v.version);
            push_event(v.q.tf, 0, 0.0, EventKind::MZExit, v.q.id, v.version);
        }

        // Order bookkeeping and resequence events.
        for (std::size_t pos = 0; pos < new_order.size(); ++pos) {
            auto it = std::find(order_.begin(), order_.end(), new_order[pos]);
            if (it == order_.end()) continue; // the newcomer
            int old_pos = static_cast<int>(it - order_.begin());
            if (old_pos != static_cast<int>(pos))
                pool_[new_order[pos]].rec.resequence_events.push_back(
                    {t, old_pos, static_cast<int>(pos)});
        }
        order_ = std::move(new_order);
    }

    void on_exit(const PendingEvent& ev) {
        Live& v = pool_[ev.id];
        log(ev.time, EventKind::MZExit, ev.id);
        v.exited = true;
        order_.erase(std::remove(order_.begin(), order_.end(), ev.id), order_.end());

        v.rec.tm = v.q.tm;
        v.rec.vm = v.q.vm;
        v.rec.tf = v.q.tf;
        v.rec.travel_time = v.q.tm - v.rec.t0;

        // Fuel and box checks over the executed spans only.
        for (std::size_t s = 0; s < v.rec.history.size(); ++s) {
            CubicTrajectory span = v.rec.history[s];
            double end = (s + 1 < v.rec.history.size()) ? v.rec.history[s + 1].t0 : v.rec.tm;
            if (end <= span.t0 + kTol) continue;
            span.tm = std::min(span.tm, end);
            v.rec.fuel += fuel_total(span, scn_.output.fuel, scn_.output.fuel_dt);
            v.rec.limit_violations +=
                static_cast<int>(check_limits(span, ctx_.limits).size());
        }
        result_.metrics.limit_violations += v.rec.limit_violations;
        result_.end_time = std::max(result_.end_time, ev.time);
    }

    void finalize() {
        result_.vehicles.reserve(pool_.size());
        for (Live& v : pool_) result_.vehicles.push_back(std::move(v.rec));

        Metrics& m = result_.metrics;
        std::vector<double> times;
        for (const VehicleRecord& r : result_.vehicles) {
            times.push_back(r.travel_time);
            m.mean_travel_time += r.travel_time;
            m.mean_transit_time += r.tf - r.t0;
            m.total_fuel += r.fuel;
            m.makespan = std::max(m.makespan, r.tm);
        }
        const double n = std::max<std::size_t>(result_.vehicles.size(), 1);
        m.mean_travel_time /= n;
        m.mean_transit_time /= n;
        m.mean_fuel = m.total_fuel / n;
        if (!times.empty()) {
            std::sort(times.begin(), times.end());
            m.median_travel_time = times[times.size() / 2];
            m.p95_travel_time = times[static_cast<std::size_t>(0.95 * (times.size() - 1))];
        }

        result_.complexity.bound =
            worst_case_swaps(scn_.geometry, ctx_.limits.vehicle_length, ctx_.limits.delta);
        result_.complexity.analytic = expected_swaps(scn_.arrivals.rates).mean;
        m.mean_swap_count = result_.complexity.mean();

        check_safety();
    }

    // Post-run safety audit on the final assignments and executed plans.
    void check_safety() {
        Metrics& m = result_.metrics;
        const auto& vs = result_.vehicles;
        const Geometry& geo = scn_.geometry;
        const double delta = ctx_.limits.delta;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            for (std::size_t j = i + 1; j < vs.size(); ++j) {
                Relation rel = classify(vs[i].lane, vs[j].lane, geo);
                if (rel == Relation::Conflict) {
                    double overlap =
                        std::min(vs[i].tf, vs[j].tf) - std::max(vs[i].tm, vs[j].tm);
                    if (overlap > 1e-6) m.conflict_overlaps += 1;
                }
            }
        }
        // Same-lane MZ-entry spacing and continuous rear-end gap.
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (vs[i].lane < 0) continue;
            const VehicleRecord* pred = nullptr;
            for (std::size_t j = 0; j < vs.size(); ++j) {
                if (j == i || vs[j].lane != vs[i].lane) continue;
                if (vs[j].t0 < vs[i].t0 && (!pred || vs[j].t0 > pred->t0)) pred = &vs[j];
            }
            if (!pred) continue;
            if (vs[i].tm < pred->tm + delta / effective_mz_speed(pred->vm) - 1e-6)
                m.mz_spacing_violations += 1;
            bool reported = false;
            for (double t = vs[i].t0; t <= vs[i].tm + kTol && !reported; t += 0.01) {
                double gap = pred->position_at(std::min(t, vs[i].tm)) -
                             vs[i].position_at(std::min(t, vs[i].tm));
                if (gap < delta - 1e-6) {
                    m.rear_end_gap_reports += 1;
                    reported = true;
                }
            }
        }
    }

    const Scenario& scn_;
    SchedulingContext ctx_;
    SimResult result_;
    std::priority_queue<PendingEvent, std::vector<PendingEvent>, std::greater<>> events_;
    std::vector<ArrivalPayload> payloads_;
    std::vector<Live> pool_;
    std::vector<int> order_;
    std::map<int, int> last_on_lane_;
    long seq_ = 0;
};

} // namespace

SimResult run(const Scenario& scenario, const PolicySpec& policy) {
    return Simulation(scenario, policy).run();
}

std::vector<SnapshotRow> snapshot(const SimResult& result, double t) {
    std::vector<const VehicleRecord*> active;
    for (const VehicleRecord& r : result.vehicles)
        if (r.t0 <= t && t <= r.tf) active.push_back(&r);
    std::sort(active.begin(), active.end(),
              [](const VehicleRecord* a, const VehicleRecord* b) { return a->tm < b->tm; });
    std::vector<SnapshotRow> rows;
    int order = 1;
    for (const VehicleRecord* r : active)
        rows.push_back({r->id, r->lane, r->position_at(t), r->speed_at(t), r->control_at(t),
                        order++});
    return rows;
}

std::vector<ComparisonRow> compare(const Scenario& scenario,
                                   const std::vector<PolicySpec>& policies) {
    if (policies.size() < 2)
        throw std::invalid_argument("compare requires at least two policies");
    std::vector<ComparisonRow> rows;
    for (const PolicySpec& p : policies) {
        SimResult r = run(scenario, p);
        std::string label = to_string(p.formulation) + (p.resequencing ? "+R" : "");
        rows.push_back({label, p, r.metrics});
    }
    return rows;
}

} // namespace cav
