#include "cav/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cav {

std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return buf;
}

namespace {

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Arrival: return "arrival";
        case EventKind::MZEntry: return "mz_entry";
        case EventKind::MZExit: return "mz_exit";
    }
    return "?";
}

} // namespace

std::string metrics_json(const SimResult& result) {
    const Metrics& m = result.metrics;
    std::ostringstream os;
    auto num = [&](const char* key, double v, bool comma = true) {
        os << "  \"" << key << "\": " << format_number(v) << (comma ? ",\n" : "\n");
    };
    os << "{\n";
    os << "  \"policy\": {\n"
       << "    \"formulation\": \"" << to_string(result.policy.formulation) << "\",\n"
       << "    \"resequencing\": " << (result.policy.resequencing ? "true" : "false") << ",\n"
       << "    \"rho\": " << format_number(result.policy.rho) << ",\n"
       << "    \"sigma\": " << format_number(result.policy.sigma) << "\n  },\n";
    num("vehicles", static_cast<double>(result.vehicles.size()));
    num("seed", static_cast<double>(result.scenario.arrivals.seed));
    num("mean_travel_time_s", m.mean_travel_time);
    num("median_travel_time_s", m.median_travel_time);
    num("p95_travel_time_s", m.p95_travel_time);
    num("mean_transit_time_s", m.mean_transit_time);
    num("total_fuel_l", m.total_fuel);
    num("mean_fuel_l", m.mean_fuel);
    num("makespan_s", m.makespan);
    num("mean_swap_count", m.mean_swap_count);
    num("worst_case_swap_bound", result.complexity.bound);
    num("analytic_expected_swaps", result.complexity.analytic);
    num("max_replan_discontinuity", m.max_replan_discontinuity);
    num("conflict_overlaps", m.conflict_overlaps);
    num("mz_spacing_violations", m.mz_spacing_violations);
    num("rear_end_gap_reports", m.rear_end_gap_reports);
    num("limit_violations", m.limit_violations);
    num("solver_faults", m.solver_faults);
    num("deferrals", m.deferrals, false);
    os << "}\n";
    return os.str();
}

std::string vehicles_csv(const SimResult& result) {
    std::ostringstream os;
    os << "id,lane,t0,v0,tm,vm,tf,fuel,travel_time,deferral,"
          "resequence_count,limit_violations,fault\n";
    for (const VehicleRecord& r : result.vehicles) {
        os << r.id << ',' << r.lane << ',' << format_number(r.t0) << ',' << format_number(r.v0)
           << ',' << format_number(r.tm) << ',' << format_number(r.vm) << ','
           << format_number(r.tf) << ',' << format_number(r.fuel) << ','
           << format_number(r.travel_time) << ',' << format_number(r.deferral) << ','
           << r.resequence_events.size() << ',' << r.limit_violations << ','
           << (r.fault ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string trace_csv(const SimResult& result, double sample_dt) {
    if (!(sample_dt > 0.0)) throw std::invalid_argument("trace sample step must be positive");
    std::ostringstream os;
    os << "time,id,lane,position,speed,control,order\n";
    double horizon = 0.0;
    for (const VehicleRecord& r : result.vehicles) horizon = std::max(horizon, r.tf);
    for (long step = 0;; ++step) {
        double t = step * sample_dt;
        if (t > horizon + 1e-12) break;
        for (const SnapshotRow& row : snapshot(result, t)) {
            os << format_number(t) << ',' << row.id << ',' << row.lane << ','
               << format_number(row.p) << ',' << format_number(row.v) << ','
               << format_number(row.u) << ',' << row.order << '\n';
        }
    }
    return os.str();
}

std::string compare_csv(const std::vector<CompareCell>& cells) {
    std::set<double, std::greater<>> lambdas;
    std::set<int> cases;
    std::map<std::pair<double, int>, std::pair<double, double>> acc; // sum time, sum fuel
    std::map<std::pair<double, int>, int> counts;
    for (const CompareCell& c : cells) {
        lambdas.insert(c.lambda);
        cases.insert(c.case_number);
        auto key = std::make_pair(c.lambda, c.case_number);
        acc[key].first += c.metrics.mean_travel_time;
        acc[key].second += c.metrics.mean_fuel;
        counts[key] += 1;
    }
    std::ostringstream os;
    os << "lambda";
    for (int cs : cases) os << ",time_case" << cs << ",fuel_case" << cs;
    os << '\n';
    for (double l : lambdas) {
        os << format_number(l);
        for (int cs : cases) {
            auto key = std::make_pair(l, cs);
            int n = counts.count(key) ? counts[key] : 0;
            if (n == 0) {
                os << ",,";
            } else {
                os << ',' << format_number(acc[key].first / n) << ','
                   << format_number(acc[key].second / n);
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string compare_detail_csv(const std::vector<CompareCell>& cells) {
    std::ostringstream os;
    os << "lambda,case,replication,mean_travel_time,mean_fuel,makespan,mean_swap_count,"
          "conflict_overlaps,mz_spacing_violations\n";
    for (const CompareCell& c : cells) {
        os << format_number(c.lambda) << ',' << c.case_number << ',' << c.replication << ','
           << format_number(c.metrics.mean_travel_time) << ','
           << format_number(c.metrics.mean_fuel) << ',' << format_number(c.metrics.makespan)
           << ',' << format_number(c.metrics.mean_swap_count) << ','
           << c.metrics.conflict_overlaps << ',' << c.metrics.mz_spacing_violations << '\n';
    }
    return os.str();
}

std::string complexity_csv(const std::vector<ComplexityCell>& cells) {
    std::ostringstream os;
    os << "lambda,empirical_mean,analytic,bound\n";
    for (const ComplexityCell& c : cells) {
        os << format_number(c.lambda) << ',' << format_number(c.empirical_mean) << ','
           << format_number(c.analytic) << ',' << format_number(c.bound) << '\n';
    }
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
}

} // namespace cav
