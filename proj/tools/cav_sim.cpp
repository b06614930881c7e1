#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "cav/engine.hpp"
#include "cav/report.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read scenario file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int vehicles = 0;
};

cav::Scenario load_with_overrides(const CommonOpts& o) {
    cav::Scenario s = cav::load_scenario(read_file(o.scenario_path));
    if (o.seed_set) s.arrivals.seed = o.seed;
    if (o.vehicles > 0) s.arrivals.vehicle_count = o.vehicles;
    for (const cav::Violation& v : cav::validate(s))
        if (v.severity == cav::Severity::Warning)
            std::cerr << "warning: " << v.field << ": " << v.message << "\n";
    return s;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-s,--scenario", o.scenario_path, "scenario document (JSON)")->required();
    cmd->add_option("-o,--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "override the scenario RNG seed")
        ->each([&](const std::string&) { o.seed_set = true; });
    cmd->add_option("--vehicles", o.vehicles, "override the vehicle-count horizon");
}

int cmd_run(const CommonOpts& o, int case_number, double trace_dt_override) {
    cav::Scenario s = load_with_overrides(o);
    cav::PolicySpec policy = (case_number > 0) ? cav::policy_for_case(case_number) : s.policy;
    if (trace_dt_override > 0.0) s.output.trace_sample_dt = trace_dt_override;

    cav::SimResult result = cav::run(s, policy);

    cav::write_file(o.out_dir + "/metrics.json", cav::metrics_json(result));
    cav::write_file(o.out_dir + "/vehicles.csv", cav::vehicles_csv(result));
    cav::write_file(o.out_dir + "/trace.csv",
                    cav::trace_csv(result, s.output.trace_sample_dt));

    const cav::Metrics& m = result.metrics;
    std::cout << "vehicles: " << result.vehicles.size() << "\n"
              << "policy: " << cav::to_string(policy.formulation)
              << (policy.resequencing ? " +resequencing" : "") << "\n"
              << "mean travel time: " << cav::format_number(m.mean_travel_time) << " s\n"
              << "mean fuel: " << cav::format_number(m.mean_fuel) << " l\n"
              << "makespan: " << cav::format_number(m.makespan) << " s\n"
              << "mean swap count: " << cav::format_number(m.mean_swap_count) << "\n"
              << "safety: " << m.conflict_overlaps << " conflict overlaps, "
              << m.mz_spacing_violations << " spacing violations, " << m.rear_end_gap_reports
              << " rear-end gap reports\n";
    return (m.solver_faults == 0) ? 0 : 3;
}

int cmd_compare(const CommonOpts& o, const std::vector<int>& cases,
                const std::vector<double>& lambdas, int reps) {
    if (cases.size() < 2) throw std::runtime_error("compare needs at least two cases");
    cav::Scenario base = load_with_overrides(o);
    std::vector<double> lam = lambdas;
    if (lam.empty()) {
        double sum = 0.0;
        for (double r : base.arrivals.rates) sum += r;
        lam.push_back(sum / base.arrivals.rates.size());
    }
    std::vector<cav::CompareCell> cells;
    for (double l : lam) {
        cav::Scenario s = base;
        for (double& r : s.arrivals.rates) r = l;
        for (int rep = 0; rep < reps; ++rep) {
            s.arrivals.seed = base.arrivals.seed + static_cast<std::uint64_t>(rep);
            for (int cs : cases) {
                cav::SimResult result = cav::run(s, cav::policy_for_case(cs));
                cells.push_back({l, cs, rep, result.metrics});
            }
        }
    }
    cav::write_file(o.out_dir + "/compare.csv", cav::compare_csv(cells));
    cav::write_file(o.out_dir + "/compare_detail.csv", cav::compare_detail_csv(cells));
    std::cout << cav::compare_csv(cells);
    return 0;
}

int cmd_complexity(const CommonOpts& o, const std::vector<double>& lambdas, int reps) {
    cav::Scenario base = load_with_overrides(o);
    std::vector<double> lam = lambdas;
    if (lam.empty()) lam = {0.4, 0.3, 0.2, 0.1};
    std::vector<cav::ComplexityCell> cells;
    for (double l : lam) {
        cav::Scenario s = base;
        for (double& r : s.arrivals.rates) r = l;
        double mean = 0.0;
        cav::ComplexityStats last;
        for (int rep = 0; rep < reps; ++rep) {
            s.arrivals.seed = base.arrivals.seed + static_cast<std::uint64_t>(rep);
            cav::SimResult result = cav::run(s, cav::policy_for_case(5));
            mean += result.complexity.mean();
            last = result.complexity;
        }
        cells.push_back({l, mean / reps, last.analytic, last.bound});
    }
    cav::write_file(o.out_dir + "/complexity.csv", cav::complexity_csv(cells));
    std::cout << cav::complexity_csv(cells);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Signal-free intersection coordination simulator"};
    app.require_subcommand(1);

    CommonOpts run_opts, cmp_opts, cx_opts;
    int case_number = 0;
    double trace_dt = 0.0;
    std::vector<int> cases;
    std::vector<double> lambdas, cx_lambdas;
    int reps = 10, cx_reps = 10;

    CLI::App* runc = app.add_subcommand("run", "simulate one scenario/policy");
    add_common(runc, run_opts);
    runc->add_option("--case", case_number, "formulation case 1-10 (overrides scenario policy)");
    runc->add_option("--trace-dt", trace_dt, "trace sample step [s]");

    CLI::App* cmpc = app.add_subcommand("compare", "run several cases on paired seeds");
    add_common(cmpc, cmp_opts);
    cmpc->add_option("--cases", cases, "formulation cases to compare")->required();
    cmpc->add_option("--lambdas", lambdas, "arrival rates to sweep (uniform across lanes)");
    cmpc->add_option("--reps", reps, "replications per cell");

    CLI::App* cxc = app.add_subcommand("complexity", "resequencing swap-count statistics");
    add_common(cxc, cx_opts);
    cxc->add_option("--lambdas", cx_lambdas, "arrival rates to sweep");
    cxc->add_option("--reps", cx_reps, "replications per rate");

    CLI11_PARSE(app, argc, argv);

    try {
        if (runc->parsed()) return cmd_run(run_opts, case_number, trace_dt);
        if (cmpc->parsed()) return cmd_compare(cmp_opts, cases, lambdas, reps);
        if (cxc->parsed()) return cmd_complexity(cx_opts, cx_lambdas, cx_reps);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
