#pragma once

#include <string>
#include <vector>

#include "cav/engine.hpp"

namespace cav {

// Fixed-width formatting used by every emitter: 9 significant digits, so the
// CSV round-trips losslessly at the printed precision.
std::string format_number(double x);

std::string metrics_json(const SimResult& result);
std::string vehicles_csv(const SimResult& result);
std::string trace_csv(const SimResult& result, double sample_dt);

struct CompareCell {
    double lambda = 0.0;
    int case_number = 0;
    int replication = 0;
    Metrics metrics;
};

// Table-shaped summary: one row per lambda, time and fuel columns per case,
// cells averaged over replications.
std::string compare_csv(const std::vector<CompareCell>& cells);
std::string compare_detail_csv(const std::vector<CompareCell>& cells);

struct ComplexityCell {
    double lambda = 0.0;
    double empirical_mean = 0.0;
    double analytic = 0.0;
    double bound = 0.0;
};

std::string complexity_csv(const std::vector<ComplexityCell>& cells);

void write_file(const std::string& path, const std::string& content);

} // namespace cav
