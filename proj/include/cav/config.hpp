#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cav {

// Relation between two approach lanes with respect to the merging zone.
enum class Relation { SameLane, SameRoadSameDir, Opposite, Conflict };

std::string to_string(Relation r);

struct LaneDesc {
    std::string name;    // e.g. "E2W"
    std::string road;    // e.g. "EW"
    bool forward = true; // direction flag on the road
    int lane_index = 0;  // lane within (road, direction)

    bool operator==(const LaneDesc&) const = default;
};

struct Geometry {
    std::vector<double> segment_lengths; // L_r, one per CZ segment [m]
    double mz_side = 0.0;                // S [m]
    std::vector<LaneDesc> lanes;         // one lane per segment
    // conflict_table[i][j]: relation of lane j relative to lane i
    std::vector<std::vector<Relation>> conflict_table;

    int num_segments() const { return static_cast<int>(segment_lengths.size()); }
    Relation relation(int lane_i, int lane_j) const;

    bool operator==(const Geometry&) const = default;
};

// Builds the relation table from road/direction/lane labels: same road+dir+lane
// -> SameLane (diagonal only), same road+dir different lane -> SameRoadSameDir,
// same road opposite direction -> Opposite, different roads -> Conflict.
std::vector<std::vector<Relation>> canonical_conflict_table(const std::vector<LaneDesc>& lanes);

struct VehicleLimits {
    double v_min = 0.0;          // [m/s]
    double v_max = 0.0;          // [m/s]
    double u_min = 0.0;          // [m/s^2], negative
    double u_max = 0.0;          // [m/s^2], positive
    double delta = 10.0;         // minimal safety following distance [m]
    double vehicle_length = 5.0; // l_v [m]
    double energy_weight = 1.0;  // K_i

    bool operator==(const VehicleLimits&) const = default;
};

struct ArrivalModel {
    std::vector<double> rates;   // lambda_r per segment [veh/s]
    double speed_lo = 0.0;       // entry speed ~ U[speed_lo, speed_hi] [m/s]
    double speed_hi = 0.0;
    int vehicle_count = 0;       // horizon: total vehicles (0 = use end_time)
    double end_time = 0.0;       // horizon: last admitted arrival time [s]
    std::uint64_t seed = 0;
    std::optional<double> service_rate_mu; // stability-check service rate override

    bool operator==(const ArrivalModel&) const = default;
};

enum class Formulation { Cruise1, RhoPenalty1, ForceTc1, SigmaPenalty, ForceVmax };

std::string to_string(Formulation f);

struct PolicySpec {
    bool resequencing = false;
    Formulation formulation = Formulation::Cruise1;
    double rho = 0.0;   // travel-time penalty weight (RhoPenalty1)
    double sigma = 0.0; // terminal-speed penalty weight (SigmaPenalty)
    std::string tie_break = "min_displacement";
    bool relax_on_violation = false; // bisect tm upward when a plan exits the (v,u) box

    bool operator==(const PolicySpec&) const = default;
};

struct FuelCoefficients {
    // fuel rate [ml/s] = max(0, cruise(v) + max(u,0) * accel(v))
    std::vector<double> cruise; // w0..w3 in v
    std::vector<double> accel;  // r0..r2 in v

    double rate_mlps(double v, double u) const;

    bool operator==(const FuelCoefficients&) const = default;
};

FuelCoefficients default_fuel_coefficients();

struct OutputSpec {
    double trace_sample_dt = 0.1; // [s]
    double fuel_dt = 0.01;        // fuel quadrature step [s]
    FuelCoefficients fuel = default_fuel_coefficients();

    bool operator==(const OutputSpec&) const = default;
};

struct Scenario {
    Geometry geometry;
    VehicleLimits limits;
    ArrivalModel arrivals;
    PolicySpec policy;
    OutputSpec output;

    bool operator==(const Scenario&) const = default;
};

enum class Severity { Error, Warning };

struct Violation {
    std::string field;
    std::string message;
    Severity severity = Severity::Error;
};

// Thrown by load_scenario on malformed documents or failed validation.
struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

// Parses a JSON scenario document, applies defaults and validates.
// Unknown keys are errors. Throws ScenarioError.
Scenario load_scenario(const std::string& text);

// Pure invariant check; returns every violated invariant plus the advisory
// M/G/1 stability precheck (sum lambda_r <= 2 mu) as a warning.
std::vector<Violation> validate(const Scenario& s);

// Serializes a scenario back to the document format; load_scenario(render(s)) == s.
std::string render(const Scenario& s);

// The intersection of the case studies: 400/400/300/300 m segments, S = 30 m,
// lambda = 0.4 on each, v0 ~ U[8,12], v in [4,16], u in [-5,2].
Scenario baseline_scenario();

} // namespace cav
