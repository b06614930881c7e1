#include "cav/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace cav {

using nlohmann::json;

std::string to_string(Relation r) {
    switch (r) {
        case Relation::SameLane: return "SameLane";
        case Relation::SameRoadSameDir: return "SameRoadSameDir";
        case Relation::Opposite: return "Opposite";
        case Relation::Conflict: return "Conflict";
    }
    return "?";
}

std::string to_string(Formulation f) {
    switch (f) {
        case Formulation::Cruise1: return "cruise1";
        case Formulation::RhoPenalty1: return "rho_penalty1";
        case Formulation::ForceTc1: return "force_tc1";
        case Formulation::SigmaPenalty: return "sigma_penalty";
        case Formulation::ForceVmax: return "force_vmax";
    }
    return "?";
}

Relation Geometry::relation(int lane_i, int lane_j) const {
    if (lane_i < 0 || lane_j < 0 || lane_i >= num_segments() || lane_j >= num_segments())
        throw std::out_of_range("unknown lane index");
    return conflict_table[lane_i][lane_j];
}

std::vector<std::vector<Relation>> canonical_conflict_table(const std::vector<LaneDesc>& lanes) {
    const int n = static_cast<int>(lanes.size());
    std::vector<std::vector<Relation>> table(n, std::vector<Relation>(n, Relation::Conflict));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                table[i][j] = Relation::SameLane;
            } else if (lanes[i].road != lanes[j].road) {
                table[i][j] = Relation::Conflict;
            } else if (lanes[i].forward != lanes[j].forward) {
                table[i][j] = Relation::Opposite;
            } else {
                table[i][j] = Relation::SameRoadSameDir;
            }
        }
    }
    return table;
}

double FuelCoefficients::rate_mlps(double v, double u) const {
    double cruise_rate = 0.0;
    double vp = 1.0;
    for (double w : cruise) {
        cruise_rate += w * vp;
        vp *= v;
    }
    double accel_rate = 0.0;
    vp = 1.0;
    for (double r : accel) {
        accel_rate += r * vp;
        vp *= v;
    }
    double rate = cruise_rate + std::max(u, 0.0) * accel_rate;
    return std::max(rate, 0.0);
}

FuelCoefficients default_fuel_coefficients() {
    // Polynomial fuel-rate metamodel (rate in ml/s as a function of speed,
    // plus a positive-acceleration term).
    FuelCoefficients fc;
    fc.cruise = {0.1569, 0.02450, -0.0007415, 0.00005975};
    fc.accel = {0.07224, 0.09681, 0.001075};
    return fc;
}

namespace {

Relation relation_from_string(const std::string& s) {
    if (s == "SameLane") return Relation::SameLane;
    if (s == "SameRoadSameDir") return Relation::SameRoadSameDir;
    if (s == "Opposite") return Relation::Opposite;
    if (s == "Conflict") return Relation::Conflict;
    throw ScenarioError("unknown relation '" + s + "'");
}

Formulation formulation_from_string(const std::string& s) {
    if (s == "cruise1") return Formulation::Cruise1;
    if (s == "rho_penalty1") return Formulation::RhoPenalty1;
    if (s == "force_tc1") return Formulation::ForceTc1;
    if (s == "sigma_penalty") return Formulation::SigmaPenalty;
    if (s == "force_vmax") return Formulation::ForceVmax;
    throw ScenarioError("unknown formulation '" + s + "'");
}

// Rejects keys outside the documented schema so typos never pass silently.
void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = std::any_of(allowed.begin(), allowed.end(),
                                 [&](const char* k) { return it.key() == k; });
        if (!known)
            throw ScenarioError("unknown key '" + it.key() + "' in section '" + section + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T def) {
    if (obj.contains(key)) return obj.at(key).get<T>();
    return def;
}

template <typename T>
T require(const json& obj, const std::string& section, const char* key) {
    if (!obj.contains(key))
        throw ScenarioError("missing key '" + std::string(key) + "' in section '" + section + "'");
    return obj.at(key).get<T>();
}

} // namespace

Scenario load_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("scenario parse error: ") + e.what());
    }

    Scenario s;
    try {
        check_keys(doc, "<root>", {"geometry", "limits", "arrivals", "policy", "output"});

        const json& g = doc.contains("geometry") ? doc.at("geometry") : json::object();
        check_keys(g, "geometry", {"mz_side", "segments", "conflict_overrides"});
        s.geometry.mz_side = require<double>(g, "geometry", "mz_side");
        for (const json& seg : require<json>(g, "geometry", "segments")) {
            check_keys(seg, "geometry.segments[]", {"name", "length", "road", "forward", "lane"});
            LaneDesc ld;
            ld.name = require<std::string>(seg, "segment", "name");
            ld.road = require<std::string>(seg, "segment", "road");
            ld.forward = get_or<bool>(seg, "forward", true);
            ld.lane_index = get_or<int>(seg, "lane", 0);
            s.geometry.lanes.push_back(ld);
            s.geometry.segment_lengths.push_back(require<double>(seg, "segment", "length"));
        }
        s.geometry.conflict_table = canonical_conflict_table(s.geometry.lanes);
        if (g.contains("conflict_overrides")) {
            for (const json& ov : g.at("conflict_overrides")) {
                if (!ov.is_array() || ov.size() != 3)
                    throw ScenarioError("conflict_overrides entries must be [i, j, relation]");
                int i = ov.at(0).get<int>();
                int j = ov.at(1).get<int>();
                if (i < 0 || j < 0 || i >= s.geometry.num_segments() || j >= s.geometry.num_segments())
                    throw ScenarioError("conflict_overrides lane index out of range");
                s.geometry.conflict_table[i][j] = relation_from_string(ov.at(2).get<std::string>());
            }
        }

        const json& l = doc.contains("limits") ? doc.at("limits") : json::object();
        check_keys(l, "limits", {"v_min", "v_max", "u_min", "u_max", "delta",
                                 "vehicle_length", "energy_weight"});
        s.limits.v_min = require<double>(l, "limits", "v_min");
        s.limits.v_max = require<double>(l, "limits", "v_max");
        s.limits.u_min = require<double>(l, "limits", "u_min");
        s.limits.u_max = require<double>(l, "limits", "u_max");
        s.limits.delta = get_or<double>(l, "delta", 10.0);
        s.limits.vehicle_length = get_or<double>(l, "vehicle_length", 5.0);
        s.limits.energy_weight = get_or<double>(l, "energy_weight", 1.0);

        const json& a = doc.contains("arrivals") ? doc.at("arrivals") : json::object();
        check_keys(a, "arrivals", {"rates", "initial_speed_range", "vehicle_count",
                                   "end_time", "seed", "service_rate_mu"});
        s.arrivals.rates = require<std::vector<double>>(a, "arrivals", "rates");
        auto range = require<std::vector<double>>(a, "arrivals", "initial_speed_range");
        if (range.size() != 2)
            throw ScenarioError("initial_speed_range must be [lo, hi]");
        s.arrivals.speed_lo = range[0];
        s.arrivals.speed_hi = range[1];
        s.arrivals.vehicle_count = get_or<int>(a, "vehicle_count", 0);
        s.arrivals.end_time = get_or<double>(a, "end_time", 0.0);
        s.arrivals.seed = get_or<std::uint64_t>(a, "seed", 0);
        if (a.contains("service_rate_mu"))
            s.arrivals.service_rate_mu = a.at("service_rate_mu").get<double>();

        const json& p = doc.contains("policy") ? doc.at("policy") : json::object();
        check_keys(p, "policy", {"resequencing", "formulation", "rho", "sigma",
                                 "tie_break", "relax_on_violation"});
        s.policy.resequencing = get_or<bool>(p, "resequencing", false);
        s.policy.formulation =
            formulation_from_string(get_or<std::string>(p, "formulation", "cruise1"));
        s.policy.rho = get_or<double>(p, "rho", 0.0);
        s.policy.sigma = get_or<double>(p, "sigma", 0.0);
        s.policy.tie_break = get_or<std::string>(p, "tie_break", "min_displacement");
        s.policy.relax_on_violation = get_or<bool>(p, "relax_on_violation", false);

        const json& o = doc.contains("output") ? doc.at("output") : json::object();
        check_keys(o, "output", {"trace_sample_dt", "fuel_dt", "fuel_cruise", "fuel_accel"});
        s.output.trace_sample_dt = get_or<double>(o, "trace_sample_dt", 0.1);
        s.output.fuel_dt = get_or<double>(o, "fuel_dt", 0.01);
        if (o.contains("fuel_cruise"))
            s.output.fuel.cruise = o.at("fuel_cruise").get<std::vector<double>>();
        if (o.contains("fuel_accel"))
            s.output.fuel.accel = o.at("fuel_accel").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ScenarioError(std::string("scenario field error: ") + e.what());
    }

    std::vector<Violation> errors;
    for (const Violation& v : validate(s))
        if (v.severity == Severity::Error) errors.push_back(v);
    if (!errors.empty()) {
        std::ostringstream oss;
        oss << "scenario validation failed:";
        for (const Violation& v : errors) oss << "\n  " << v.field << ": " << v.message;
        throw ScenarioError(oss.str());
    }
    return s;
}

std::vector<Violation> validate(const Scenario& s) {
    std::vector<Violation> out;
    auto err = [&](const std::string& field, const std::string& msg) {
        out.push_back({field, msg, Severity::Error});
    };

    const Geometry& g = s.geometry;
    if (g.num_segments() == 0) err("geometry.segments", "at least one CZ segment required");
    if (!(g.mz_side > 0.0)) err("mz_side", "merging-zone side S must be positive");
    for (int i = 0; i < g.num_segments(); ++i) {
        if (!(g.segment_lengths[i] > g.mz_side))
            err("segments[" + std::to_string(i) + "].length",
                "segment length must exceed the MZ side S");
    }
    if (static_cast<int>(g.lanes.size()) != g.num_segments() ||
        static_cast<int>(g.conflict_table.size()) != g.num_segments())
        err("geometry", "lanes/conflict table size must match segment count");
    else {
        for (int i = 0; i < g.num_segments(); ++i) {
            if (static_cast<int>(g.conflict_table[i].size()) != g.num_segments()) {
                err("conflict_table", "table must be square");
                break;
            }
            if (g.conflict_table[i][i] != Relation::SameLane)
                err("conflict_table", "diagonal entries must be SameLane");
            for (int j = 0; j < g.num_segments(); ++j) {
                if (i != j && g.conflict_table[i][j] == Relation::SameLane)
                    err("conflict_table", "SameLane only allowed on the diagonal");
                Relation r = g.conflict_table[i][j];
                if ((r == Relation::Opposite || r == Relation::Conflict) &&
                    g.conflict_table[j][i] != r)
                    err("conflict_table", "Opposite/Conflict relations must be symmetric");
            }
        }
    }

    const VehicleLimits& lim = s.limits;
    if (!(lim.v_min >= 0.0)) err("v_min", "v_min must be nonnegative");
    if (!(lim.v_min < lim.v_max)) err("v_min", "v_min must be strictly below v_max");
    if (!(lim.u_min < 0.0)) err("u_min", "u_min must be negative");
    if (!(lim.u_max > 0.0)) err("u_max", "u_max must be positive");
    if (!(lim.delta > 0.0)) err("delta", "safety distance delta must be positive");
    if (!(lim.vehicle_length > 0.0)) err("vehicle_length", "vehicle length must be positive");
    if (!(lim.energy_weight > 0.0)) err("energy_weight", "K must be positive");

    const ArrivalModel& a = s.arrivals;
    if (static_cast<int>(a.rates.size()) != g.num_segments())
        err("rates", "one arrival rate per CZ segment required");
    for (std::size_t i = 0; i < a.rates.size(); ++i)
        if (!(a.rates[i] > 0.0)) err("rates[" + std::to_string(i) + "]", "lambda must be positive");
    if (!(a.speed_lo <= a.speed_hi)) err("initial_speed_range", "lo must not exceed hi");
    if (!(a.speed_lo >= lim.v_min) || !(a.speed_hi <= lim.v_max))
        err("initial_speed_range", "entry speed range must lie within [v_min, v_max]");
    if (a.vehicle_count <= 0 && !(a.end_time > 0.0))
        err("horizon", "either vehicle_count or end_time must be set");

    const PolicySpec& p = s.policy;
    if (p.rho < 0.0) err("rho", "rho must be nonnegative");
    if (p.sigma < 0.0) err("sigma", "sigma must be nonnegative");
    if (p.tie_break != "min_displacement")
        err("tie_break", "unknown tie-break rule '" + p.tie_break + "'");

    if (!(s.output.trace_sample_dt > 0.0)) err("trace_sample_dt", "must be positive");
    if (!(s.output.fuel_dt > 0.0)) err("fuel_dt", "must be positive");
    // Fuel rate must stay nonnegative over the admissible (v,u) box after
    // clamping; the max(.,0) clamp guarantees it, so only shape is checked.
    if (s.output.fuel.cruise.empty()) err("fuel_cruise", "cruise polynomial required");
    if (s.output.fuel.accel.empty()) err("fuel_accel", "accel polynomial required");

    // Advisory M/G/1 stability precheck. Opposite-direction pairs may occupy
    // the MZ together, hence the factor 2. Boundary traffic (sum == 2 mu) is
    // accepted without a warning.
    if (out.empty()) {
        double sum = 0.0;
        for (double r : a.rates) sum += r;
        double mu = a.service_rate_mu.value_or(lim.v_max / (g.mz_side + lim.delta));
        if (sum > 2.0 * mu) {
            std::ostringstream oss;
            oss << "total arrival rate " << sum << " exceeds stability bound 2*mu = " << 2.0 * mu
                << "; expect a growing queue";
            out.push_back({"rates", oss.str(), Severity::Warning});
        }
    }
    return out;
}

std::string render(const Scenario& s) {
    json doc;
    json segs = json::array();
    const Geometry& g = s.geometry;
    for (int i = 0; i < g.num_segments(); ++i) {
        segs.push_back({{"name", g.lanes[i].name},
                        {"length", g.segment_lengths[i]},
                        {"road", g.lanes[i].road},
                        {"forward", g.lanes[i].forward},
                        {"lane", g.lanes[i].lane_index}});
    }
    doc["geometry"] = {{"mz_side", g.mz_side}, {"segments", segs}};
    // Persist the table explicitly where it differs from the canonical one.
    auto canonical = canonical_conflict_table(g.lanes);
    json overrides = json::array();
    for (int i = 0; i < g.num_segments(); ++i)
        for (int j = 0; j < g.num_segments(); ++j)
            if (g.conflict_table[i][j] != canonical[i][j])
                overrides.push_back({i, j, to_string(g.conflict_table[i][j])});
    if (!overrides.empty()) doc["geometry"]["conflict_overrides"] = overrides;

    doc["limits"] = {{"v_min", s.limits.v_min},       {"v_max", s.limits.v_max},
                     {"u_min", s.limits.u_min},       {"u_max", s.limits.u_max},
                     {"delta", s.limits.delta},       {"vehicle_length", s.limits.vehicle_length},
                     {"energy_weight", s.limits.energy_weight}};

    doc["arrivals"] = {{"rates", s.arrivals.rates},
                       {"initial_speed_range", {s.arrivals.speed_lo, s.arrivals.speed_hi}},
                       {"vehicle_count", s.arrivals.vehicle_count},
                       {"end_time", s.arrivals.end_time},
                       {"seed", s.arrivals.seed}};
    if (s.arrivals.service_rate_mu)
        doc["arrivals"]["service_rate_mu"] = *s.arrivals.service_rate_mu;

    doc["policy"] = {{"resequencing", s.policy.resequencing},
                     {"formulation", to_string(s.policy.formulation)},
                     {"rho", s.policy.rho},
                     {"sigma", s.policy.sigma},
                     {"tie_break", s.policy.tie_break},
                     {"relax_on_violation", s.policy.relax_on_violation}};

    doc["output"] = {{"trace_sample_dt", s.output.trace_sample_dt},
                     {"fuel_dt", s.output.fuel_dt},
                     {"fuel_cruise", s.output.fuel.cruise},
                     {"fuel_accel", s.output.fuel.accel}};
    return doc.dump(2) + "\n";
}

Scenario baseline_scenario() {
    Scenario s;
    s.geometry.mz_side = 30.0;
    s.geometry.segment_lengths = {400.0, 400.0, 300.0, 300.0};
    s.geometry.lanes = {{"E2W", "EW", true, 0},
                        {"W2E", "EW", false, 0},
                        {"N2S", "NS", true, 0},
                        {"S2N", "NS", false, 0}};
    s.geometry.conflict_table = canonical_conflict_table(s.geometry.lanes);
    s.limits.v_min = 4.0;
    s.limits.v_max = 16.0;
    s.limits.u_min = -5.0;
    s.limits.u_max = 2.0;
    s.limits.delta = 10.0;
    s.limits.vehicle_length = 5.0;
    s.arrivals.rates = {0.4, 0.4, 0.4, 0.4};
    s.arrivals.speed_lo = 8.0;
    s.arrivals.speed_hi = 12.0;
    s.arrivals.vehicle_count = 100;
    s.arrivals.seed = 1;
    s.arrivals.service_rate_mu = 0.8; // roughly one crossing per 1.25 s
    s.policy.resequencing = true;
    s.policy.formulation = Formulation::Cruise1;
    return s;
}

} // namespace cav
