#include "pdsr/report.hpp"

#include <cmath>
#include <set>

namespace pdsr {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

json og_json(const OptimalityGap& og) {
    return {{"og_abs", number(og.og_abs)},
            {"og_pct", number(og.og_pct)},
            {"reduced_value", number(og.reduced_value)},
            {"benchmark_value", number(og.benchmark_value)}};
}

json components_json(const std::map<std::string, double>& c) {
    json j = json::object();
    for (const auto& [k, v] : c) j[k] = number(v);
    return j;
}

}  // namespace

std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

json to_json(const WorstCaseResult& w, const ScenarioSet& set) {
    json j;
    j["sigma"] = json::array();
    for (double s : w.sigma) j["sigma"].push_back(number(s));
    std::vector<std::string> order, flagged;
    for (int i : w.order) order.push_back(set.scenario(i).id);
    for (std::size_t i = 0; i < w.flags.size(); ++i)
        if (w.flags[i]) flagged.push_back(set.scenario(static_cast<int>(i)).id);
    j["order"] = order;
    j["rho"] = json::array();
    for (double r : w.rho) j["rho"].push_back(number(r));
    j["flags"] = w.flags;
    j["flagged_ids"] = flagged;
    j["threshold_position"] = w.threshold_position;
    return j;
}

json to_json(const EvaluationReport& r, const ScenarioSet& set) {
    json j;
    j["method"] = r.method;
    j["K"] = r.K;
    j["spdd"] = number(r.spdd);
    j["pddbi"] = number(r.pddbi);
    j["og"] = og_json(r.og);
    j["og_bound"] = number(r.og_bound);
    j["se"] = json::object();
    for (const auto& [rep, v] : r.se) j["se"][set.scenario(rep).id] = number(v);
    j["worst_case"] = to_json(r.worst_case, set);
    j["kappa"] = r.kappa;
    j["benchmark_computed"] = r.benchmark.computed;
    json verification = json::array();
    for (int i = 0; i < set.size(); ++i) {
        json row{{"id", set.scenario(i).id}, {"reduced", number(r.reduced.per_scenario.at(i))}};
        if (r.benchmark.computed) row["benchmark"] = number(r.benchmark.per_scenario.at(i));
        row["components"] = components_json(r.reduced.components.at(i));
        verification.push_back(row);
    }
    j["verification_costs"] = verification;
    j["reduced_decision"] = r.reduced.decision.values;
    j["mean_components"] = components_json(mean_components(r.reduced.components, set.probabilities()));
    return j;
}

json timings_json(const EvaluationReport& r) {
    return {{"tau_p", r.tau_p}, {"tau_c", r.tau_c}, {"tau_o", r.tau_o}, {"benchmark_seconds", r.benchmark.seconds}};
}

json to_json(const ComparisonTable& table, const ScenarioSet& set) {
    json j;
    j["benchmark_computed"] = table.benchmark.computed;
    j["worst_case"] = to_json(table.worst_case, set);
    j["rows"] = json::array();
    for (const auto& row : table.rows) {
        json r{{"method", row.method}, {"ok", row.ok}};
        if (!row.ok) r["error"] = row.error;
        r["K"] = row.reduction.K();
        r["kappa"] = row.kappa;
        r["og"] = og_json(row.og);
        r["og_bound"] = number(row.og_bound);
        r["mean_components"] = components_json(row.mean_components);
        r["reduction"] = to_json(row.reduction, &set);
        j["rows"].push_back(r);
    }
    return j;
}

json timings_json(const ComparisonTable& table) {
    json j = json::array();
    for (const auto& row : table.rows)
        j.push_back({{"method", row.method}, {"tau_p", row.tau_p}, {"tau_c", row.tau_c}, {"tau_o", row.tau_o}});
    return j;
}

std::string comparison_csv(const ComparisonTable& table) {
    std::set<std::string> names;
    for (const auto& row : table.rows)
        for (const auto& [k, v] : row.mean_components) names.insert(k);
    std::string out = "method,ok,K,kappa,og_abs,og_pct,og_bound,reduced_value";
    for (const auto& n : names) out += ",mean_" + n;
    out += '\n';
    for (const auto& row : table.rows) {
        out += row.method + "," + (row.ok ? "1" : "0") + "," + std::to_string(row.reduction.K()) + "," +
               std::to_string(row.kappa) + "," + csv_number(row.og.og_abs) + "," +
               (row.og.og_pct ? csv_number(*row.og.og_pct) : std::string()) + "," + csv_number(row.og_bound) + "," +
               csv_number(row.og.reduced_value);
        for (const auto& n : names) {
            auto it = row.mean_components.find(n);
            out += "," + (it == row.mean_components.end() ? std::string() : csv_number(it->second));
        }
        out += '\n';
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "beta,K,spdd,pddbi,spdd_normalized,pddbi_normalized\n";
    for (const auto& r : rows)
        out += csv_number(r.beta) + "," + std::to_string(r.K) + "," + csv_number(r.spdd) + "," + csv_number(r.pddbi) +
               "," + csv_number(r.spdd_normalized) + "," + csv_number(r.pddbi_normalized) + "\n";
    return out;
}

std::string og_vs_k_csv(const std::vector<OgVsKRow>& rows) {
    std::string out = "method,K,kappa,og_abs,og_pct,reduced_value,benchmark_value\n";
    for (const auto& r : rows)
        out += r.method + "," + std::to_string(r.K) + "," + std::to_string(r.kappa) + "," + csv_number(r.og.og_abs) +
               "," + (r.og.og_pct ? csv_number(*r.og.og_pct) : std::string()) + "," +
               csv_number(r.og.reduced_value) + "," + csv_number(r.og.benchmark_value) + "\n";
    return out;
}

}  // namespace pdsr
