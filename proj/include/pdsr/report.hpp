#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "pdsr/evaluation.hpp"

namespace pdsr {

// Wall-clock timings are kept out of these documents so that reruns on the
// same inputs produce identical bytes; timings_json() collects them instead.

nlohmann::json to_json(const WorstCaseResult& w, const ScenarioSet& set);
nlohmann::json to_json(const EvaluationReport& r, const ScenarioSet& set);
nlohmann::json timings_json(const EvaluationReport& r);

nlohmann::json to_json(const ComparisonTable& table, const ScenarioSet& set);
nlohmann::json timings_json(const ComparisonTable& table);
/// One line per row: method, ok, K, kappa, og_abs, og_pct, og_bound,
/// reduced_value, then the mean components in name order.
std::string comparison_csv(const ComparisonTable& table);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct OgVsKRow {
    std::string method;
    int K = 0;
    OptimalityGap og;
    int kappa = 0;
};

std::string og_vs_k_csv(const std::vector<OgVsKRow>& rows);

/// Shortest round-trip text, or an empty field for NaN.
std::string csv_number(double v);

}  // namespace pdsr
