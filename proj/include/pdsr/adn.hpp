#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdsr/tsso.hpp"

namespace pdsr {

struct AdnLine {
    int from = 0;
    int to = 0;
    double r = 0.0;  // p.u.
    double x = 0.0;  // p.u.
};

/// A stochastic RES unit or load fed by a scenario source.
struct AdnDevice {
    std::string source;
    int node = 0;
    double q_ratio = 0.0;  // reactive/active ratio, loads only
};

struct AdnFixedLoad {
    int node = 0;
    std::vector<double> profile;  // MW per period
    double q_ratio = 0.0;
};

struct AdnStorage {
    int node = 0;
    double p_max = 0.4;   // MW
    double e_max = 0.8;   // MWh
    double soc_min = 0.1;
    double soc_max = 0.9;
    double soc0 = 0.5;
    double eta_c = 0.95;
    double eta_d = 0.95;
    double price = 0.0;   // $ per MWh of procured capacity
};

/// Radial distribution feeder with LinDistFlow network equations.
struct AdnConfig {
    int num_nodes = 0;
    int root = 0;
    std::vector<AdnLine> lines;
    double s_base_mva = 1.0;
    double v2_min = 0.81;
    double v2_max = 1.21;
    int horizon = 0;
    double dt_hours = 1.0;
    std::string price_source = "price";
    std::vector<AdnDevice> res;
    std::vector<AdnDevice> loads;
    std::vector<AdnFixedLoad> fixed_loads;
    std::vector<AdnStorage> storage;
    double trade_max = 10.0;  // MW
    double price_up = 1.3;
    double price_down = 0.7;
    double curtailment_penalty = 280.0;
    double shedding_penalty = 1000.0;

    /// Throws ConfigError on an invalid configuration or a non-radial network.
    void validate() const;
};

nlohmann::json to_json(const AdnConfig& config);
AdnConfig adn_config_from_json(const nlohmann::json& j);

/// First-stage layout: day-ahead trading P^T_t for every period, then the
/// procured capacity E_j of every storage unit.
class AdnProblem : public TssoProblem {
public:
    explicit AdnProblem(AdnConfig config);

    std::string name() const override { return "adn"; }
    int num_first_stage() const override;
    void check_compatible(const ScenarioSet& set) const override;
    CompiledModel compile(const ScenarioSet& set, std::span<const int> members, std::span<const double> weights,
                          const FirstStageDecision* fixed) const override;
    nlohmann::json config_json() const override { return to_json(config_); }

    const AdnConfig& config() const { return config_; }

private:
    AdnConfig config_;
    std::vector<int> parent_;      // parent node, -1 at the root
    std::vector<int> parent_line_;  // index into config_.lines
    std::vector<std::vector<int>> child_lines_;
};

struct AdnDeskInstance {
    AdnConfig config;
    ScenarioSet scenarios;
    std::vector<bool> bad;  // generator ground truth for worst-case scenarios
};

/// Deterministic small feeder with 1 WT, 1 PV, 2 stochastic loads and 1
/// storage unit. round(n * bad_fraction) scenarios carry a load surge at the
/// far end of the feeder that the network cannot serve without storage.
AdnDeskInstance make_desk_instance(std::uint64_t seed, int n, int horizon = 12, int buses = 6,
                                   double bad_fraction = 0.1);

}  // namespace pdsr
