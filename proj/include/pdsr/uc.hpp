#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdsr/tsso.hpp"

namespace pdsr {

struct UcLine {
    int from = 0;
    int to = 0;
    double b = 0.0;  // susceptance, p.u.
};

struct UcGenerator {
    int bus = 0;
    double p_min = 0.0;  // MW
    double p_max = 0.0;  // MW
    double ramp_up = 0.0;    // MW per period
    double ramp_down = 0.0;  // MW per period
    double cost_pg = 0.0;    // $/MWh
    double cost_nl = 0.0;    // $/h while committed
    double cost_on = 0.0;    // $ per start
    double cost_off = 0.0;   // $ per shutdown
    double cost_up = 0.0;    // $/MWh of upward regulation
    double cost_down = 0.0;  // $/MWh of downward regulation
    int min_up = 1;    // periods
    int min_down = 1;  // periods
    bool initially_on = false;
    double p_initial = 0.0;
};

struct UcDevice {
    std::string source;
    int bus = 0;
};

struct UcConfig {
    int num_buses = 0;
    int reference_bus = 0;
    double s_base_mva = 100.0;
    std::vector<UcLine> lines;
    std::vector<UcGenerator> generators;
    std::vector<UcDevice> res;
    std::vector<UcDevice> loads;
    double curtailment_penalty = 280.0;
    double shedding_penalty = 1000.0;
    int horizon = 0;
    double dt_hours = 1.0;
    double angle_max = std::numbers::pi / 3.0;

    void validate() const;
};

nlohmann::json to_json(const UcConfig& config);
UcConfig uc_config_from_json(const nlohmann::json& j);

/// Two-stage unit commitment with DC power flow. First-stage layout: P[g][t]
/// for every generator and period, then u[g][t].
class UcProblem : public TssoProblem {
public:
    explicit UcProblem(UcConfig config);

    std::string name() const override { return "uc"; }
    int num_first_stage() const override;
    void check_compatible(const ScenarioSet& set) const override;
    CompiledModel compile(const ScenarioSet& set, std::span<const int> members, std::span<const double> weights,
                          const FirstStageDecision* fixed) const override;
    nlohmann::json config_json() const override { return to_json(config_); }

    const UcConfig& config() const { return config_; }

private:
    UcConfig config_;
};

struct UcDeskInstance {
    UcConfig config;
    ScenarioSet scenarios;
    std::vector<bool> bad;
};

/// Three buses, a baseload unit and a peaking unit, one wind farm, one PV
/// farm and two stochastic loads. Bad scenarios pair a wind lull with an
/// evening peak that only the peaking unit can cover.
UcDeskInstance make_uc_desk_instance(std::uint64_t seed, int n, int horizon = 6, double bad_fraction = 0.1);

}  // namespace pdsr
