#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdsr/milp.hpp"
#include "pdsr/scenario.hpp"

namespace pdsr {

struct FirstStageDecision {
    std::vector<double> values;
    double objective_at_source = 0.0;
    std::optional<int> source_scenario;
};

/// A two-stage program compiled for a list of member scenarios.
struct CompiledModel {
    milp::Model model;
    /// Indices of the first-stage variables (empty when compiled with fixed z).
    std::vector<int> first_stage;
    /// F(z, xi_k) for each member, as an expression over the model variables.
    std::vector<milp::LinExpr> member_cost;
    /// Named cost or sizing components per member, used for reporting.
    std::vector<std::map<std::string, milp::LinExpr>> member_components;
};

class TssoProblem {
public:
    virtual ~TssoProblem() = default;

    virtual std::string name() const = 0;
    virtual int num_first_stage() const = 0;
    /// Throws ConfigError when the scenario sources do not fit the problem.
    virtual void check_compatible(const ScenarioSet& set) const = 0;
    /// Compiles sum_k weights[k] * F(z, set[members[k]]). With `fixed`, the
    /// first-stage decision is substituted as constants.
    virtual CompiledModel compile(const ScenarioSet& set, std::span<const int> members,
                                  std::span<const double> weights, const FirstStageDecision* fixed) const = 0;
    /// Canonical configuration, used to fingerprint cached results.
    virtual nlohmann::json config_json() const = 0;
};

struct SolveOptions {
    /// Relative MIP gap for multi-scenario solves.
    double gap_tol = 1e-4;
    /// Relative MIP gap for single-scenario solves and fixed-z evaluations.
    /// Kept tight so F(z, xi) is reproducible as a function of (z, xi).
    double recourse_gap_tol = 1e-9;
    double time_limit = milp::inf;
    /// Among optimal first-stage decisions of a scenario-specific solve,
    /// prefer the one with the lowest total cost over the whole set. Only
    /// applied for sets of at most `tie_break_max_n` scenarios.
    bool tie_break = false;
    int tie_break_max_n = 20;
};

struct StochasticSolution {
    FirstStageDecision decision;
    double objective = 0.0;
    milp::Status status = milp::Status::optimal;
    double mip_gap = 0.0;
    std::int64_t node_count = 0;
    bool tie_break_applied = false;
};

/// Monolithic solve of sum_k weights[k] F(z, set[members[k]]).
StochasticSolution solve_stochastic(const TssoProblem& problem, const ScenarioSet& set, std::span<const int> members,
                                    std::span<const double> weights, const SolveOptions& options = {});

/// The full set weighted by its probabilities.
StochasticSolution solve_stochastic(const TssoProblem& problem, const ScenarioSet& set,
                                    const SolveOptions& options = {});

StochasticSolution solve_scenario_specific(const TssoProblem& problem, const ScenarioSet& set, int index,
                                           const SolveOptions& options = {});

struct FixedEvaluation {
    double value = 0.0;
    std::map<std::string, double> components;
};

/// F(z, xi_j) with z fixed: first-stage cost plus the optimal recourse cost.
FixedEvaluation evaluate_detailed(const TssoProblem& problem, const FirstStageDecision& z, const ScenarioSet& set,
                                  int index, const SolveOptions& options = {});

double evaluate_with_fixed_first_stage(const TssoProblem& problem, const FirstStageDecision& z,
                                       const ScenarioSet& set, int index, const SolveOptions& options = {});

}  // namespace pdsr
