#include "pdsr/tsso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdsr/error.hpp"

namespace pdsr {

namespace {

milp::Solution run(const CompiledModel& cm, double gap_tol, double time_limit, const std::string& what) {
    milp::MilpOptions opt;
    opt.gap_tol = gap_tol;
    opt.time_limit = time_limit;
    milp::Solution sol = milp::solve_milp(cm.model, opt);
    switch (sol.status) {
        case milp::Status::infeasible:
            throw RecourseError(what + " is infeasible; the problem configuration breaks complete recourse");
        case milp::Status::unbounded: throw SolverError(what + " is unbounded");
        case milp::Status::gap_limit:
            if (!sol.has_values()) throw SolverError(what + " hit the time limit without a feasible point");
            break;
        case milp::Status::optimal: break;
    }
    return sol;
}

FirstStageDecision extract(const CompiledModel& cm, const milp::Solution& sol) {
    FirstStageDecision z;
    for (int var : cm.first_stage) {
        const auto& v = cm.model.variable(var);
        z.values.push_back(std::clamp(sol.values[var], v.lower, v.upper) + 0.0);  // no negative zero
    }
    return z;
}

}  // namespace

StochasticSolution solve_stochastic(const TssoProblem& problem, const ScenarioSet& set, std::span<const int> members,
                                    std::span<const double> weights, const SolveOptions& options) {
    if (members.empty()) throw ValidationError("stochastic solve needs at least one scenario");
    if (members.size() != weights.size()) throw ShapeError("member and weight counts differ");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("scenario weights must sum to 1");
    for (double w : weights)
        if (!(w > 0.0)) throw ValidationError("scenario weights must be positive");
    problem.check_compatible(set);

    const double gap = members.size() == 1 ? options.recourse_gap_tol : options.gap_tol;
    const CompiledModel cm = problem.compile(set, members, weights, nullptr);
    const milp::Solution sol = run(cm, gap, options.time_limit, problem.name() + " stochastic program");
    StochasticSolution out;
    out.decision = extract(cm, sol);
    out.decision.objective_at_source = sol.objective;
    if (members.size() == 1) out.decision.source_scenario = members[0];
    out.objective = sol.objective;
    out.status = sol.status;
    out.mip_gap = sol.mip_gap;
    out.node_count = sol.node_count;
    return out;
}

StochasticSolution solve_stochastic(const TssoProblem& problem, const ScenarioSet& set, const SolveOptions& options) {
    std::vector<int> members(set.size());
    std::iota(members.begin(), members.end(), 0);
    return solve_stochastic(problem, set, members, set.probabilities(), options);
}

StochasticSolution solve_scenario_specific(const TssoProblem& problem, const ScenarioSet& set, int index,
                                           const SolveOptions& options) {
    if (index < 0 || index >= set.size()) throw ValidationError("scenario index out of range");
    const int member[] = {index};
    const double weight[] = {1.0};
    StochasticSolution base = solve_stochastic(problem, set, member, weight, options);
    if (!options.tie_break || set.size() < 2 || set.size() > options.tie_break_max_n) return base;

    // Second pass: keep xi_index at its optimum and minimize the uniform sum
    // over the whole set.
    const int n = set.size();
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    const std::vector<double> uniform(n, 1.0 / n);
    CompiledModel cm = problem.compile(set, all, uniform, nullptr);
    const double slack = options.recourse_gap_tol * std::abs(base.objective) + 1e-7;
    cm.model.add_constraint("tie_break_keep_optimum", cm.member_cost[index], milp::Relation::less_equal,
                            base.objective + slack);
    const milp::Solution sol = run(cm, options.gap_tol, options.time_limit, problem.name() + " tie-break program");
    StochasticSolution out = base;
    out.decision = extract(cm, sol);
    out.decision.source_scenario = index;
    out.objective = evaluate_with_fixed_first_stage(problem, out.decision, set, index, options);
    out.decision.objective_at_source = out.objective;
    out.tie_break_applied = true;
    return out;
}

FixedEvaluation evaluate_detailed(const TssoProblem& problem, const FirstStageDecision& z, const ScenarioSet& set,
                                  int index, const SolveOptions& options) {
    if (index < 0 || index >= set.size()) throw ValidationError("scenario index out of range");
    if (static_cast<int>(z.values.size()) != problem.num_first_stage())
        throw ShapeError("first-stage decision has the wrong length");
    const int member[] = {index};
    const double weight[] = {1.0};
    const CompiledModel cm = problem.compile(set, member, weight, &z);
    const milp::Solution sol = run(cm, options.recourse_gap_tol, options.time_limit,
                                   problem.name() + " recourse for scenario " + set.scenario(index).id);
    FixedEvaluation out;
    out.value = sol.objective;
    for (const auto& [name, expr] : cm.member_components[0]) out.components[name] = expr.evaluate(sol.values);
    return out;
}

double evaluate_with_fixed_first_stage(const TssoProblem& problem, const FirstStageDecision& z,
                                       const ScenarioSet& set, int index, const SolveOptions& options) {
    return evaluate_detailed(problem, z, set, index, options).value;
}

}  // namespace pdsr
