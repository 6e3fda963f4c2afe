#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdsr/clustering.hpp"
#include "pdsr/projection.hpp"
#include "pdsr/tsso.hpp"

namespace pdsr {

/// Probability-weighted distance from every scenario to its representative,
/// recomputed from the assignment.
double spdd(const PddMatrix& d, std::span<const double> gamma, const ReductionResult& r);

/// Davies-Bouldin style index on problem-driven distances. Requires K >= 2.
double pddbi(const PddMatrix& d, std::span<const double> gamma, const ReductionResult& r);

/// The first-stage decision of the full stochastic program and its cost in
/// every scenario.
struct Benchmark {
    bool computed = false;
    FirstStageDecision decision;
    double solver_objective = 0.0;
    std::vector<double> per_scenario;  // F(z_xi, xi_i)
    std::vector<std::map<std::string, double>> components;
    double value = 0.0;                // sum_i gamma_i per_scenario[i]
    double seconds = 0.0;
};

/// Solves the full program. With a finite time limit that expires before an
/// incumbent exists, returns computed = false.
Benchmark solve_benchmark(const TssoProblem& problem, const ScenarioSet& set, const SolveOptions& options = {},
                          int workers = 1);

/// The reduced program on the representatives and its first-stage decision
/// evaluated on every original scenario.
struct ReducedEvaluation {
    FirstStageDecision decision;
    double reduced_objective = 0.0;
    std::vector<double> per_scenario;  // F(z_zeta, xi_i)
    std::vector<std::map<std::string, double>> components;
    double value = 0.0;                // F(z_zeta, xi)
    double seconds = 0.0;
};

ReducedEvaluation evaluate_reduction(const TssoProblem& problem, const ScenarioSet& set, const ReductionResult& r,
                                     const SolveOptions& options = {}, int workers = 1);

struct OptimalityGap {
    double og_abs = 0.0;
    std::optional<double> og_pct;  // percent; empty when the benchmark is missing or near zero
    double reduced_value = 0.0;
    double benchmark_value = 0.0;
};

OptimalityGap optimality_gap(const ReducedEvaluation& reduced, const Benchmark& benchmark);

OptimalityGap optimality_gap(const TssoProblem& problem, const ScenarioSet& set, const ReductionResult& r,
                             const Benchmark& benchmark, const SolveOptions& options = {}, int workers = 1);

/// Computable upper bound on OG from per-scenario deviations to each
/// representative under both first-stage decisions.
double og_upper_bound(const ReductionResult& r, std::span<const double> gamma, const ReducedEvaluation& reduced,
                      const Benchmark& benchmark);

/// SE_k = OG% without representative k (remaining weights renormalized)
/// minus OG% with all representatives. Keyed by representative scenario index.
std::map<int, double> scenario_effectiveness(const TssoProblem& problem, const ScenarioSet& set,
                                             const ReductionResult& r, const Benchmark& benchmark,
                                             const SolveOptions& options = {}, int workers = 1,
                                             std::optional<double> base_og_pct = std::nullopt);

enum class JumpRule { largest, lowest };

struct WorstCaseOptions {
    double bound = 2.0;
    /// Divide second differences by the median first difference.
    bool normalized = true;
    /// Which super-threshold jump separates the flagged tail.
    JumpRule rule = JumpRule::largest;
};

struct WorstCaseResult {
    std::vector<double> sigma;  // column sums of F per scenario
    std::vector<int> order;     // scenario indices sorted by sigma
    std::vector<double> rho;    // second differences along `order`, length N-2
    std::vector<bool> flags;    // per scenario
    int threshold_position = -1;  // first flagged position in `order`, -1 if none

    int count() const;
};

WorstCaseResult detect_worst_case(const Eigen::MatrixXd& F, const WorstCaseOptions& options = {});

/// Number of flagged scenarios among the representatives.
int captured_worst_cases(const WorstCaseResult& w, const ReductionResult& r);

struct EvaluationReport {
    std::string method;
    int K = 0;
    double spdd = 0.0;
    std::optional<double> pddbi;
    OptimalityGap og;
    double og_bound = 0.0;
    std::map<int, double> se;
    WorstCaseResult worst_case;
    int kappa = 0;
    ReducedEvaluation reduced;
    Benchmark benchmark;
    double tau_p = 0.0;
    double tau_c = 0.0;
    double tau_o = 0.0;
};

struct EvaluateOptions {
    SolveOptions solve;
    WorstCaseOptions worst_case;
    int workers = 1;
    bool scenario_effectiveness = true;
};

/// Every index for one reduction. `benchmark` may be precomputed; otherwise
/// it is solved here.
EvaluationReport evaluate(const TssoProblem& problem, const ScenarioSet& set, const ProblemSpaceMatrix& F,
                          const PddMatrix& d, const ReductionResult& r, const EvaluateOptions& options = {},
                          const Benchmark* benchmark = nullptr);

/// Reduction method names accepted by compare_methods.
const std::vector<std::string>& known_methods();

struct CompareOptions {
    int K = 4;
    double mu = 0.0;
    std::uint64_t seed = 1;
    int restarts = 10;
    EvaluateOptions evaluate;
    ClusteringOptions clustering;
};

struct MethodRow {
    std::string method;
    bool ok = true;
    std::string error;
    ReductionResult reduction;
    int kappa = 0;
    OptimalityGap og;
    double og_bound = 0.0;
    std::map<std::string, double> mean_components;
    double tau_p = 0.0;
    double tau_c = 0.0;
    double tau_o = 0.0;
};

struct ComparisonTable {
    Benchmark benchmark;
    WorstCaseResult worst_case;
    std::vector<MethodRow> rows;  // benchmark row first, then methods in request order
};

ComparisonTable compare_methods(const TssoProblem& problem, const ScenarioSet& set, const ProblemSpaceMatrix& F,
                                const std::vector<std::string>& methods, const CompareOptions& options,
                                const Benchmark* benchmark = nullptr);

/// Probability-weighted mean of each named component.
std::map<std::string, double> mean_components(const std::vector<std::map<std::string, double>>& components,
                                              std::span<const double> gamma);

}  // namespace pdsr
