#include "pdsr/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "pdsr/baselines.hpp"
#include "pdsr/error.hpp"
#include "pdsr/parallel.hpp"

namespace pdsr {

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Evaluated {
    std::vector<double> values;
    std::vector<std::map<std::string, double>> components;
    double weighted = 0.0;
};

Evaluated evaluate_everywhere(const TssoProblem& problem, const FirstStageDecision& z, const ScenarioSet& set,
                              const SolveOptions& options, int workers) {
    const int n = set.size();
    Evaluated out;
    out.values.resize(n);
    out.components.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        FixedEvaluation e = evaluate_detailed(problem, z, set, static_cast<int>(i), options);
        out.values[i] = e.value;
        out.components[i] = std::move(e.components);
    });
    const auto& gamma = set.probabilities();
    for (int i = 0; i < n; ++i) out.weighted += gamma[i] * out.values[i];
    return out;
}

std::optional<double> percent(double og_abs, double benchmark_value) {
    if (std::isnan(og_abs) || std::abs(benchmark_value) < 1e-6) return std::nullopt;
    return 100.0 * og_abs / std::abs(benchmark_value);
}

ReductionResult identity_reduction(const ScenarioSet& set) {
    std::vector<int> a(set.size());
    std::iota(a.begin(), a.end(), 0);
    ReductionResult r = make_reduction(std::move(a), set.probabilities(), "benchmark");
    r.fixed_K = r.K();
    return r;
}

}  // namespace

double spdd(const PddMatrix& d, std::span<const double> gamma, const ReductionResult& r) {
    if (static_cast<int>(gamma.size()) != d.size() || static_cast<int>(r.assignment.size()) != d.size())
        throw ShapeError("reduction does not match the distance matrix");
    double total = 0.0;
    for (int i = 0; i < d.size(); ++i) total += gamma[i] * d.d(r.assignment[i], i);
    return total;
}

double pddbi(const PddMatrix& d, std::span<const double> gamma, const ReductionResult& r) {
    const int K = r.K();
    if (K < 2) throw ValidationError("PDDBI is undefined for fewer than two clusters");
    if (static_cast<int>(gamma.size()) != d.size() || static_cast<int>(r.assignment.size()) != d.size())
        throw ShapeError("reduction does not match the distance matrix");
    std::vector<double> spread(K, 0.0), mass(K, 0.0);
    for (int i = 0; i < d.size(); ++i) {
        const int k = r.position_of(r.assignment[i]);
        spread[k] += gamma[i] * d.d(r.assignment[i], i);
        mass[k] += gamma[i];
    }
    for (int k = 0; k < K; ++k) spread[k] /= mass[k];
    double total = 0.0;
    for (int m = 0; m < K; ++m) {
        double worst = 0.0;
        for (int n = 0; n < K; ++n) {
            if (n == m) continue;
            const double sep = std::max(d.d(r.representatives[m], r.representatives[n]), 1e-12);
            worst = std::max(worst, (spread[m] + spread[n]) / sep);
        }
        total += worst;
    }
    return total / K;
}

Benchmark solve_benchmark(const TssoProblem& problem, const ScenarioSet& set, const SolveOptions& options,
                          int workers) {
    const auto start = Clock::now();
    Benchmark b;
    StochasticSolution s;
    try {
        s = solve_stochastic(problem, set, options);
    } catch (const SolverError&) {
        if (std::isfinite(options.time_limit)) {
            b.seconds = seconds_since(start);
            return b;
        }
        throw;
    }
    b.decision = std::move(s.decision);
    b.solver_objective = s.objective;
    Evaluated e = evaluate_everywhere(problem, b.decision, set, options, workers);
    b.per_scenario = std::move(e.values);
    b.components = std::move(e.components);
    b.value = e.weighted;
    b.computed = true;
    b.seconds = seconds_since(start);
    return b;
}

ReducedEvaluation evaluate_reduction(const TssoProblem& problem, const ScenarioSet& set, const ReductionResult& r,
                                     const SolveOptions& options, int workers) {
    validate_reduction(r, set.probabilities());
    const auto start = Clock::now();
    const StochasticSolution s = solve_stochastic(problem, set, r.representatives, r.weights, options);
    ReducedEvaluation out;
    out.decision = s.decision;
    out.reduced_objective = s.objective;
    Evaluated e = evaluate_everywhere(problem, out.decision, set, options, workers);
    out.per_scenario = std::move(e.values);
    out.components = std::move(e.components);
    out.value = e.weighted;
    out.seconds = seconds_since(start);
    return out;
}

OptimalityGap optimality_gap(const ReducedEvaluation& reduced, const Benchmark& benchmark) {
    OptimalityGap g;
    g.reduced_value = reduced.value;
    if (!benchmark.computed) {
        g.og_abs = kNaN;
        g.benchmark_value = kNaN;
        return g;
    }
    g.benchmark_value = benchmark.value;
    g.og_abs = reduced.value - benchmark.value;
    g.og_pct = percent(g.og_abs, benchmark.value);
    return g;
}

OptimalityGap optimality_gap(const TssoProblem& problem, const ScenarioSet& set, const ReductionResult& r,
                             const Benchmark& benchmark, const SolveOptions& options, int workers) {
    return optimality_gap(evaluate_reduction(problem, set, r, options, workers), benchmark);
}

double og_upper_bound(const ReductionResult& r, std::span<const double> gamma, const ReducedEvaluation& reduced,
                      const Benchmark& benchmark) {
    if (!benchmark.computed) return kNaN;
    double total = 0.0;
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        const int k = r.assignment[i];
        total += gamma[i] * (std::abs(reduced.per_scenario[i] - reduced.per_scenario[k]) +
                             std::abs(benchmark.per_scenario[i] - benchmark.per_scenario[k]));
    }
    return total;
}

std::map<int, double> scenario_effectiveness(const TssoProblem& problem, const ScenarioSet& set,
                                             const ReductionResult& r, const Benchmark& benchmark,
                                             const SolveOptions& options, int workers,
                                             std::optional<double> base_og_pct) {
    if (r.K() < 2) throw ValidationError("scenario effectiveness needs at least two representatives");
    if (!benchmark.computed) throw ValidationError("scenario effectiveness needs the benchmark solution");
    if (!base_og_pct) base_og_pct = optimality_gap(problem, set, r, benchmark, options, workers).og_pct;
    if (!base_og_pct) throw ValidationError("benchmark objective is too close to zero for a percentage gap");

    const int K = r.K();
    std::vector<double> pct(K);
    parallel_for(K, workers, [&](std::size_t drop) {
        std::vector<int> members;
        std::vector<double> weights;
        double mass = 0.0;
        for (int k = 0; k < K; ++k) {
            if (k == static_cast<int>(drop)) continue;
            members.push_back(r.representatives[k]);
            weights.push_back(r.weights[k]);
            mass += r.weights[k];
        }
        for (double& w : weights) w /= mass;
        const StochasticSolution s = solve_stochastic(problem, set, members, weights, options);
        const Evaluated e = evaluate_everywhere(problem, s.decision, set, options, 1);
        pct[drop] = *percent(e.weighted - benchmark.value, benchmark.value);
    });
    std::map<int, double> se;
    for (int k = 0; k < K; ++k) se[r.representatives[k]] = pct[k] - *base_og_pct;
    return se;
}

int WorstCaseResult::count() const {
    return static_cast<int>(std::count(flags.begin(), flags.end(), true));
}

WorstCaseResult detect_worst_case(const Eigen::MatrixXd& F, const WorstCaseOptions& options) {
    const int n = static_cast<int>(F.rows());
    if (F.cols() != n) throw ShapeError("problem-space matrix must be square");
    if (n < 3) throw ValidationError("worst-case detection needs at least three scenarios");
    WorstCaseResult w;
    w.sigma.resize(n);
    for (int i = 0; i < n; ++i) {
        // Sum in sorted order so sigma does not depend on scenario order.
        std::vector<double> col(F.col(i).data(), F.col(i).data() + n);
        std::sort(col.begin(), col.end());
        w.sigma[i] = std::accumulate(col.begin(), col.end(), 0.0);
    }
    w.order.resize(n);
    std::iota(w.order.begin(), w.order.end(), 0);
    std::stable_sort(w.order.begin(), w.order.end(), [&](int a, int b) { return w.sigma[a] < w.sigma[b]; });
    w.flags.assign(n, false);

    std::vector<double> first(n - 1);
    for (int p = 0; p + 1 < n; ++p) first[p] = w.sigma[w.order[p + 1]] - w.sigma[w.order[p]];
    w.rho.resize(n - 2);
    for (int p = 0; p + 2 < n; ++p) w.rho[p] = first[p + 1] - first[p];

    if (options.normalized) {
        std::vector<double> sorted = first;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        double scale = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        if (!(scale > 0.0)) scale = std::accumulate(first.begin(), first.end(), 0.0) / static_cast<double>(m);
        if (!(scale > 0.0)) {
            std::fill(w.rho.begin(), w.rho.end(), 0.0);
            return w;
        }
        for (double& r : w.rho) r /= scale;
    }

    int jump = -1;
    for (int p = 0; p + 2 < n; ++p) {
        if (!(w.rho[p] > options.bound)) continue;
        if (options.rule == JumpRule::lowest) {
            jump = p;
            break;
        }
        if (jump < 0 || w.rho[p] > w.rho[jump]) jump = p;
    }
    if (jump < 0) return w;
    w.threshold_position = jump + 2;
    for (int p = w.threshold_position; p < n; ++p) w.flags[w.order[p]] = true;
    return w;
}

int captured_worst_cases(const WorstCaseResult& w, const ReductionResult& r) {
    int kappa = 0;
    for (int rep : r.representatives)
        if (rep < static_cast<int>(w.flags.size()) && w.flags[rep]) ++kappa;
    return kappa;
}

std::map<std::string, double> mean_components(const std::vector<std::map<std::string, double>>& components,
                                              std::span<const double> gamma) {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < components.size(); ++i)
        for (const auto& [name, v] : components[i]) out[name] += gamma[i] * v;
    return out;
}

EvaluationReport evaluate(const TssoProblem& problem, const ScenarioSet& set, const ProblemSpaceMatrix& F,
                          const PddMatrix& d, const ReductionResult& r, const EvaluateOptions& options,
                          const Benchmark* benchmark) {
    if (F.size() != set.size() || d.size() != set.size()) throw ShapeError("inputs describe different scenario counts");
    EvaluationReport rep;
    rep.method = r.method;
    rep.K = r.K();
    rep.spdd = spdd(d, set.probabilities(), r);
    if (r.K() >= 2) rep.pddbi = pddbi(d, set.probabilities(), r);
    rep.benchmark = benchmark ? *benchmark : solve_benchmark(problem, set, options.solve, options.workers);
    rep.reduced = evaluate_reduction(problem, set, r, options.solve, options.workers);
    rep.og = optimality_gap(rep.reduced, rep.benchmark);
    rep.og_bound = og_upper_bound(r, set.probabilities(), rep.reduced, rep.benchmark);
    if (options.scenario_effectiveness && r.K() >= 2 && rep.og.og_pct)
        rep.se = scenario_effectiveness(problem, set, r, rep.benchmark, options.solve, options.workers, rep.og.og_pct);
    if (set.size() >= 3) {
        rep.worst_case = detect_worst_case(F.F, options.worst_case);
        rep.kappa = captured_worst_cases(rep.worst_case, r);
    }
    rep.tau_p = F.total_seconds;
    rep.tau_c = r.seconds;
    rep.tau_o = rep.reduced.seconds;
    return rep;
}

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods{"pdsr", "km-e", "kd-e", "hc", "ws"};
    return methods;
}

ComparisonTable compare_methods(const TssoProblem& problem, const ScenarioSet& set, const ProblemSpaceMatrix& F,
                                const std::vector<std::string>& methods, const CompareOptions& options,
                                const Benchmark* benchmark) {
    for (const auto& m : methods)
        if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end())
            throw ConfigError("unknown reduction method '" + m + "'");
    if (F.size() != set.size()) throw ShapeError("problem-space matrix does not match the scenario set");
    const auto& gamma = set.probabilities();
    const EvaluateOptions& eo = options.evaluate;

    ComparisonTable table;
    table.benchmark = benchmark ? *benchmark : solve_benchmark(problem, set, eo.solve, eo.workers);
    if (set.size() >= 3) table.worst_case = detect_worst_case(F.F, eo.worst_case);

    MethodRow bench;
    bench.method = "benchmark";
    bench.ok = table.benchmark.computed;
    if (!bench.ok) bench.error = "benchmark not computed within the time limit";
    bench.reduction = identity_reduction(set);
    bench.kappa = table.worst_case.count();
    bench.og.og_abs = bench.ok ? 0.0 : kNaN;
    if (bench.ok) bench.og.og_pct = 0.0;
    bench.og.reduced_value = bench.og.benchmark_value = bench.ok ? table.benchmark.value : kNaN;
    bench.mean_components = mean_components(table.benchmark.components, gamma);
    bench.tau_o = table.benchmark.seconds;
    table.rows.push_back(std::move(bench));

    for (const auto& method : methods) {
        MethodRow row;
        row.method = method;
        try {
            if (method == "pdsr") {
                const auto start = Clock::now();
                const PddMatrix d = compute_pdd(F, options.mu, &set);
                row.reduction = solve_clustering(d, gamma, 0.0, options.K, options.clustering);
                row.reduction.seconds = seconds_since(start);
                row.tau_p = F.total_seconds;
            } else if (method == "km-e") {
                row.reduction = kmeans_reduce(set, options.K, options.seed, options.restarts, eo.workers);
            } else if (method == "kd-e") {
                row.reduction = kmedoids_reduce(set, options.K, options.seed);
            } else if (method == "hc") {
                row.reduction = hierarchical_reduce(set, options.K);
            } else {
                row.reduction = worst_case_select(set, options.K);
            }
            row.tau_c = row.reduction.seconds;
            const ReducedEvaluation reduced = evaluate_reduction(problem, set, row.reduction, eo.solve, eo.workers);
            row.og = optimality_gap(reduced, table.benchmark);
            row.og_bound = og_upper_bound(row.reduction, gamma, reduced, table.benchmark);
            row.kappa = captured_worst_cases(table.worst_case, row.reduction);
            row.mean_components = mean_components(reduced.components, gamma);
            row.tau_o = reduced.seconds;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace pdsr
