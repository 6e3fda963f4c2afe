#include "pdsr/clustering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "pdsr/error.hpp"
#include "pdsr/evaluation.hpp"
#include "pdsr/milp.hpp"
#include "pdsr/parallel.hpp"

namespace pdsr {

PddMatrix compute_pdd(const Eigen::MatrixXd& F, double gap_tol, double mu, const ScenarioSet* scenarios) {
    const int n = static_cast<int>(F.rows());
    if (F.cols() != n) throw ShapeError("problem-space matrix must be square");
    if (mu < 0.0) throw ValidationError("mu must be non-negative");
    if (mu > 0.0) {
        if (!scenarios) throw ValidationError("the regularized distance needs the scenario set");
        if (scenarios->size() != n) throw ShapeError("scenario count does not match the matrix");
    }
    PddMatrix out;
    out.mu = mu;
    out.d = Eigen::MatrixXd::Zero(n, n);
    out.clamp_tolerance = 4.0 * gap_tol * (n > 0 ? F.cwiseAbs().maxCoeff() : 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double v = (F(j, i) - F(i, i)) + (F(i, j) - F(j, j));
            if (mu > 0.0) v += mu * scenarios->distance(i, j);
            if (v < 0.0) {
                if (v < -out.clamp_tolerance)
                    throw ValidationError("problem-driven distance between scenarios " + std::to_string(i) + " and " +
                                          std::to_string(j) + " is " + format_double(v) +
                                          "; a subproblem was not solved to the claimed gap");
                v = 0.0;
            }
            out.d(i, j) = v;
            out.d(j, i) = v;
        }
    }
    return out;
}

PddMatrix compute_pdd(const ProblemSpaceMatrix& m, double mu, const ScenarioSet* scenarios) {
    return compute_pdd(m.F, m.gap_tol, mu, scenarios);
}

std::vector<int> ReductionResult::members(int k) const {
    std::vector<int> out;
    const int rep = representatives.at(k);
    for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
        if (assignment[i] == rep) out.push_back(i);
    return out;
}

int ReductionResult::position_of(int representative) const {
    auto it = std::lower_bound(representatives.begin(), representatives.end(), representative);
    if (it == representatives.end() || *it != representative)
        throw ValidationError("scenario " + std::to_string(representative) + " is not a representative");
    return static_cast<int>(it - representatives.begin());
}

ReductionResult make_reduction(std::vector<int> assignment, std::span<const double> gamma, std::string method) {
    const int n = static_cast<int>(assignment.size());
    if (static_cast<int>(gamma.size()) != n) throw ShapeError("assignment and probability lengths differ");
    ReductionResult r;
    r.method = std::move(method);
    for (int i = 0; i < n; ++i) {
        const int a = assignment[i];
        if (a < 0 || a >= n) throw ValidationError("assignment refers to an unknown scenario");
        if (assignment[a] != a) throw ValidationError("a representative must represent itself");
        if (a == i) r.representatives.push_back(i);
    }
    r.weights.assign(r.representatives.size(), 0.0);
    r.assignment = std::move(assignment);
    for (int i = 0; i < n; ++i) r.weights[r.position_of(r.assignment[i])] += gamma[i];
    return r;
}

void validate_reduction(const ReductionResult& r, std::span<const double> gamma) {
    const int n = static_cast<int>(gamma.size());
    if (static_cast<int>(r.assignment.size()) != n) throw ValidationError("assignment does not cover every scenario");
    if (r.representatives.empty()) throw ValidationError("reduction has no representatives");
    if (!std::is_sorted(r.representatives.begin(), r.representatives.end()))
        throw ValidationError("representatives must be sorted");
    if (r.weights.size() != r.representatives.size()) throw ValidationError("weights and representatives differ in length");
    std::vector<double> mass(r.representatives.size(), 0.0);
    for (int i = 0; i < n; ++i) mass[r.position_of(r.assignment[i])] += gamma[i];
    double total = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) {
        const int rep = r.representatives[k];
        if (r.assignment[rep] != rep) throw ValidationError("a representative is assigned elsewhere");
        if (std::abs(mass[k] - r.weights[k]) > 1e-9) throw ValidationError("weight differs from cluster mass");
        total += r.weights[k];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("representative weights do not sum to 1");
}

ReductionResult solve_clustering(const PddMatrix& pdd, std::span<const double> gamma, double beta,
                                 std::optional<int> fixed_K, const ClusteringOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const int n = pdd.size();
    if (n < 1) throw ValidationError("clustering needs at least one scenario");
    if (static_cast<int>(gamma.size()) != n) throw ShapeError("probability count does not match the distance matrix");
    if (fixed_K && (*fixed_K < 1 || *fixed_K > n)) throw ValidationError("fixed K must lie in [1, N]");
    if (!fixed_K && !(beta >= 0.0)) throw ValidationError("beta must be non-negative");

    milp::Model m;
    std::vector<int> v(static_cast<std::size_t>(n) * n), u(n), l(n);
    for (int j = 0; j < n; ++j) u[j] = m.add_binary("u[" + std::to_string(j) + "]");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            v[i * n + j] = m.add_binary("v[" + std::to_string(i) + "," + std::to_string(j) + "]");
    for (int j = 0; j < n; ++j) {
        l[j] = m.add_variable("l[" + std::to_string(j) + "]", 0.0, milp::inf);
        m.add_objective_term(l[j], 1.0);
        if (!fixed_K) m.add_objective_term(u[j], beta / n);
    }
    for (int j = 0; j < n; ++j) {
        std::vector<milp::Term> row;
        for (int i = 0; i < n; ++i)
            if (gamma[i] * pdd.d(i, j) != 0.0) row.push_back({v[i * n + j], gamma[i] * pdd.d(i, j)});
        row.push_back({l[j], -1.0});
        m.add_constraint("cost[" + std::to_string(j) + "]", row, milp::Relation::less_equal, 0.0);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            m.add_constraint("open[" + std::to_string(i) + "," + std::to_string(j) + "]",
                             {{v[i * n + j], 1.0}, {u[j], -1.0}}, milp::Relation::less_equal, 0.0);
        }
    for (int j = 0; j < n; ++j)
        m.add_constraint("self[" + std::to_string(j) + "]", {{v[j * n + j], 1.0}, {u[j], -1.0}}, milp::Relation::equal,
                         0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<milp::Term> row;
        for (int j = 0; j < n; ++j) row.push_back({v[i * n + j], 1.0});
        m.add_constraint("assign[" + std::to_string(i) + "]", row, milp::Relation::equal, 1.0);
    }
    if (fixed_K) {
        std::vector<milp::Term> row;
        for (int j = 0; j < n; ++j) row.push_back({u[j], 1.0});
        m.add_constraint("count", row, milp::Relation::equal, *fixed_K);
    }

    milp::MilpOptions opt;
    opt.gap_tol = options.gap_tol;
    opt.time_limit = options.time_limit;
    const milp::Solution sol = milp::solve_milp(m, opt);
    if (!sol.has_values()) throw SolverError(std::string("clustering MILP ended with status ") + milp::to_string(sol.status));

    std::vector<int> assignment(n, -1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (sol.values[v[i * n + j]] > 0.5) assignment[i] = j;
    ReductionResult r = make_reduction(std::move(assignment), gamma, "pdsr");
    r.beta = fixed_K ? 0.0 : beta;
    r.fixed_K = fixed_K;
    r.objective = sol.objective;
    r.mip_gap = sol.mip_gap;
    r.spdd = spdd(pdd, gamma, r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<SweepRow> sweep_beta(const PddMatrix& d, std::span<const double> gamma, std::span<const double> betas,
                                 int workers, const ClusteringOptions& options) {
    if (betas.empty()) throw ValidationError("beta sweep needs at least one value");
    std::vector<SweepRow> rows(betas.size());
    parallel_for(betas.size(), workers, [&](std::size_t k) {
        const ReductionResult r = solve_clustering(d, gamma, betas[k], std::nullopt, options);
        rows[k].beta = betas[k];
        rows[k].K = r.K();
        rows[k].spdd = r.spdd;
        rows[k].pddbi = r.K() >= 2 ? pddbi(d, gamma, r) : std::numeric_limits<double>::quiet_NaN();
    });
    auto normalize = [&](auto get, auto set) {
        double lo = milp::inf, hi = -milp::inf;
        for (const auto& row : rows) {
            const double v = get(row);
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (auto& row : rows) {
            const double v = get(row);
            if (std::isnan(v))
                set(row, v);
            else
                set(row, hi > lo ? (v - lo) / (hi - lo) : 0.0);
        }
    };
    normalize([](const SweepRow& r) { return r.spdd; }, [](SweepRow& r, double v) { r.spdd_normalized = v; });
    normalize([](const SweepRow& r) { return r.pddbi; }, [](SweepRow& r, double v) { r.pddbi_normalized = v; });
    return rows;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw ValidationError("log range needs 0 < lo <= hi and count >= 1");
    if (count == 1) return {lo};
    std::vector<double> out;
    const double a = std::log10(lo), b = std::log10(hi);
    for (int k = 0; k < count; ++k) out.push_back(std::pow(10.0, a + (b - a) * k / (count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

nlohmann::json to_json(const ReductionResult& r, const ScenarioSet* set) {
    nlohmann::json j;
    j["method"] = r.method;
    j["K"] = r.K();
    if (r.fixed_K)
        j["fixed_K"] = *r.fixed_K;
    else
        j["beta"] = r.beta;
    j["representatives"] = r.representatives;
    if (set) {
        std::vector<std::string> ids;
        for (int rep : r.representatives) ids.push_back(set->scenario(rep).id);
        j["representative_ids"] = ids;
    }
    j["weights"] = r.weights;
    j["assignment"] = r.assignment;
    j["spdd"] = r.spdd;
    j["objective"] = r.objective;
    j["mip_gap"] = r.mip_gap;
    return j;
}

ReductionResult reduction_from_json(const nlohmann::json& j) {
    try {
        ReductionResult r;
        r.method = j.at("method").get<std::string>();
        r.representatives = j.at("representatives").get<std::vector<int>>();
        r.weights = j.at("weights").get<std::vector<double>>();
        r.assignment = j.at("assignment").get<std::vector<int>>();
        if (j.contains("fixed_K")) r.fixed_K = j.at("fixed_K").get<int>();
        r.beta = j.value("beta", 0.0);
        r.spdd = j.value("spdd", 0.0);
        r.objective = j.value("objective", 0.0);
        r.mip_gap = j.value("mip_gap", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("reduction JSON: ") + e.what());
    }
}

}  // namespace pdsr
