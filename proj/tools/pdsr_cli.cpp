#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "pdsr/adn.hpp"
#include "pdsr/baselines.hpp"
#include "pdsr/clustering.hpp"
#include "pdsr/error.hpp"
#include "pdsr/evaluation.hpp"
#include "pdsr/projection.hpp"
#include "pdsr/report.hpp"
#include "pdsr/uc.hpp"

namespace fs = std::filesystem;
using namespace pdsr;

namespace {

struct RunConfig {
    std::string problem = "adn";
    std::string config;
    std::string scenarios;
    std::string probabilities;
    std::string matrix;
    std::string reduction;
    int workers = 1;
    double gap_tol = 1e-4;
    double cluster_gap_tol = 1e-6;
    double time_limit = milp::inf;
    std::optional<double> beta;
    std::string beta_range;
    std::optional<int> K;
    std::vector<int> Ks{2, 4, 6, 8};
    double mu = 0.0;
    std::string methods = "pdsr,km-e,kd-e,hc,ws";
    std::string out = ".";
    std::uint64_t seed = 1;
    int restarts = 10;
    double bound = 2.0;
    bool raw_rho = false;
    bool lowest_jump = false;
    bool tie_break = false;
    bool no_se = false;
    // generate
    int n = 20;
    int horizon = 0;
    int buses = 6;
    double bad_fraction = 0.1;
};

void add_common(CLI::App* cmd, RunConfig& rc) {
    cmd->add_option("--problem", rc.problem, "adn or uc")->check(CLI::IsMember({"adn", "uc"}));
    cmd->add_option("--config", rc.config, "problem configuration JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--scenarios", rc.scenarios, "scenario CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--probabilities", rc.probabilities, "probability CSV")->check(CLI::ExistingFile);
    cmd->add_option("--workers", rc.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--gap-tol", rc.gap_tol, "relative MIP gap for stochastic programs")->check(CLI::NonNegativeNumber);
    cmd->add_option("--mu", rc.mu, "weight of the scenario-norm term in the distance")->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", rc.out, "output directory");
    cmd->add_option("--seed", rc.seed, "random seed");
    cmd->add_option("--matrix", rc.matrix, "precomputed F.csv")->check(CLI::ExistingFile);
    cmd->add_option("--time-limit", rc.time_limit, "seconds per benchmark solve");
    cmd->add_flag("--tie-break", rc.tie_break, "tie-break scenario-specific optima over the whole set");
}

std::unique_ptr<TssoProblem> load_problem(const RunConfig& rc) {
    const auto j = [&] {
        try {
            return nlohmann::json::parse(read_file(rc.config));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(rc.config + ": " + e.what());
        }
    }();
    if (rc.problem == "adn") return std::make_unique<AdnProblem>(adn_config_from_json(j));
    return std::make_unique<UcProblem>(uc_config_from_json(j));
}

ScenarioSet load_set(const RunConfig& rc) {
    std::optional<fs::path> probs;
    if (!rc.probabilities.empty()) probs = rc.probabilities;
    return load_scenarios(rc.scenarios, probs);
}

SolveOptions solve_options(const RunConfig& rc) {
    SolveOptions o;
    o.gap_tol = rc.gap_tol;
    o.time_limit = rc.time_limit;
    o.tie_break = rc.tie_break;
    return o;
}

ClusteringOptions clustering_options(const RunConfig& rc) {
    ClusteringOptions o;
    o.gap_tol = rc.cluster_gap_tol;
    return o;
}

// Builds F or reuses a cached copy with the same fingerprint. The cache
// lives in $PDSR_CACHE_DIR/<fingerprint>/ when set, else in the output directory.
ProblemSpaceMatrix obtain_matrix(const RunConfig& rc, const TssoProblem& problem, const ScenarioSet& set,
                                 bool copy_to_out) {
    const SolveOptions opts = solve_options(rc);
    const std::string fp = problem_fingerprint(problem, set, opts);
    if (!rc.matrix.empty()) return load_matrix(rc.matrix, fp);

    const char* env = std::getenv("PDSR_CACHE_DIR");
    const fs::path cache = env && *env ? fs::path(env) / fp / "F.csv" : fs::path(rc.out) / "F.csv";
    ProblemSpaceMatrix m;
    bool reused = false;
    if (fs::exists(cache) && fs::exists(meta_path_for(cache))) {
        try {
            m = load_matrix(cache, fp);
            reused = true;
        } catch (const StaleCacheError&) {
            std::cerr << "cache at " << cache << " is stale; rebuilding\n";
        }
    }
    if (reused) {
        std::cerr << "reused problem-space matrix " << cache << "\n";
    } else {
        m = build_problem_space_matrix(problem, set, rc.workers, opts);
        save_matrix(m, cache);
        std::cerr << "built problem-space matrix in " << m.total_seconds << " s\n";
    }
    const fs::path target = fs::path(rc.out) / "F.csv";
    if (copy_to_out && fs::absolute(target) != fs::absolute(cache)) save_matrix(m, target);
    return m;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<double> parse_beta_range(const std::string& spec) {
    double lo = 0, hi = 0;
    int count = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || !in.eof())
        throw ConfigError("--beta-range expects lo:hi:count, got '" + spec + "'");
    return log_spaced(lo, hi, count);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

int cmd_generate(const RunConfig& rc) {
    const fs::path out(rc.out);
    nlohmann::json config;
    std::vector<bool> bad;
    std::optional<ScenarioSet> set;
    if (rc.problem == "adn") {
        auto inst = make_desk_instance(rc.seed, rc.n, rc.horizon > 0 ? rc.horizon : 12, rc.buses, rc.bad_fraction);
        config = to_json(inst.config);
        bad = inst.bad;
        set.emplace(std::move(inst.scenarios));
    } else {
        auto inst = make_uc_desk_instance(rc.seed, rc.n, rc.horizon > 0 ? rc.horizon : 6, rc.bad_fraction);
        config = to_json(inst.config);
        bad = inst.bad;
        set.emplace(std::move(inst.scenarios));
    }
    write_json(out / "config.json", config);
    save_scenarios(*set, out / "scenarios.csv");
    save_probabilities(*set, out / "probabilities.csv");
    std::vector<std::string> bad_ids;
    for (int i = 0; i < set->size(); ++i)
        if (bad[i]) bad_ids.push_back(set->scenario(i).id);
    write_json(out / "bad.json", {{"bad", bad_ids}});
    std::cout << "wrote " << set->size() << " scenarios to " << out << "\n";
    return 0;
}

int cmd_project(const RunConfig& rc) {
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, true);
    std::cout << "tau_p " << m.total_seconds << " s\n";
    return 0;
}

int cmd_cluster(const RunConfig& rc) {
    const int modes = (rc.beta ? 1 : 0) + (rc.beta_range.empty() ? 0 : 1) + (rc.K ? 1 : 0);
    if (modes != 1) throw ConfigError("cluster needs exactly one of --beta, --beta-range, --K");
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, false);
    const PddMatrix d = compute_pdd(m, rc.mu, &set);
    const auto& gamma = set.probabilities();
    ReductionResult r;
    if (rc.K) {
        r = solve_clustering(d, gamma, 0.0, *rc.K, clustering_options(rc));
    } else {
        double beta = rc.beta.value_or(0.0);
        if (!rc.beta_range.empty()) {
            // Pick the beta with the lowest PDDBI among sweep points with K >= 2.
            const auto betas = parse_beta_range(rc.beta_range);
            const auto rows = sweep_beta(d, gamma, betas, rc.workers, clustering_options(rc));
            int best = -1;
            for (int k = 0; k < static_cast<int>(rows.size()); ++k)
                if (rows[k].K >= 2 && (best < 0 || rows[k].pddbi < rows[best].pddbi)) best = k;
            beta = best >= 0 ? rows[best].beta : betas.front();
            std::cerr << "selected beta " << beta << "\n";
        }
        r = solve_clustering(d, gamma, beta, std::nullopt, clustering_options(rc));
    }
    write_json(fs::path(rc.out) / "reduction.json", to_json(r, &set));
    std::cout << "K = " << r.K() << ", SPDD = " << r.spdd << ", tau_c " << r.seconds << " s\n";
    return 0;
}

int cmd_sweep(const RunConfig& rc) {
    if (rc.beta_range.empty()) throw ConfigError("sweep-beta needs --beta-range lo:hi:count");
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, false);
    const PddMatrix d = compute_pdd(m, rc.mu, &set);
    std::vector<double> betas{0.0};
    for (double b : parse_beta_range(rc.beta_range)) betas.push_back(b);
    const auto rows = sweep_beta(d, set.probabilities(), betas, rc.workers, clustering_options(rc));
    write_file(fs::path(rc.out) / "sweep.csv", sweep_csv(rows));
    std::cout << "wrote " << rows.size() << " sweep rows\n";
    return 0;
}

EvaluateOptions evaluate_options(const RunConfig& rc) {
    EvaluateOptions o;
    o.solve = solve_options(rc);
    o.workers = rc.workers;
    o.worst_case.bound = rc.bound;
    o.worst_case.normalized = !rc.raw_rho;
    o.worst_case.rule = rc.lowest_jump ? JumpRule::lowest : JumpRule::largest;
    o.scenario_effectiveness = !rc.no_se;
    return o;
}

int cmd_evaluate(const RunConfig& rc) {
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, false);
    const PddMatrix d = compute_pdd(m, rc.mu, &set);
    const auto j = [&] {
        try {
            return nlohmann::json::parse(read_file(rc.reduction));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(rc.reduction + ": " + e.what());
        }
    }();
    const ReductionResult r = reduction_from_json(j);
    validate_reduction(r, set.probabilities());
    const EvaluationReport rep = evaluate(*problem, set, m, d, r, evaluate_options(rc));
    write_json(fs::path(rc.out) / "report.json", to_json(rep, set));
    write_json(fs::path(rc.out) / "report.timings.json", timings_json(rep));
    std::cout << "OG% " << (rep.og.og_pct ? std::to_string(*rep.og.og_pct) : std::string("n/a")) << ", kappa "
              << rep.kappa << "\n";
    return 0;
}

CompareOptions compare_options(const RunConfig& rc) {
    CompareOptions o;
    o.K = rc.K.value_or(4);
    o.mu = rc.mu;
    o.seed = rc.seed;
    o.restarts = rc.restarts;
    o.evaluate = evaluate_options(rc);
    o.clustering = clustering_options(rc);
    return o;
}

int cmd_compare(const RunConfig& rc) {
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, false);
    const ComparisonTable table = compare_methods(*problem, set, m, split_list(rc.methods), compare_options(rc));
    write_file(fs::path(rc.out) / "table.csv", comparison_csv(table));
    write_json(fs::path(rc.out) / "table.json", to_json(table, set));
    write_json(fs::path(rc.out) / "table.timings.json", timings_json(table));
    for (const auto& row : table.rows) {
        std::cout << row.method << ": ";
        if (!row.ok)
            std::cout << "failed (" << row.error << ")\n";
        else
            std::cout << "kappa " << row.kappa << ", OG% "
                      << (row.og.og_pct ? std::to_string(*row.og.og_pct) : std::string("n/a")) << "\n";
    }
    bool all_ok = true;
    for (const auto& row : table.rows) all_ok = all_ok && row.ok;
    return all_ok ? 0 : 1;
}

int cmd_og_vs_k(const RunConfig& rc) {
    auto problem = load_problem(rc);
    const ScenarioSet set = load_set(rc);
    const ProblemSpaceMatrix m = obtain_matrix(rc, *problem, set, false);
    CompareOptions o = compare_options(rc);
    const Benchmark bench = solve_benchmark(*problem, set, o.evaluate.solve, rc.workers);
    std::vector<OgVsKRow> rows;
    for (int K : rc.Ks) {
        o.K = K;
        const ComparisonTable t = compare_methods(*problem, set, m, split_list(rc.methods), o, &bench);
        for (std::size_t k = 1; k < t.rows.size(); ++k) {
            if (!t.rows[k].ok) throw Error(t.rows[k].method + " failed at K=" + std::to_string(K) + ": " + t.rows[k].error);
            rows.push_back({t.rows[k].method, K, t.rows[k].og, t.rows[k].kappa});
        }
    }
    write_file(fs::path(rc.out) / "og_vs_k.csv", og_vs_k_csv(rows));
    std::cout << "wrote " << rows.size() << " rows\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Problem-driven scenario reduction toolkit"};
    app.require_subcommand(1);
    RunConfig rc;

    auto* gen = app.add_subcommand("generate", "write a seeded desk instance");
    gen->add_option("--problem", rc.problem, "adn or uc")->check(CLI::IsMember({"adn", "uc"}));
    gen->add_option("--seed", rc.seed, "random seed");
    gen->add_option("--n", rc.n, "number of scenarios")->check(CLI::PositiveNumber);
    gen->add_option("--horizon", rc.horizon, "periods per day (default 12 for adn, 6 for uc)");
    gen->add_option("--buses", rc.buses, "feeder nodes (adn)");
    gen->add_option("--bad-fraction", rc.bad_fraction, "share of injected bad scenarios");
    gen->add_option("--out", rc.out, "output directory");

    auto* project = app.add_subcommand("project", "build the problem-space matrix F");
    add_common(project, rc);

    auto* cluster = app.add_subcommand("cluster", "solve the clustering MILP");
    add_common(cluster, rc);
    cluster->add_option("--beta", rc.beta, "trade-off factor")->check(CLI::NonNegativeNumber);
    cluster->add_option("--beta-range", rc.beta_range, "lo:hi:count, pick the beta with the lowest PDDBI");
    cluster->add_option("--K", rc.K, "fixed number of representatives")->check(CLI::PositiveNumber);
    cluster->add_option("--cluster-gap-tol", rc.cluster_gap_tol, "relative MIP gap of the clustering MILP");

    auto* sweep = app.add_subcommand("sweep-beta", "ex-ante indices over a log-spaced beta range");
    add_common(sweep, rc);
    sweep->add_option("--beta-range", rc.beta_range, "lo:hi:count")->required();
    sweep->add_option("--cluster-gap-tol", rc.cluster_gap_tol, "relative MIP gap of the clustering MILP");

    auto* eval = app.add_subcommand("evaluate", "evaluate a reduction against the full program");
    add_common(eval, rc);
    eval->add_option("--reduction", rc.reduction, "reduction.json")->required()->check(CLI::ExistingFile);
    eval->add_option("--bound", rc.bound, "worst-case threshold on second differences");
    eval->add_flag("--raw-rho", rc.raw_rho, "do not normalize second differences");
    eval->add_flag("--lowest-jump", rc.lowest_jump, "flag from the first super-threshold jump");
    eval->add_flag("--no-se", rc.no_se, "skip scenario effectiveness");

    auto* compare = app.add_subcommand("compare", "compare reduction methods at a fixed K");
    add_common(compare, rc);
    compare->add_option("--K", rc.K, "number of representatives")->check(CLI::PositiveNumber);
    compare->add_option("--methods", rc.methods, "comma-separated: pdsr,km-e,kd-e,hc,ws");
    compare->add_option("--restarts", rc.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    compare->add_option("--bound", rc.bound, "worst-case threshold on second differences");
    compare->add_option("--cluster-gap-tol", rc.cluster_gap_tol, "relative MIP gap of the clustering MILP");

    auto* ogk = app.add_subcommand("og-vs-k", "optimality gap as a function of K");
    add_common(ogk, rc);
    ogk->add_option("--Ks", rc.Ks, "values of K")->delimiter(',');
    ogk->add_option("--methods", rc.methods, "comma-separated methods");
    ogk->add_option("--restarts", rc.restarts, "k-means restarts")->check(CLI::PositiveNumber);
    ogk->add_option("--cluster-gap-tol", rc.cluster_gap_tol, "relative MIP gap of the clustering MILP");

    CLI11_PARSE(app, argc, argv);

    try {
        fs::create_directories(rc.out);
        if (*gen) return cmd_generate(rc);
        if (*project) return cmd_project(rc);
        if (*cluster) return cmd_cluster(rc);
        if (*sweep) return cmd_sweep(rc);
        if (*eval) return cmd_evaluate(rc);
        if (*compare) return cmd_compare(rc);
        if (*ogk) return cmd_og_vs_k(rc);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
