#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pdsr/clustering.hpp"
#include "pdsr/error.hpp"
#include "pdsr/evaluation.hpp"
#include "pdsr/projection.hpp"
#include "pdsr/uc.hpp"

using namespace pdsr;

namespace {

/// Square matrix whose column sums are the given values.
Eigen::MatrixXd with_column_sums(const std::vector<double>& sigma) {
    const int n = static_cast<int>(sigma.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) F(i, i) = sigma[i];
    return F;
}

struct UcCase {
    UcDeskInstance inst;
    UcProblem problem;
    ProblemSpaceMatrix F;
    PddMatrix d;

    explicit UcCase(std::uint64_t seed, int n = 20)
        : inst(make_uc_desk_instance(seed, n)),
          problem(inst.config),
          F(build_problem_space_matrix(problem, inst.scenarios, 1)),
          d(compute_pdd(F)) {}
};

}  // namespace

TEST_CASE("spdd is zero for the identity reduction") {
    PddMatrix d;
    d.d = Eigen::MatrixXd::Constant(4, 4, 3.0);
    d.d.diagonal().setZero();
    std::vector<double> g(4, 0.25);
    auto r = make_reduction({0, 1, 2, 3}, g, "id");
    CHECK(spdd(d, g, r) == 0.0);
    auto r2 = make_reduction({0, 0, 2, 2}, g, "pairs");
    CHECK(spdd(d, g, r2) == doctest::Approx(0.25 * 3.0 * 2));
}

TEST_CASE("pddbi of two clusters") {
    PddMatrix d;
    d.d = Eigen::MatrixXd::Zero(4, 4);
    auto set = [&](int i, int j, double v) { d.d(i, j) = d.d(j, i) = v; };
    set(0, 1, 2.0);
    set(2, 3, 4.0);
    set(0, 2, 10.0);
    set(0, 3, 12.0);
    set(1, 2, 11.0);
    set(1, 3, 13.0);
    std::vector<double> g(4, 0.25);
    auto r = make_reduction({0, 0, 2, 2}, g, "x");
    CHECK(pddbi(d, g, r) == doctest::Approx(0.3));
    auto one = make_reduction({0, 0, 0, 0}, g, "x");
    CHECK_THROWS_AS(pddbi(d, g, one), ValidationError);
}

TEST_CASE("pddbi vanishes as tight clusters separate") {
    std::vector<double> g(4, 0.25);
    auto r = make_reduction({0, 0, 2, 2}, g, "x");
    double prev = 1e300;
    for (double sep : {10.0, 100.0, 1e4, 1e8}) {
        PddMatrix d;
        d.d = Eigen::MatrixXd::Constant(4, 4, sep);
        d.d(0, 1) = d.d(1, 0) = d.d(2, 3) = d.d(3, 2) = 1.0;
        d.d.diagonal().setZero();
        const double v = pddbi(d, g, r);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-7);
}

TEST_CASE("worst-case detection on a hand-made sigma") {
    auto w = detect_worst_case(with_column_sums({1.0, 1.1, 1.2, 10.0}));
    REQUIRE(w.rho.size() == 2u);
    CHECK(w.rho[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(w.rho[1] == doctest::Approx(8.7 / 0.1));
    CHECK(w.flags == std::vector<bool>{false, false, false, true});
    CHECK(w.count() == 1);
    CHECK(w.threshold_position == 3);

    WorstCaseOptions raw;
    raw.normalized = false;
    auto wr = detect_worst_case(with_column_sums({1.0, 1.1, 1.2, 10.0}), raw);
    CHECK(wr.rho[1] == doctest::Approx(8.7));
    CHECK(wr.flags[3]);

    auto flat = detect_worst_case(with_column_sums({5.0, 5.0, 5.0, 5.0, 5.0}));
    CHECK(flat.count() == 0);
    CHECK(flat.threshold_position == -1);

    CHECK_THROWS_AS(detect_worst_case(with_column_sums({1.0, 2.0})), ValidationError);
}

TEST_CASE("largest and lowest jump rules") {
    // Two separated tails: a moderate one at 5 and a large one at 50.
    const std::vector<double> sigma{1.0, 1.1, 1.2, 1.3, 5.0, 5.1, 50.0};
    auto largest = detect_worst_case(with_column_sums(sigma));
    CHECK(largest.count() == 1);
    CHECK(largest.flags[6]);
    WorstCaseOptions low;
    low.rule = JumpRule::lowest;
    auto lowest = detect_worst_case(with_column_sums(sigma), low);
    CHECK(lowest.count() == 3);
    CHECK(lowest.flags[4]);
}

TEST_CASE("worst-case flags do not depend on scenario order") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const int n = 6 + rep % 10;
        Eigen::MatrixXd F(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) F(i, j) = 100.0 + 10.0 * u(rng) + (j % 5 == 0 ? 50.0 * u(rng) : 0.0);
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd P(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) P(i, j) = F(perm[i], perm[j]);
        auto a = detect_worst_case(F);
        auto b = detect_worst_case(P);
        for (int i = 0; i < n; ++i) CHECK(b.flags[i] == a.flags[perm[i]]);
    }
}

TEST_CASE("identity reduction has zero gap and the benchmark row is exact") {
    UcCase c(2, 8);
    const auto& set = c.inst.scenarios;
    auto bench = solve_benchmark(c.problem, set);
    REQUIRE(bench.computed);
    double weighted = 0.0;
    for (int i = 0; i < set.size(); ++i) weighted += set.probabilities()[i] * bench.per_scenario[i];
    CHECK(bench.value == doctest::Approx(weighted).epsilon(1e-12));

    std::vector<int> id(set.size());
    std::iota(id.begin(), id.end(), 0);
    auto r = make_reduction(id, set.probabilities(), "identity");
    auto og = optimality_gap(c.problem, set, r, bench);
    REQUIRE(og.og_pct);
    CHECK(std::abs(*og.og_pct) <= 2.0 * 1e-4 * 100.0);
}

TEST_CASE("optimality gap, its bound and scenario effectiveness") {
    UcCase c(1);
    const auto& set = c.inst.scenarios;
    const auto& g = set.probabilities();
    auto bench = solve_benchmark(c.problem, set);
    const double slack = 4.0 * 1e-4 * c.F.F.cwiseAbs().maxCoeff();

    auto pdsr = solve_clustering(c.d, g, 0.0, 3);
    EvaluateOptions opts;
    auto rep = evaluate(c.problem, set, c.F, c.d, pdsr, opts, &bench);
    CHECK(rep.og.og_abs >= -2.0 * 1e-4 * std::abs(bench.value));
    CHECK(rep.og.og_abs <= rep.og_bound + slack);
    CHECK(rep.og.og_abs == doctest::Approx(rep.og.reduced_value - rep.og.benchmark_value));
    CHECK(*rep.og.og_pct == doctest::Approx(100.0 * rep.og.og_abs / std::abs(bench.value)));
    CHECK(rep.spdd == doctest::Approx(pdsr.spdd));

    // Independent recomputation of the reduced value and of each SE entry.
    auto reduced = solve_stochastic(c.problem, set, pdsr.representatives, pdsr.weights);
    double value = 0.0;
    for (int i = 0; i < set.size(); ++i)
        value += g[i] * evaluate_with_fixed_first_stage(c.problem, reduced.decision, set, i);
    CHECK(rep.og.reduced_value == doctest::Approx(value).epsilon(1e-9));

    REQUIRE(rep.se.size() == 3u);
    for (int k = 0; k < 3; ++k) {
        std::vector<int> members;
        std::vector<double> w;
        for (int j = 0; j < 3; ++j)
            if (j != k) {
                members.push_back(pdsr.representatives[j]);
                w.push_back(pdsr.weights[j]);
            }
        const double mass = w[0] + w[1];
        for (double& x : w) x /= mass;
        auto s = solve_stochastic(c.problem, set, members, w);
        double v = 0.0;
        for (int i = 0; i < set.size(); ++i)
            v += g[i] * evaluate_with_fixed_first_stage(c.problem, s.decision, set, i);
        const double pct = 100.0 * (v - bench.value) / std::abs(bench.value);
        CHECK(rep.se.at(pdsr.representatives[k]) == doctest::Approx(pct - *rep.og.og_pct).epsilon(1e-9));
    }

    // The representative standing for the bad scenarios is the one that hurts
    // most when removed.
    int bad_rep = -1;
    for (int r : pdsr.representatives)
        if (c.inst.bad[r]) bad_rep = r;
    REQUIRE(bad_rep >= 0);
    for (const auto& [r, v] : rep.se)
        if (r != bad_rep) CHECK(rep.se.at(bad_rep) > v);

    // Re-running gives identical SE values.
    auto again = scenario_effectiveness(c.problem, set, pdsr, bench);
    for (const auto& [r, v] : rep.se) CHECK(again.at(r) == v);
}

TEST_CASE("dropping one of two identical representatives costs nothing") {
    auto inst = make_uc_desk_instance(3, 5);
    auto sc = inst.scenarios.scenarios();
    sc[4].values = sc[0].values;
    ScenarioSet set(inst.scenarios.sources(), inst.scenarios.horizon(), sc, std::vector<double>(5, 0.2));
    UcProblem p(inst.config);
    auto bench = solve_benchmark(p, set);
    auto r = make_reduction({0, 0, 4, 4, 4}, set.probabilities(), "dup");
    auto se = scenario_effectiveness(p, set, r, bench);
    for (const auto& [k, v] : se) CHECK(std::abs(v) <= 2.0 * 1e-4 * 100.0);
    auto single = make_reduction({0, 0, 0, 0, 0}, set.probabilities(), "one");
    CHECK_THROWS_AS(scenario_effectiveness(p, set, single, bench), ValidationError);
}

TEST_CASE("worst-case detection finds the injected bad scenarios") {
    for (std::uint64_t seed : {1, 2, 3}) {
        UcCase c(seed);
        auto w = detect_worst_case(c.F.F);
        for (int i = 0; i < c.inst.scenarios.size(); ++i) CHECK(w.flags[i] == c.inst.bad[i]);
    }
}

TEST_CASE("comparison table") {
    UcCase c(5);
    CompareOptions o;
    o.K = 3;
    o.evaluate.scenario_effectiveness = false;
    auto t = compare_methods(c.problem, c.inst.scenarios, c.F, {"pdsr", "km-e", "ws"}, o);
    REQUIRE(t.rows.size() == 4u);
    CHECK(t.rows[0].method == "benchmark");
    CHECK(t.rows[0].og.og_abs == 0.0);
    CHECK(*t.rows[0].og.og_pct == 0.0);
    CHECK(t.rows[0].kappa == t.worst_case.count());
    CHECK(t.rows[1].method == "pdsr");
    CHECK(t.rows[1].kappa >= 1);
    for (const auto& row : t.rows) {
        CHECK(row.ok);
        CHECK(row.mean_components.count("day_ahead") == 1);
    }
    for (std::size_t k = 1; k < t.rows.size(); ++k) {
        CHECK(t.rows[k].reduction.K() == 3);
        CHECK_NOTHROW(validate_reduction(t.rows[k].reduction, c.inst.scenarios.probabilities()));
    }
    CHECK_THROWS_AS(compare_methods(c.problem, c.inst.scenarios, c.F, {"gmm"}, o), ConfigError);
}
