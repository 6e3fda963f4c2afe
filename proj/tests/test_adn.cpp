#include <algorithm>
#include <map>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pdsr/adn.hpp"
#include "pdsr/error.hpp"

using namespace pdsr;

namespace {

/// Two-node feeder: substation 0, one load/RES/storage node 1.
AdnConfig tiny_feeder(int horizon, bool with_storage) {
    AdnConfig c;
    c.num_nodes = 2;
    c.root = 0;
    c.lines = {{0, 1, 0.01, 0.01}};
    c.horizon = horizon;
    c.dt_hours = 1.0;
    c.res = {{"wt1", 1, 0.0}};
    c.loads = {{"load1", 1, 0.2}};
    if (with_storage) {
        AdnStorage es;
        es.node = 1;
        es.price = 5.0;
        c.storage.push_back(es);
    }
    c.trade_max = 2.0;
    return c;
}

ScenarioSet tiny_set(const std::vector<std::vector<double>>& wt, const std::vector<std::vector<double>>& load,
                     const std::vector<std::vector<double>>& price) {
    const int horizon = static_cast<int>(wt.front().size());
    std::vector<Scenario> sc;
    for (std::size_t i = 0; i < wt.size(); ++i) {
        Scenario s{"s" + std::to_string(i), {}};
        s.values.insert(s.values.end(), wt[i].begin(), wt[i].end());
        s.values.insert(s.values.end(), load[i].begin(), load[i].end());
        s.values.insert(s.values.end(), price[i].begin(), price[i].end());
        sc.push_back(std::move(s));
    }
    const int n = static_cast<int>(sc.size());
    return ScenarioSet({"wt1", "load1", "price"}, horizon, std::move(sc), std::vector<double>(n, 1.0 / n));
}

double value_of(const milp::Model& m, const milp::Solution& sol, const std::string& name) {
    for (int v = 0; v < m.num_variables(); ++v)
        if (m.variable(v).name == name) return sol.values[v];
    FAIL("no variable " << name);
    return 0.0;
}

}  // namespace

TEST_CASE("desk instance is deterministic and counts bad scenarios") {
    auto a = make_desk_instance(5, 8, 12, 6, 0.25);
    auto b = make_desk_instance(5, 8, 12, 6, 0.25);
    CHECK(scenarios_to_csv(a.scenarios) == scenarios_to_csv(b.scenarios));
    CHECK(to_json(a.config).dump() == to_json(b.config).dump());
    CHECK(std::count(a.bad.begin(), a.bad.end(), true) == 2);
    CHECK(scenarios_to_csv(make_desk_instance(6, 8).scenarios) != scenarios_to_csv(a.scenarios));
}

TEST_CASE("config json round trip and validation") {
    auto inst = make_desk_instance(2, 4);
    auto back = adn_config_from_json(to_json(inst.config));
    CHECK(to_json(back).dump() == to_json(inst.config).dump());

    auto cyclic = inst.config;
    cyclic.lines.push_back({cyclic.lines.back().to, 0, 0.01, 0.01});
    CHECK_THROWS_AS(cyclic.validate(), ConfigError);
    auto bad_prices = inst.config;
    bad_prices.price_down = 1.5;
    CHECK_THROWS_AS(bad_prices.validate(), ConfigError);
    auto bad_es = inst.config;
    bad_es.storage[0].soc0 = 0.95;
    CHECK_THROWS_AS(bad_es.validate(), ConfigError);
}

TEST_CASE("scenario sources must match the configuration") {
    AdnProblem p(tiny_feeder(2, false));
    std::vector<Scenario> sc{{"a", {1, 1, 1, 1}}};
    ScenarioSet wrong({"wt1", "load2"}, 2, sc, {1.0});
    CHECK_THROWS_AS(p.check_compatible(wrong), ConfigError);
    auto ok = tiny_set({{0, 0}}, {{1, 1}}, {{10, 10}});
    CHECK_NOTHROW(p.check_compatible(ok));
    auto short_set = tiny_set({{0}}, {{1}}, {{10}});
    CHECK_THROWS_AS(p.check_compatible(short_set), ConfigError);
}

TEST_CASE("binary count is S*T*(storage units + 1)") {
    auto inst = make_desk_instance(3, 5, 6, 5);
    AdnProblem p(inst.config);
    for (int S : {1, 3, 5}) {
        std::vector<int> members(S);
        std::iota(members.begin(), members.end(), 0);
        std::vector<double> w(S, 1.0 / S);
        auto cm = p.compile(inst.scenarios, members, w, nullptr);
        CHECK(cm.model.num_binaries() == S * 6 * (1 + 1));
        CHECK(cm.first_stage.size() == 6u + 1u);
    }
}

TEST_CASE("balanced node with zero price costs nothing") {
    auto c = tiny_feeder(1, false);
    c.fixed_loads.clear();
    AdnProblem p(c);
    auto set = tiny_set({{0.7}}, {{0.7}}, {{0.0}});
    auto sol = solve_scenario_specific(p, set, 0);
    CHECK(std::abs(sol.objective) <= 1e-9);
    CHECK(std::abs(sol.decision.values[0]) <= 1e-9);
}

TEST_CASE("zero uncertainty scenario costs nothing and buys nothing") {
    AdnProblem p(tiny_feeder(3, true));
    // A flat price leaves storage nothing to arbitrage.
    auto set = tiny_set({{0, 0, 0}}, {{0, 0, 0}}, {{40, 40, 40}});
    auto sol = solve_scenario_specific(p, set, 0);
    CHECK(std::abs(sol.objective) <= 1e-9);
    for (double v : sol.decision.values) CHECK(std::abs(v) <= 1e-9);
    FirstStageDecision zero{std::vector<double>(p.num_first_stage(), 0.0)};
    CHECK(std::abs(evaluate_with_fixed_first_stage(p, zero, set, 0)) <= 1e-9);
}

TEST_CASE("a load spike beyond import and storage capacity is shed") {
    auto c = tiny_feeder(2, true);
    c.trade_max = 1.0;
    AdnProblem p(c);
    auto set = tiny_set({{0, 0}}, {{0.2, 1.9}}, {{30, 30}});
    std::vector<int> m{0};
    std::vector<double> w{1.0};
    auto cm = p.compile(set, m, w, nullptr);
    auto sol = milp::solve_milp(cm.model, {1e-9});
    REQUIRE(sol.status == milp::Status::optimal);
    const double shed = value_of(cm.model, sol, "Ls[0,0,1]");
    // Import is capped at 1 MW and the storage unit at 0.4 MW.
    CHECK(shed >= 1.9 - 1.0 - 0.4 - 1e-6);
    CHECK(shed > 0.0);
    const double penalty = cm.member_components[0].at("penalty").evaluate(sol.values);
    CHECK(penalty >= 1000.0 * shed - 1e-6);
}

TEST_CASE("exclusivity, storage bounds and recourse bounds hold in optimal solutions") {
    auto inst = make_desk_instance(4, 3, 12, 6);
    AdnProblem p(inst.config);
    std::vector<int> members{0, 1, 2};
    std::vector<double> w(3, 1.0 / 3);
    auto cm = p.compile(inst.scenarios, members, w, nullptr);
    auto sol = milp::solve_milp(cm.model, {1e-6});
    REQUIRE(sol.status == milp::Status::optimal);
    CHECK(cm.model.max_violation(sol.values) <= 1e-6);
    const auto& es = inst.config.storage[0];
    const double cap = sol.values[cm.first_stage.back()];
    const int T = inst.config.horizon;
    for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < T; ++t) {
            const std::string st = std::to_string(s) + "," + std::to_string(t);
            const double up = value_of(cm.model, sol, "Tup[" + st + "]");
            const double dn = value_of(cm.model, sol, "Tdn[" + st + "]");
            CHECK(std::min(up, dn) <= 1e-7);
            const double ch = value_of(cm.model, sol, "Ec[" + std::to_string(s) + ",0," + std::to_string(t) + "]");
            const double dis = value_of(cm.model, sol, "Ed[" + std::to_string(s) + ",0," + std::to_string(t) + "]");
            CHECK(std::min(ch, dis) <= 1e-7);
            const double e = value_of(cm.model, sol, "Es[" + std::to_string(s) + ",0," + std::to_string(t) + "]");
            CHECK(e >= es.soc_min * cap - 1e-7);
            CHECK(e <= es.soc_max * cap + 1e-7);
        }
        const double last =
            value_of(cm.model, sol, "Es[" + std::to_string(s) + ",0," + std::to_string(T - 1) + "]");
        CHECK(last == doctest::Approx(es.soc0 * cap).epsilon(1e-9).scale(1.0));
    }
    for (int v = 0; v < cm.model.num_variables(); ++v) {
        const auto& var = cm.model.variable(v);
        if (var.name.rfind("Rc[", 0) == 0 || var.name.rfind("Ls[", 0) == 0) {
            CHECK(sol.values[v] >= -1e-9);
            CHECK(sol.values[v] <= var.upper + 1e-9);
        }
    }
}

TEST_CASE("singleton stochastic solve equals the scenario-specific solve") {
    auto inst = make_desk_instance(7, 4, 8, 5);
    AdnProblem p(inst.config);
    for (int i = 0; i < 4; ++i) {
        std::vector<int> m{i};
        std::vector<double> w{1.0};
        auto a = solve_stochastic(p, inst.scenarios, m, w);
        auto b = solve_scenario_specific(p, inst.scenarios, i);
        CHECK(a.objective == b.objective);
        CHECK(a.decision.values == b.decision.values);
        CHECK(b.decision.source_scenario == i);
    }
}

TEST_CASE("fixed first-stage evaluation is consistent with the solves") {
    auto inst = make_desk_instance(8, 5, 8, 5);
    AdnProblem p(inst.config);
    const SolveOptions opts;
    auto z0 = solve_scenario_specific(p, inst.scenarios, 0, opts);
    // Re-evaluating the optimum on its own scenario reproduces F_ii.
    const double self = evaluate_with_fixed_first_stage(p, z0.decision, inst.scenarios, 0, opts);
    CHECK(self == doctest::Approx(z0.objective).epsilon(1e-6));

    // Any other decision is no better on that scenario.
    std::mt19937_64 rng(9);
    const auto& c = inst.config;
    std::uniform_real_distribution<double> trade(-c.trade_max, c.trade_max), cap(0.0, c.storage[0].e_max);
    for (int k = 0; k < 5; ++k) {
        FirstStageDecision z;
        for (int t = 0; t < c.horizon; ++t) z.values.push_back(trade(rng));
        z.values.push_back(cap(rng));
        CHECK(evaluate_with_fixed_first_stage(p, z, inst.scenarios, 0, opts) >=
              z0.objective - 2.0 * opts.gap_tol * std::abs(z0.objective));
    }
    for (int j = 1; j < 5; ++j) {
        auto zj = solve_scenario_specific(p, inst.scenarios, j, opts);
        CHECK(evaluate_with_fixed_first_stage(p, zj.decision, inst.scenarios, 0, opts) >=
              z0.objective - 2.0 * opts.gap_tol * std::abs(z0.objective));
    }
}

TEST_CASE("weighted sum of evaluations equals the fixed-z objective over the set") {
    auto inst = make_desk_instance(9, 5, 8, 5);
    AdnProblem p(inst.config);
    auto z = solve_scenario_specific(p, inst.scenarios, 2).decision;
    const auto& g = inst.scenarios.probabilities();
    double sum = 0.0;
    std::vector<double> per(5);
    for (int i = 0; i < 5; ++i) {
        per[i] = evaluate_with_fixed_first_stage(p, z, inst.scenarios, i);
        sum += g[i] * per[i];
    }
    std::vector<int> all{0, 1, 2, 3, 4};
    auto cm = p.compile(inst.scenarios, all, g, &z);
    auto sol = milp::solve_milp(cm.model, {1e-9});
    REQUIRE(sol.status == milp::Status::optimal);
    CHECK(sol.objective == doctest::Approx(sum).epsilon(1e-6));

    // Splitting the set into clusters: F(z, xi) - F(z, zeta) equals the sum of
    // per-member differences to the cluster representative.
    const std::vector<int> rep_of{0, 0, 2, 2, 2};
    double f_zeta = 0.0;
    std::map<int, double> omega;
    for (int i = 0; i < 5; ++i) omega[rep_of[i]] += g[i];
    for (auto [rep, w] : omega) f_zeta += w * per[rep];
    double rhs = 0.0;
    for (int i = 0; i < 5; ++i) rhs += g[i] * (per[i] - per[rep_of[i]]);
    CHECK(sum - f_zeta == doctest::Approx(rhs).epsilon(1e-6).scale(std::abs(sum)));
}

TEST_CASE("doubling prices raises the cost of a forced purchase") {
    auto c = tiny_feeder(2, false);
    AdnProblem p(c);
    auto base = tiny_set({{0, 0}}, {{0.5, 0.8}}, {{20, 30}});
    auto doubled = tiny_set({{0, 0}}, {{0.5, 0.8}}, {{40, 60}});
    auto a = solve_scenario_specific(p, base, 0);
    auto b = solve_scenario_specific(p, doubled, 0);
    CHECK(a.objective > 0.0);
    CHECK(b.objective > a.objective);
}

TEST_CASE("stochastic objective is invariant to scenario order") {
    auto inst = make_desk_instance(10, 8);
    AdnProblem p(inst.config);
    std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<double> w(8, 0.125);
    auto a = solve_stochastic(p, inst.scenarios, order, w);
    std::vector<int> perm{5, 2, 7, 0, 3, 6, 1, 4};
    auto b = solve_stochastic(p, inst.scenarios, perm, w);
    CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-6));
    CHECK(a.status == milp::Status::optimal);
}

TEST_CASE("identity reduction reproduces the full objective") {
    auto inst = make_desk_instance(12, 4, 8, 5);
    AdnProblem p(inst.config);
    auto full = solve_stochastic(p, inst.scenarios);
    std::vector<int> all{0, 1, 2, 3};
    auto reduced = solve_stochastic(p, inst.scenarios, all, inst.scenarios.probabilities());
    CHECK(std::abs(full.objective - reduced.objective) <= 2e-4 * std::abs(full.objective));
}
