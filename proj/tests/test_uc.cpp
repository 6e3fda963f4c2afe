#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pdsr/error.hpp"
#include "pdsr/uc.hpp"

using namespace pdsr;

namespace {

UcConfig single_bus(int horizon, double dt) {
    UcConfig c;
    c.num_buses = 1;
    c.horizon = horizon;
    c.dt_hours = dt;
    UcGenerator g;
    g.p_max = 20.0;
    g.ramp_up = g.ramp_down = 20.0;
    g.cost_pg = 10.0;
    g.cost_up = 30.0;
    g.cost_down = 1.0;
    c.generators = {g};
    c.loads = {{"load1", 0}};
    return c;
}

ScenarioSet flat_load(int horizon, double mw) {
    return ScenarioSet({"load1"}, horizon, {Scenario{"a", std::vector<double>(horizon, mw)}}, {1.0});
}

double value_of(const milp::Model& m, const milp::Solution& sol, const std::string& name) {
    for (int v = 0; v < m.num_variables(); ++v)
        if (m.variable(v).name == name) return sol.values[v];
    FAIL("no variable " << name);
    return 0.0;
}

int index_of(const milp::Model& m, const std::string& name) {
    for (int v = 0; v < m.num_variables(); ++v)
        if (m.variable(v).name == name) return v;
    FAIL("no variable " << name);
    return -1;
}

}  // namespace

TEST_CASE("desk instance is deterministic and has the documented shape") {
    auto a = make_uc_desk_instance(3, 20);
    auto b = make_uc_desk_instance(3, 20);
    CHECK(scenarios_to_csv(a.scenarios) == scenarios_to_csv(b.scenarios));
    CHECK(a.config.num_buses == 3);
    CHECK(a.config.generators.size() == 2u);
    CHECK(a.config.horizon == 6);
    CHECK(std::count(a.bad.begin(), a.bad.end(), true) == 2);
    auto back = uc_config_from_json(to_json(a.config));
    CHECK(to_json(back).dump() == to_json(a.config).dump());
}

TEST_CASE("config validation") {
    auto c = single_bus(4, 1.0);
    c.generators[0].p_min = 30.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = single_bus(4, 1.0);
    c.generators[0].min_up = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = single_bus(4, 1.0);
    c.reference_bus = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = single_bus(4, 1.0);
    c.generators[0].initially_on = true;
    c.generators[0].p_min = 5.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("binary count is G*T for commitment plus G*T*S regulation states") {
    auto inst = make_uc_desk_instance(1, 6);
    UcProblem p(inst.config);
    for (int S : {1, 2, 4}) {
        std::vector<int> members;
        for (int k = 0; k < S; ++k) members.push_back(k);
        std::vector<double> w(S, 1.0 / S);
        auto cm = p.compile(inst.scenarios, members, w, nullptr);
        CHECK(cm.model.num_binaries() == 2 * 6 + 2 * 6 * S);
        CHECK(static_cast<int>(cm.first_stage.size()) == p.num_first_stage());
    }
}

TEST_CASE("flat load on a single generator costs C_PG * load * T * dt") {
    for (double dt : {1.0, 4.0}) {
        const int T = 6;
        UcProblem p(single_bus(T, dt));
        auto set = flat_load(T, 5.0);
        auto sol = solve_scenario_specific(p, set, 0);
        CHECK(sol.objective == doctest::Approx(10.0 * 5.0 * T * dt).epsilon(1e-9));
        for (int t = 0; t < T; ++t) {
            CHECK(sol.decision.values[t] == doctest::Approx(5.0).epsilon(1e-9));
            CHECK(sol.decision.values[T + t] == 1.0);
        }
    }
}

TEST_CASE("a forced start keeps the unit on for its minimum up time") {
    const int T = 6;
    auto c = single_bus(T, 1.0);
    c.generators[0].cost_nl = 3.0;
    c.generators[0].min_up = 3;
    UcProblem p(c);
    auto set = flat_load(T, 0.0);
    std::vector<int> m{0};
    std::vector<double> w{1.0};
    auto cm = p.compile(set, m, w, nullptr);
    cm.model.set_bounds(index_of(cm.model, "u[0,0]"), 0.0, 0.0);
    cm.model.set_bounds(index_of(cm.model, "u[0,1]"), 0.0, 0.0);
    cm.model.set_bounds(index_of(cm.model, "u[0,2]"), 1.0, 1.0);
    auto sol = milp::solve_milp(cm.model, {1e-9});
    REQUIRE(sol.status == milp::Status::optimal);
    CHECK(cm.model.max_violation(sol.values) <= 1e-9);
    for (int t : {3, 4, 5}) CHECK(value_of(cm.model, sol, "u[0," + std::to_string(t) + "]") == 1.0);
    // Without the minimum up time the unit would switch straight back off.
    c.generators[0].min_up = 1;
    UcProblem q(c);
    auto cm2 = q.compile(set, m, w, nullptr);
    cm2.model.set_bounds(index_of(cm2.model, "u[0,2]"), 1.0, 1.0);
    auto sol2 = milp::solve_milp(cm2.model, {1e-9});
    CHECK(value_of(cm2.model, sol2, "u[0,3]") == 0.0);
}

TEST_CASE("fixed commitment evaluation and regulation exclusivity") {
    auto inst = make_uc_desk_instance(2, 4);
    UcProblem p(inst.config);
    auto z = solve_scenario_specific(p, inst.scenarios, 0);
    const double self = evaluate_with_fixed_first_stage(p, z.decision, inst.scenarios, 0);
    CHECK(self == doctest::Approx(z.objective).epsilon(1e-6));
    for (int j = 1; j < 4; ++j) {
        auto d = evaluate_detailed(p, z.decision, inst.scenarios, j);
        CHECK(d.components.at("intraday") ==
              doctest::Approx(d.components.at("regulation") + d.components.at("penalty")));
        CHECK(d.value == doctest::Approx(d.components.at("day_ahead") + d.components.at("intraday")));
    }

    std::vector<int> members{0, 1, 2, 3};
    std::vector<double> w(4, 0.25);
    auto cm = p.compile(inst.scenarios, members, w, nullptr);
    auto sol = milp::solve_milp(cm.model, {1e-6});
    REQUIRE(sol.status == milp::Status::optimal);
    CHECK(cm.model.max_violation(sol.values) <= 1e-6);
    const int T = inst.config.horizon;
    for (int s = 0; s < 4; ++s)
        for (int g = 0; g < 2; ++g)
            for (int t = 0; t < T; ++t) {
                const std::string k = std::to_string(s) + "," + std::to_string(g) + "," + std::to_string(t);
                CHECK(std::min(value_of(cm.model, sol, "Pup[" + k + "]"), value_of(cm.model, sol, "Pdn[" + k + "]")) <=
                      1e-7);
            }
    for (int v = 0; v < cm.model.num_variables(); ++v)
        if (cm.model.variable(v).name.rfind("theta[", 0) == 0)
            CHECK(std::abs(sol.values[v]) <= std::numbers::pi / 3.0 + 1e-9);
}

TEST_CASE("bad desk scenarios are expensive under a normal scenario's commitment") {
    auto inst = make_uc_desk_instance(1, 20);
    UcProblem p(inst.config);
    const int bad = static_cast<int>(std::find(inst.bad.begin(), inst.bad.end(), true) - inst.bad.begin());
    const int good = static_cast<int>(std::find(inst.bad.begin(), inst.bad.end(), false) - inst.bad.begin());
    auto zg = solve_scenario_specific(p, inst.scenarios, good);
    auto zb = solve_scenario_specific(p, inst.scenarios, bad);
    const double under = evaluate_with_fixed_first_stage(p, zg.decision, inst.scenarios, bad);
    CHECK(under > zb.objective * 1.5);
}
