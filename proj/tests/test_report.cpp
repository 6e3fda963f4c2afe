#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pdsr/report.hpp"
#include "pdsr/uc.hpp"

using namespace pdsr;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

int fields(const std::string& line) { return static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1; }

struct Fixture {
    UcDeskInstance inst = make_uc_desk_instance(2, 8);
    UcProblem problem{inst.config};
    ProblemSpaceMatrix F = build_problem_space_matrix(problem, inst.scenarios, 1);
};

}  // namespace

TEST_CASE("csv numbers round trip and NaN is empty") {
    CHECK(csv_number(std::nan("")) == "");
    for (double v : {0.1, -3.25, 1e-17, 123456789.125}) CHECK(std::stod(csv_number(v)) == v);
}

TEST_CASE("comparison outputs") {
    Fixture f;
    CompareOptions o;
    o.K = 2;
    o.evaluate.scenario_effectiveness = false;
    auto table = compare_methods(f.problem, f.inst.scenarios, f.F, {"pdsr", "hc"}, o);

    const auto csv = lines(comparison_csv(table));
    REQUIRE(csv.size() == 4u);
    CHECK(csv[0].rfind("method,ok,K,kappa,og_abs,og_pct,og_bound,reduced_value", 0) == 0);
    CHECK(csv[0].find("mean_day_ahead") != std::string::npos);
    for (const auto& l : csv) CHECK(fields(l) == fields(csv[0]));
    CHECK(csv[1].rfind("benchmark,1,8,", 0) == 0);
    CHECK(csv[2].rfind("pdsr,1,2,", 0) == 0);

    const auto j = to_json(table, f.inst.scenarios);
    REQUIRE(j["rows"].size() == 3u);
    CHECK(j["rows"][1]["reduction"]["K"] == 2);
    CHECK(j["worst_case"]["sigma"].size() == 8u);
    CHECK(j.dump().find("tau_") == std::string::npos);
    CHECK(timings_json(table).size() == 3u);

    // A second run gives byte-identical documents.
    auto again = compare_methods(f.problem, f.inst.scenarios, f.F, {"pdsr", "hc"}, o, &table.benchmark);
    CHECK(to_json(again, f.inst.scenarios).dump() == j.dump());
    CHECK(comparison_csv(again) == comparison_csv(table));
}

TEST_CASE("evaluation report lists every scenario") {
    Fixture f;
    const auto d = compute_pdd(f.F);
    const auto r = solve_clustering(d, f.inst.scenarios.probabilities(), 0.0, 3);
    EvaluateOptions o;
    o.scenario_effectiveness = false;
    const auto rep = evaluate(f.problem, f.inst.scenarios, f.F, d, r, o);
    const auto j = to_json(rep, f.inst.scenarios);
    CHECK(j["verification_costs"].size() == 8u);
    CHECK(j["verification_costs"][0].contains("benchmark"));
    CHECK(j["K"] == 3);
    CHECK(j["se"].empty());
    CHECK(j.dump().find("tau_") == std::string::npos);
    CHECK(timings_json(rep).contains("tau_o"));
}

TEST_CASE("sweep and og-vs-K tables") {
    SweepRow a{0.0, 4, 0.0, std::nan(""), 0.0, std::nan("")};
    SweepRow b{1.5, 2, 3.0, 0.5, 0.25, 1.0};
    const auto s = lines(sweep_csv({a, b}));
    REQUIRE(s.size() == 3u);
    CHECK(s[1] == "0,4,0,,0,");
    CHECK(s[2] == "1.5,2,3,0.5,0.25,1");

    OgVsKRow r;
    r.method = "pdsr";
    r.K = 2;
    r.og.og_abs = 1.0;
    r.og.og_pct = 0.5;
    r.og.reduced_value = 201.0;
    r.og.benchmark_value = 200.0;
    const auto o = lines(og_vs_k_csv({r}));
    REQUIRE(o.size() == 2u);
    CHECK(o[1] == "pdsr,2,0,1,0.5,201,200");
}
