#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pdsr/adn.hpp"
#include "pdsr/error.hpp"
#include "pdsr/projection.hpp"
#include "pdsr/uc.hpp"

using namespace pdsr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("pdsr_test_projection_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void check_column_minimal(const ProblemSpaceMatrix& m) {
    const auto& F = m.F;
    for (int i = 0; i < m.size(); ++i)
        for (int j = 0; j < m.size(); ++j)
            CHECK(F(i, i) <= F(j, i) + 2.0 * m.gap_tol * std::abs(F(i, i)));
}

}  // namespace

TEST_CASE("a single scenario gives its own optimum") {
    auto inst = make_desk_instance(1, 1, 8, 5);
    AdnProblem p(inst.config);
    auto m = build_problem_space_matrix(p, inst.scenarios, 1);
    REQUIRE(m.size() == 1);
    auto sol = solve_scenario_specific(p, inst.scenarios, 0);
    CHECK(m.F(0, 0) == sol.objective);
    CHECK(m.decisions[0].values == sol.decision.values);
}

TEST_CASE("duplicate scenarios give equal rows and columns") {
    auto inst = make_uc_desk_instance(4, 4);
    auto sc = inst.scenarios.scenarios();
    sc.push_back({"dup", sc[1].values});
    ScenarioSet set(inst.scenarios.sources(), inst.scenarios.horizon(), sc, std::vector<double>(5, 0.2));
    UcProblem p(inst.config);
    auto m = build_problem_space_matrix(p, set, 1);
    const double scale = m.F.cwiseAbs().maxCoeff();
    for (int k = 0; k < 5; ++k) {
        CHECK(std::abs(m.F(1, k) - m.F(4, k)) <= 2.0 * m.gap_tol * scale);
        CHECK(std::abs(m.F(k, 1) - m.F(k, 4)) <= 2.0 * m.gap_tol * scale);
    }
    check_column_minimal(m);
}

TEST_CASE("worker count does not change the matrix") {
    auto inst = make_desk_instance(2, 8);
    AdnProblem p(inst.config);
    auto seq = build_problem_space_matrix(p, inst.scenarios, 1);
    check_column_minimal(seq);
    CHECK(seq.max_diagonal_excess() <= 2.0 * seq.gap_tol * seq.F.cwiseAbs().maxCoeff());
    for (int workers : {2, 8}) {
        auto par = build_problem_space_matrix(p, inst.scenarios, workers);
        CHECK((par.F - seq.F).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(par.fingerprint == seq.fingerprint);
    }
}

TEST_CASE("save and load round trip") {
    auto dir = temp_dir("roundtrip");
    auto inst = make_uc_desk_instance(5, 5);
    UcProblem p(inst.config);
    auto m = build_problem_space_matrix(p, inst.scenarios, 1);
    save_matrix(m, dir / "F.csv");
    CHECK(fs::exists(meta_path_for(dir / "F.csv")));
    auto back = load_matrix(dir / "F.csv", m.fingerprint);
    CHECK(back.ids == m.ids);
    CHECK(back.F == m.F);
    CHECK(back.fingerprint == m.fingerprint);
    CHECK(back.problem == "uc");
    CHECK(back.gap_tol == m.gap_tol);
    REQUIRE(back.decisions.size() == m.decisions.size());
    for (std::size_t i = 0; i < m.decisions.size(); ++i) CHECK(back.decisions[i].values == m.decisions[i].values);
}

TEST_CASE("a changed penalty invalidates the cache") {
    auto dir = temp_dir("stale");
    auto inst = make_uc_desk_instance(6, 3);
    UcProblem p(inst.config);
    auto m = build_problem_space_matrix(p, inst.scenarios, 1);
    save_matrix(m, dir / "F.csv");

    auto changed = inst.config;
    changed.shedding_penalty = 1200.0;
    UcProblem q(changed);
    const auto fp = problem_fingerprint(q, inst.scenarios, {});
    CHECK(fp != m.fingerprint);
    CHECK_THROWS_AS(load_matrix(dir / "F.csv", fp), StaleCacheError);
    SolveOptions looser;
    looser.gap_tol = 1e-3;
    CHECK(problem_fingerprint(p, inst.scenarios, looser) != m.fingerprint);
    CHECK(problem_fingerprint(p, inst.scenarios, {}) == m.fingerprint);
}

TEST_CASE("a truncated or corrupt file is a parse error") {
    auto dir = temp_dir("truncated");
    auto inst = make_uc_desk_instance(7, 4);
    UcProblem p(inst.config);
    auto m = build_problem_space_matrix(p, inst.scenarios, 1);
    save_matrix(m, dir / "F.csv");
    const auto text = read_file(dir / "F.csv");

    write_file(dir / "F.csv", text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_matrix(dir / "F.csv"), ParseError);

    write_file(dir / "F.csv", text);
    const auto meta = read_file(meta_path_for(dir / "F.csv"));
    write_file(meta_path_for(dir / "F.csv"), meta.substr(0, meta.size() / 3));
    CHECK_THROWS_AS(load_matrix(dir / "F.csv"), ParseError);
}
