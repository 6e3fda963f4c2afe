#include "doctest.h"
#include "pdsr/adn.hpp"
#include "pdsr/evaluation.hpp"

using namespace pdsr;

TEST_CASE("PDSR beats k-means on most seeded feeder instances") {
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto inst = make_desk_instance(seed, 20);
        AdnProblem p(inst.config);
        const auto F = build_problem_space_matrix(p, inst.scenarios, 1);
        CompareOptions o;
        o.K = 3;
        o.evaluate.scenario_effectiveness = false;
        const auto t = compare_methods(p, inst.scenarios, F, {"pdsr", "km-e"}, o);
        REQUIRE(t.rows[1].og.og_pct);
        REQUIRE(t.rows[2].og.og_pct);
        const double a = *t.rows[1].og.og_pct, b = *t.rows[2].og.og_pct;
        MESSAGE("seed " << seed << ": pdsr " << a << "%, km-e " << b << "%");
        wins += a < b;
    }
    CHECK(wins >= 8);
}
