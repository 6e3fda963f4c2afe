#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "pdsr/baselines.hpp"
#include "pdsr/error.hpp"

using namespace pdsr;

namespace {

/// Each point becomes a one-source scenario over two periods, so the
/// standardized space is the point cloud up to a uniform scale.
ScenarioSet planar(const std::vector<std::pair<double, double>>& pts) {
    std::vector<Scenario> sc;
    for (std::size_t i = 0; i < pts.size(); ++i) sc.push_back({"p" + std::to_string(i), {pts[i].first, pts[i].second}});
    const int n = static_cast<int>(pts.size());
    return ScenarioSet({"load1"}, 2, std::move(sc), std::vector<double>(n, 1.0 / n));
}

std::vector<std::pair<double, double>> random_points(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng));
    return pts;
}

double best_two_cluster_sse(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.rows());
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << (n - 1)); ++mask) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = (mask >> i) & 1u;
        best = std::min(best, within_cluster_sse(x, labels));
    }
    return best;
}

double medoid_cost(const Eigen::MatrixXd& x, const std::vector<int>& medoids) {
    double total = 0.0;
    for (int i = 0; i < x.rows(); ++i) {
        double m = std::numeric_limits<double>::infinity();
        for (int j : medoids) m = std::min(m, (x.row(i) - x.row(j)).norm());
        total += m;
    }
    return total;
}

double best_medoid_cost(const Eigen::MatrixXd& x, int K) {
    const int n = static_cast<int>(x.rows());
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != K) continue;
        std::vector<int> m;
        for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) m.push_back(j);
        best = std::min(best, medoid_cost(x, m));
    }
    return best;
}

std::set<std::set<int>> groups(const ReductionResult& r) {
    std::set<std::set<int>> out;
    for (int k = 0; k < r.K(); ++k) {
        auto m = r.members(k);
        out.insert(std::set<int>(m.begin(), m.end()));
    }
    return out;
}

const std::vector<std::pair<double, double>> kSeparated{{0, 0}, {0.2, 0.1}, {0.1, 0.3}, {50, 50}, {50.3, 49.9},
                                                        {49.8, 50.2}};
const std::set<std::set<int>> kSeparatedGroups{{0, 1, 2}, {3, 4, 5}};

}  // namespace

TEST_CASE("standardization is exactly invertible") {
    std::vector<Scenario> sc{{"a", {1, 2, 30, 40}}, {"b", {3, 1, 35, 45}}, {"c", {2, 2, 20, 20}}};
    ScenarioSet set({"wt1", "price"}, 2, sc, {0.2, 0.3, 0.5});
    auto flat = standardize(set);
    auto back = flat.inverse();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k) CHECK(back(i, k) == doctest::Approx(sc[i].values[k]).epsilon(1e-14));
    // Each source has zero mean and unit population variance.
    for (int u = 0; u < 2; ++u) {
        double mean = 0.0, sq = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int t = 0; t < 2; ++t) mean += flat.x(i, u * 2 + t) / 6.0;
        for (int i = 0; i < 3; ++i)
            for (int t = 0; t < 2; ++t) sq += std::pow(flat.x(i, u * 2 + t) - mean, 2) / 6.0;
        CHECK(std::abs(mean) <= 1e-12);
        CHECK(sq == doctest::Approx(1.0));
    }
    std::vector<Scenario> flat_sc{{"a", {2, 2}}, {"b", {2, 2}}};
    auto constant = standardize(ScenarioSet({"load1"}, 2, flat_sc, {0.5, 0.5}));
    CHECK(constant.scale[0] == 1.0);
}

TEST_CASE("separated groups are recovered by every clustering baseline") {
    auto set = planar(kSeparated);
    CHECK(groups(kmeans_reduce(set, 2, 1)) == kSeparatedGroups);
    CHECK(groups(kmedoids_reduce(set, 2, 1)) == kSeparatedGroups);
    CHECK(groups(hierarchical_reduce(set, 2)) == kSeparatedGroups);
    for (const auto& r : {kmeans_reduce(set, 2, 1), kmedoids_reduce(set, 2, 1), hierarchical_reduce(set, 2)})
        CHECK_NOTHROW(validate_reduction(r, set.probabilities()));
}

TEST_CASE("K equal to N keeps every scenario") {
    std::mt19937_64 rng(2);
    auto set = planar(random_points(rng, 7));
    for (const auto& r : {kmeans_reduce(set, 7, 3), kmedoids_reduce(set, 7, 3), hierarchical_reduce(set, 7),
                          worst_case_select(set, 7)}) {
        CHECK(r.K() == 7);
        for (int i = 0; i < 7; ++i) CHECK(r.assignment[i] == i);
    }
    CHECK_THROWS(kmeans_reduce(set, 8, 1));
    CHECK_THROWS(worst_case_select(set, 0));
}

TEST_CASE("k-means is within 5% of the best two-cluster partition") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(seed);
        auto set = planar(random_points(rng, 8));
        auto flat = standardize(set);
        auto r = kmeans_reduce(set, 2, seed);
        const double sse = within_cluster_sse(flat.x, r.assignment);
        CHECK(sse <= 1.05 * best_two_cluster_sse(flat.x) + 1e-12);
        CHECK(r.method == "km-e");
    }
}

TEST_CASE("k-means representatives are the members nearest each centroid") {
    std::mt19937_64 rng(8);
    auto set = planar(random_points(rng, 12));
    auto flat = standardize(set);
    auto r = kmeans_reduce(set, 3, 4);
    for (int k = 0; k < r.K(); ++k) {
        auto m = r.members(k);
        Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(flat.x.cols());
        for (int i : m) c += flat.x.row(i);
        c /= static_cast<double>(m.size());
        for (int i : m) CHECK((flat.x.row(r.representatives[k]) - c).norm() <= (flat.x.row(i) - c).norm() + 1e-12);
    }
    CHECK(kmeans_reduce(set, 3, 4).assignment == r.assignment);
}

TEST_CASE("PAM is within 5% of the best medoid set") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 rng(100 + seed);
        auto set = planar(random_points(rng, 8));
        auto flat = standardize(set);
        const int K = 2 + static_cast<int>(seed % 2);
        auto r = kmedoids_reduce(set, K, seed);
        CHECK(medoid_cost(flat.x, r.representatives) <= 1.05 * best_medoid_cost(flat.x, K) + 1e-12);
        CHECK(r.method == "kd-e");
    }
}

TEST_CASE("average linkage merges the closest pair first") {
    auto set = planar({{0, 0}, {1, 0}, {3, 0}});
    auto r = hierarchical_reduce(set, 2);
    CHECK(groups(r) == std::set<std::set<int>>{{0, 1}, {2}});
    CHECK(r.method == "hc");
}

TEST_CASE("dendrogram heights never decrease") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        auto pts = random_points(rng, 9);
        auto flat = standardize(planar(pts));
        auto h = average_linkage_heights(flat.x);
        REQUIRE(h.size() == 8u);
        for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] >= h[k - 1] - 1e-12);
    }
}

TEST_CASE("hierarchical representatives are cluster medoids") {
    std::mt19937_64 rng(14);
    auto set = planar(random_points(rng, 10));
    auto flat = standardize(set);
    auto r = hierarchical_reduce(set, 3);
    for (int k = 0; k < r.K(); ++k) {
        auto m = r.members(k);
        auto cost = [&](int c) {
            double s = 0.0;
            for (int i : m) s += (flat.x.row(i) - flat.x.row(c)).norm();
            return s;
        };
        for (int i : m) CHECK(cost(r.representatives[k]) <= cost(i) + 1e-12);
    }
}

TEST_CASE("worst-case selection picks the most severe scenarios") {
    std::vector<Scenario> sc;
    for (int i = 0; i < 6; ++i) sc.push_back({"s" + std::to_string(i), {5, 5, 1, 1}});
    sc[3].values = {5, 12, 1, 1};  // load spike
    sc[5].values = {5, 5, 0, 0.2};  // wind drought
    ScenarioSet set({"load1", "wt1"}, 2, sc, std::vector<double>(6, 1.0 / 6));
    auto sev = severity_scores(set);
    CHECK(std::max_element(sev.begin(), sev.end()) - sev.begin() == 3);
    auto r = worst_case_select(set, 1);
    CHECK(r.representatives == std::vector<int>{3});
    auto r2 = worst_case_select(set, 2);
    CHECK(r2.representatives == std::vector<int>{3, 5});
    CHECK(r2.method == "ws");
    CHECK_NOTHROW(validate_reduction(r2, set.probabilities()));
}
