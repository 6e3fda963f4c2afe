#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pdsr/clustering.hpp"
#include "pdsr/scenario.hpp"

namespace pdsr {

/// Scenarios flattened to rows of length U*T and z-scored per source over
/// every scenario and period.
struct FlatScenarios {
    Eigen::MatrixXd x;          // N x (U*T)
    std::vector<double> mean;   // per source
    std::vector<double> scale;  // per source; 1 when the source is constant
    int horizon = 0;

    Eigen::MatrixXd inverse() const;
};

FlatScenarios standardize(const ScenarioSet& set);

/// Lloyd iterations from k-means++ seeds, best SSE over `restarts`; each
/// centroid is then replaced by its nearest member scenario.
ReductionResult kmeans_reduce(const ScenarioSet& set, int K, std::uint64_t seed, int restarts = 10, int workers = 1);

/// PAM (BUILD then SWAP) on Euclidean distances between standardized
/// scenarios. PAM is deterministic, so the seed has no effect.
ReductionResult kmedoids_reduce(const ScenarioSet& set, int K, std::uint64_t seed);

/// Average-linkage agglomerative clustering cut at K clusters; the medoid
/// of each cluster represents it.
ReductionResult hierarchical_reduce(const ScenarioSet& set, int K);

/// Merge heights of the full average-linkage dendrogram, in merge order.
std::vector<double> average_linkage_heights(const Eigen::MatrixXd& points);

/// Severity of each scenario: max over t of (sum of standardized loads minus
/// sum of standardized RES).
std::vector<double> severity_scores(const ScenarioSet& set);

/// The K most severe scenarios (ties by index); every other scenario joins
/// its nearest representative.
ReductionResult worst_case_select(const ScenarioSet& set, int K);

/// Sum of squared distances from each point to its cluster mean.
double within_cluster_sse(const Eigen::MatrixXd& points, const std::vector<int>& labels);

}  // namespace pdsr
