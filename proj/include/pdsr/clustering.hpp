#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pdsr/projection.hpp"
#include "pdsr/scenario.hpp"

namespace pdsr {

/// Problem-driven distance: d(i,j) = c(j,i) + c(i,j) with the opportunity
/// cost c(i,j) = F(i,j) - F(j,j), plus an optional mu * ||xi_i - xi_j||.
struct PddMatrix {
    Eigen::MatrixXd d;
    double mu = 0.0;
    /// Entries above -clamp_tolerance and below 0 were clamped to 0.
    double clamp_tolerance = 0.0;

    int size() const { return static_cast<int>(d.rows()); }
};

/// Throws ValidationError when a distance is more negative than
/// 4 * gap_tol * max|F| (a subproblem was not solved to its claimed accuracy).
PddMatrix compute_pdd(const Eigen::MatrixXd& F, double gap_tol, double mu = 0.0,
                      const ScenarioSet* scenarios = nullptr);
PddMatrix compute_pdd(const ProblemSpaceMatrix& m, double mu = 0.0, const ScenarioSet* scenarios = nullptr);

struct ReductionResult {
    std::string method = "pdsr";
    std::vector<int> representatives;  // ascending scenario indices
    std::vector<int> assignment;       // scenario index -> representative scenario index
    std::vector<double> weights;       // aggregated probability, aligned with representatives
    double spdd = 0.0;
    double objective = 0.0;
    double beta = 0.0;
    std::optional<int> fixed_K;
    double mip_gap = 0.0;
    double seconds = 0.0;  // clustering time, not serialized

    int K() const { return static_cast<int>(representatives.size()); }
    /// Scenario indices in the cluster of representative position k.
    std::vector<int> members(int k) const;
    /// Position of a representative scenario in `representatives`.
    int position_of(int representative) const;
};

/// Builds representatives and weights from an assignment vector. Every
/// representative must be assigned to itself.
ReductionResult make_reduction(std::vector<int> assignment, std::span<const double> gamma, std::string method);

/// Throws ValidationError unless `r` is a valid partition of n scenarios with
/// weights equal to the cluster probability mass.
void validate_reduction(const ReductionResult& r, std::span<const double> gamma);

struct ClusteringOptions {
    double gap_tol = 1e-6;
    double time_limit = 1e30;
};

/// The exact clustering MILP: minimize sum_j l_j + beta * K / N, or sum_j l_j
/// with K fixed when `fixed_K` is given.
ReductionResult solve_clustering(const PddMatrix& d, std::span<const double> gamma, double beta,
                                 std::optional<int> fixed_K = std::nullopt, const ClusteringOptions& options = {});

struct SweepRow {
    double beta = 0.0;
    int K = 0;
    double spdd = 0.0;
    double pddbi = 0.0;  // NaN when K < 2
    double spdd_normalized = 0.0;
    double pddbi_normalized = 0.0;
};

std::vector<SweepRow> sweep_beta(const PddMatrix& d, std::span<const double> gamma, std::span<const double> betas,
                                 int workers = 1, const ClusteringOptions& options = {});

/// `count` log-spaced values from lo to hi inclusive; requires 0 < lo <= hi.
std::vector<double> log_spaced(double lo, double hi, int count);

nlohmann::json to_json(const ReductionResult& r, const ScenarioSet* set = nullptr);
ReductionResult reduction_from_json(const nlohmann::json& j);

}  // namespace pdsr
