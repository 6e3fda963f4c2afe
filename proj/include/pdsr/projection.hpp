#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdsr/tsso.hpp"

namespace pdsr {

/// F(i, j) = F(z*_i, xi_j): the cost of scenario i's optimal first-stage
/// decision when scenario j happens.
struct ProblemSpaceMatrix {
    std::vector<std::string> ids;
    Eigen::MatrixXd F;
    std::vector<FirstStageDecision> decisions;
    std::string problem;
    std::string fingerprint;
    double gap_tol = 1e-4;
    double diagonal_seconds = 0.0;
    double total_seconds = 0.0;

    int size() const { return static_cast<int>(F.rows()); }
    /// Largest F(i,i) - F(j,i) over all i, j (should be <= 0 up to solver tolerance).
    double max_diagonal_excess() const;
};

/// SHA-256 over the canonical problem configuration, the scenario CSV and the
/// solver tolerances.
std::string problem_fingerprint(const TssoProblem& problem, const ScenarioSet& set, const SolveOptions& options);

/// Diagonal solves run first, then every off-diagonal evaluation. The result
/// does not depend on `workers`.
ProblemSpaceMatrix build_problem_space_matrix(const TssoProblem& problem, const ScenarioSet& set, int workers,
                                              const SolveOptions& options = {});

/// Writes `csv_path` and the metadata sidecar returned by meta_path_for().
void save_matrix(const ProblemSpaceMatrix& m, const std::filesystem::path& csv_path);

/// Throws StaleCacheError when `expected_fingerprint` is given and differs,
/// ParseError when either file is malformed.
ProblemSpaceMatrix load_matrix(const std::filesystem::path& csv_path,
                               const std::optional<std::string>& expected_fingerprint = std::nullopt);

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

}  // namespace pdsr
