#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdsr/milp.hpp"

namespace pdsr::milp::detail {

struct LpResult {
    Status status = Status::infeasible;
    double objective = inf;
    std::vector<double> x;  // structural values
    std::vector<double> y;  // row multipliers
    std::int64_t iterations = 0;
    std::vector<unsigned char> basis;  // per column and logical, for warm starts
};

/// Column-compressed copy of a model, reusable across many solves that only
/// differ in variable bounds (branch and bound nodes).
class LpEngine {
public:
    explicit LpEngine(const Model& model);

    /// `warm` is a basis returned by an earlier solve; it is ignored when it
    /// cannot be factorized.
    LpResult solve(std::span<const double> lower, std::span<const double> upper,
                   const std::vector<unsigned char>* warm = nullptr) const;
    LpResult solve() const { return solve(lower_, upper_); }

    int num_cols() const { return n_; }
    int num_rows() const { return m_; }
    const std::vector<double>& lower() const { return lower_; }
    const std::vector<double>& upper() const { return upper_; }

private:
    friend class SimplexRun;

    int n_ = 0;
    int m_ = 0;
    std::vector<int> col_start_;
    std::vector<int> row_index_;
    std::vector<double> value_;
    std::vector<double> cost_;
    double constant_ = 0.0;
    std::vector<double> row_lo_;
    std::vector<double> row_hi_;
    std::vector<double> lower_;
    std::vector<double> upper_;
};

}  // namespace pdsr::milp::detail
