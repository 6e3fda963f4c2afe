#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pdsr::milp {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class Relation { less_equal, equal, greater_equal };

enum class Status { optimal, infeasible, unbounded, gap_limit };

const char* to_string(Status status);

struct Term {
    int var;
    double coef;
};

/// Affine expression over model variables. Used by the problem builders so a
/// first-stage quantity can be either a variable or a constant.
struct LinExpr {
    std::vector<Term> terms;
    double constant = 0.0;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}  // NOLINT: implicit by intent

    static LinExpr variable(int var, double coef = 1.0) {
        LinExpr e;
        e.terms.push_back({var, coef});
        return e;
    }

    LinExpr& add(int var, double coef) {
        if (coef != 0.0) terms.push_back({var, coef});
        return *this;
    }
    LinExpr& operator+=(const LinExpr& other);
    LinExpr& operator-=(const LinExpr& other);
    LinExpr& operator*=(double scale);
    LinExpr& operator+=(double c) {
        constant += c;
        return *this;
    }

    double evaluate(std::span<const double> values) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr e);

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = inf;
    bool binary = false;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::less_equal;
    double rhs = 0.0;
};

/// A minimization mixed-binary linear program.
class Model {
public:
    int add_variable(std::string name, double lower, double upper);
    int add_binary(std::string name);

    void add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);
    /// Moves the expression constant to the right-hand side.
    void add_constraint(std::string name, const LinExpr& expr, Relation relation, double rhs);

    void add_objective_term(int var, double coef);
    void add_objective(const LinExpr& expr);
    void add_objective_constant(double c) { objective_constant_ += c; }

    void set_bounds(int var, double lower, double upper);

    int num_variables() const { return static_cast<int>(variables_.size()); }
    int num_constraints() const { return static_cast<int>(constraints_.size()); }
    int num_binaries() const;

    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const Variable& variable(int var) const { return variables_.at(var); }
    /// Dense objective coefficients, duplicates summed.
    std::vector<double> objective_coefficients() const;
    double objective_constant() const { return objective_constant_; }

    /// Throws ValidationError when an invariant of the model is broken.
    void validate() const;

    double objective_value(std::span<const double> values) const;
    /// Largest violation of any bound or constraint by `values`.
    double max_violation(std::span<const double> values) const;
    /// Largest distance of a binary variable from {0, 1}.
    double max_integrality_violation(std::span<const double> values) const;

private:
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    std::vector<Term> objective_;
    double objective_constant_ = 0.0;
};

struct BranchTracePoint {
    std::int64_t node;
    double incumbent;
    double lower_bound;
};

struct Solution {
    Status status = Status::infeasible;
    double objective = inf;
    std::vector<double> values;
    double mip_gap = 0.0;
    std::int64_t node_count = 0;
    double best_bound = -inf;
    std::int64_t lp_iterations = 0;
    /// Row multipliers of the final LP (empty for MILP solves).
    std::vector<double> row_duals;
    std::vector<BranchTracePoint> trace;

    bool has_values() const { return !values.empty(); }
};

struct MilpOptions {
    double gap_tol = 1e-4;
    double time_limit = inf;  // seconds
    std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
    bool record_trace = false;
};

/// Solves the LP relaxation (binaries relaxed to [0, 1]).
Solution solve_lp(const Model& model);

/// Best-first branch and bound over LP relaxations.
Solution solve_milp(const Model& model, const MilpOptions& options = {});

/// Lower bound from Lagrangian relaxation of all rows with the given
/// multipliers. Valid for any multipliers; -inf when a needed bound is infinite.
double lagrangian_bound(const Model& model, std::span<const double> row_duals);

std::string to_lp_string(const Model& model);
void export_lp_file(const Model& model, const std::filesystem::path& path);

}  // namespace pdsr::milp
