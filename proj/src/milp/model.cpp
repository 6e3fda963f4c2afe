#include "pdsr/milp.hpp"

#include <algorithm>
#include <cmath>

#include "pdsr/error.hpp"

namespace pdsr::milp {

const char* to_string(Status status) {
    switch (status) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::unbounded: return "unbounded";
        case Status::gap_limit: return "gap_limit";
    }
    return "unknown";
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
    terms.insert(terms.end(), other.terms.begin(), other.terms.end());
    constant += other.constant;
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
    for (const auto& t : other.terms) terms.push_back({t.var, -t.coef});
    constant -= other.constant;
    return *this;
}

LinExpr& LinExpr::operator*=(double scale) {
    for (auto& t : terms) t.coef *= scale;
    constant *= scale;
    return *this;
}

double LinExpr::evaluate(std::span<const double> values) const {
    double v = constant;
    for (const auto& t : terms) v += t.coef * values[t.var];
    return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr e) { return e *= s; }

int Model::add_variable(std::string name, double lower, double upper) {
    variables_.push_back({std::move(name), lower, upper, false});
    return num_variables() - 1;
}

int Model::add_binary(std::string name) {
    variables_.push_back({std::move(name), 0.0, 1.0, true});
    return num_variables() - 1;
}

void Model::add_constraint(std::string name, std::vector<Term> terms, Relation relation, double rhs) {
    constraints_.push_back({std::move(name), std::move(terms), relation, rhs});
}

void Model::add_constraint(std::string name, const LinExpr& expr, Relation relation, double rhs) {
    add_constraint(std::move(name), expr.terms, relation, rhs - expr.constant);
}

void Model::add_objective_term(int var, double coef) {
    if (coef != 0.0) objective_.push_back({var, coef});
}

void Model::add_objective(const LinExpr& expr) {
    for (const auto& t : expr.terms) add_objective_term(t.var, t.coef);
    objective_constant_ += expr.constant;
}

void Model::set_bounds(int var, double lower, double upper) {
    auto& v = variables_.at(var);
    v.lower = lower;
    v.upper = upper;
}

int Model::num_binaries() const {
    return static_cast<int>(std::count_if(variables_.begin(), variables_.end(),
                                          [](const Variable& v) { return v.binary; }));
}

std::vector<double> Model::objective_coefficients() const {
    std::vector<double> c(variables_.size(), 0.0);
    for (const auto& t : objective_) c[t.var] += t.coef;
    return c;
}

void Model::validate() const {
    const int n = num_variables();
    for (const auto& v : variables_) {
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper)
            throw ValidationError("variable " + v.name + " has invalid bounds");
        if (v.binary && (v.lower < 0.0 || v.upper > 1.0))
            throw ValidationError("binary variable " + v.name + " has bounds outside [0,1]");
        if (v.lower == inf || v.upper == -inf)
            throw ValidationError("variable " + v.name + " has an empty domain");
    }
    auto check_terms = [n](const std::vector<Term>& terms, const std::string& where) {
        for (const auto& t : terms) {
            if (t.var < 0 || t.var >= n) throw ValidationError(where + " references an undeclared variable");
            if (!std::isfinite(t.coef)) throw ValidationError(where + " has a non-finite coefficient");
        }
    };
    check_terms(objective_, "objective");
    if (!std::isfinite(objective_constant_)) throw ValidationError("objective constant is not finite");
    for (const auto& c : constraints_) {
        check_terms(c.terms, "constraint " + c.name);
        if (!std::isfinite(c.rhs)) throw ValidationError("constraint " + c.name + " has a non-finite rhs");
    }
}

double Model::objective_value(std::span<const double> values) const {
    double v = objective_constant_;
    for (const auto& t : objective_) v += t.coef * values[t.var];
    return v;
}

double Model::max_violation(std::span<const double> values) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        worst = std::max(worst, variables_[j].lower - values[j]);
        worst = std::max(worst, values[j] - variables_[j].upper);
    }
    for (const auto& c : constraints_) {
        double lhs = 0.0;
        for (const auto& t : c.terms) lhs += t.coef * values[t.var];
        switch (c.relation) {
            case Relation::less_equal: worst = std::max(worst, lhs - c.rhs); break;
            case Relation::greater_equal: worst = std::max(worst, c.rhs - lhs); break;
            case Relation::equal: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
        }
    }
    return worst;
}

double Model::max_integrality_violation(std::span<const double> values) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (!variables_[j].binary) continue;
        worst = std::max(worst, std::abs(values[j] - std::round(values[j])));
    }
    return worst;
}

double lagrangian_bound(const Model& model, std::span<const double> row_duals) {
    // L(x, s, y) = c'x - y'(Ax - s) minimized over the variable and row boxes.
    std::vector<double> reduced = model.objective_coefficients();
    double bound = model.objective_constant();
    const auto& rows = model.constraints();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double y = row_duals[i];
        if (y == 0.0) continue;
        for (const auto& t : rows[i].terms) reduced[t.var] -= y * t.coef;
        double lo = -inf;
        double hi = inf;
        if (rows[i].relation != Relation::less_equal) lo = rows[i].rhs;
        if (rows[i].relation != Relation::greater_equal) hi = rows[i].rhs;
        const double s = y > 0.0 ? lo : hi;
        if (!std::isfinite(s)) return -inf;
        bound += y * s;
    }
    for (std::size_t j = 0; j < reduced.size(); ++j) {
        const double d = reduced[j];
        if (d == 0.0) continue;
        const auto& v = model.variables()[j];
        const double x = d > 0.0 ? v.lower : v.upper;
        if (!std::isfinite(x)) return -inf;
        bound += d * x;
    }
    return bound;
}

}  // namespace pdsr::milp
