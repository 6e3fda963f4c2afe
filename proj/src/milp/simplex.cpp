#include "simplex.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <random>
#include <utility>

#include "pdsr/error.hpp"

namespace pdsr::milp::detail {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDegenerateStep = 1e-12;
constexpr std::size_t kRefactorEvery = 100;
constexpr int kStallLimit = 50;
constexpr int kCleanupRounds = 4;

enum class State : unsigned char { basic, at_lower, at_upper, free };

}  // namespace

LpEngine::LpEngine(const Model& model) {
    model.validate();
    n_ = model.num_variables();
    m_ = model.num_constraints();

    std::vector<std::vector<std::pair<int, double>>> cols(n_);
    const auto& rows = model.constraints();
    for (int i = 0; i < m_; ++i)
        for (const auto& t : rows[i].terms) cols[t.var].emplace_back(i, t.coef);

    col_start_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) {
        auto& c = cols[j];
        std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::size_t out = 0;
        for (std::size_t p = 0; p < c.size(); ++p) {
            if (out > 0 && c[out - 1].first == c[p].first)
                c[out - 1].second += c[p].second;
            else
                c[out++] = c[p];
        }
        c.resize(out);
        for (const auto& [i, v] : c) {
            if (v == 0.0) continue;
            row_index_.push_back(i);
            value_.push_back(v);
        }
        col_start_[j + 1] = static_cast<int>(row_index_.size());
    }

    cost_ = model.objective_coefficients();
    constant_ = model.objective_constant();
    row_lo_.resize(m_);
    row_hi_.resize(m_);
    for (int i = 0; i < m_; ++i) {
        const auto& r = rows[i];
        row_lo_[i] = r.relation == Relation::less_equal ? -inf : r.rhs;
        row_hi_[i] = r.relation == Relation::greater_equal ? inf : r.rhs;
    }
    lower_.resize(n_);
    upper_.resize(n_);
    for (int j = 0; j < n_; ++j) {
        lower_[j] = model.variables()[j].lower;
        upper_[j] = model.variables()[j].upper;
    }
}

// Bounded-variable revised primal simplex on the computational form
//   A x - s = 0,  lower <= x <= upper,  row_lo <= s <= row_hi.
// Phase 1 minimizes the sum of basic bound violations (composite method) from
// the all-logical basis. The basis inverse is an Eigen sparse LU plus a
// product-form eta file, refactored every kRefactorEvery pivots.
class SimplexRun {
public:
    SimplexRun(const LpEngine& engine, std::span<const double> lower, std::span<const double> upper)
        : e_(engine), n_(engine.n_), m_(engine.m_), total_(engine.n_ + engine.m_) {
        lb_.resize(total_);
        ub_.resize(total_);
        for (int j = 0; j < n_; ++j) {
            lb_[j] = lower[j];
            ub_[j] = upper[j];
        }
        for (int i = 0; i < m_; ++i) {
            lb_[n_ + i] = e_.row_lo_[i];
            ub_[n_ + i] = e_.row_hi_[i];
        }
        cost_.assign(total_, 0.0);
        std::copy(e_.cost_.begin(), e_.cost_.end(), cost_.begin());
        max_iterations_ = 50LL * total_ + 10000;
    }

    LpResult run(const std::vector<unsigned char>* warm) {
        LpResult result;
        for (int j = 0; j < n_; ++j) {
            if (lb_[j] > ub_[j]) {
                result.status = Status::infeasible;
                return result;
            }
        }
        y_ = Eigen::VectorXd::Zero(m_);
        bool started = false;
        if (warm && load_basis(*warm)) {
            try {
                refactor();
                recompute_primal();
                started = true;
            } catch (const SolverError&) {
            }
        }
        if (!started) {
            slack_basis();
            refactor();
            recompute_primal();
        }

        for (int round = 0; round < kCleanupRounds; ++round) {
            may_perturb_ = round == 0;
            Outcome outcome = iterate(true);
            if (outcome == Outcome::optimal) outcome = iterate(false);
            if (perturbed_) {
                // Verdicts under shifted bounds are provisional: drop the
                // shifts and let the next round repair the basis.
                restore_bounds();
                refactor();
                recompute_primal();
                if (outcome != Outcome::optimal || max_basic_infeasibility() > 10 * kFeasTol) continue;
            } else {
                if (outcome == Outcome::infeasible) {
                    result.status = Status::infeasible;
                    result.iterations = iterations_;
                    return result;
                }
                if (outcome == Outcome::unbounded) {
                    result.status = Status::unbounded;
                    result.objective = -inf;
                    result.iterations = iterations_;
                    return result;
                }
                refactor();
                recompute_primal();
            }
            if (max_basic_infeasibility() <= 10 * kFeasTol) {
                result.status = Status::optimal;
                result.x.assign(x_.begin(), x_.begin() + n_);
                result.y.assign(y_.data(), y_.data() + m_);
                double obj = e_.constant_;
                for (int j = 0; j < n_; ++j) obj += e_.cost_[j] * x_[j];
                result.objective = obj;
                result.iterations = iterations_;
                result.basis.resize(total_);
                for (int j = 0; j < total_; ++j) result.basis[j] = static_cast<unsigned char>(state_[j]);
                return result;
            }
        }
        throw SolverError("simplex could not restore primal feasibility after refactorization");
    }

private:
    void place_nonbasic(int j, State preferred) {
        if (preferred == State::at_upper && std::isfinite(ub_[j])) {
            x_[j] = ub_[j];
            state_[j] = State::at_upper;
        } else if (std::isfinite(lb_[j])) {
            x_[j] = lb_[j];
            state_[j] = State::at_lower;
        } else if (std::isfinite(ub_[j])) {
            x_[j] = ub_[j];
            state_[j] = State::at_upper;
        } else {
            x_[j] = 0.0;
            state_[j] = State::free;
        }
    }

    // Widens the bounds of every basic variable by a small deterministic
    // amount so that degenerate vertices become non-degenerate.
    void perturb_bounds() {
        orig_lb_ = lb_;
        orig_ub_ = ub_;
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> unif(1.0, 2.0);
        for (int k = 0; k < m_; ++k) {
            const int b = head_[k];
            if (std::isfinite(lb_[b])) lb_[b] -= 1e-7 * (1.0 + std::abs(lb_[b])) * unif(rng);
            if (std::isfinite(ub_[b])) ub_[b] += 1e-7 * (1.0 + std::abs(ub_[b])) * unif(rng);
        }
        perturbed_ = true;
        stall_ = 0;
        bland_ = false;
    }

    void restore_bounds() {
        lb_ = std::move(orig_lb_);
        ub_ = std::move(orig_ub_);
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == State::at_lower)
                x_[j] = lb_[j];
            else if (state_[j] == State::at_upper)
                x_[j] = ub_[j];
        }
        perturbed_ = false;
        stall_ = 0;
        bland_ = false;
    }

    void slack_basis() {
        x_.assign(total_, 0.0);
        state_.assign(total_, State::basic);
        pos_.assign(total_, -1);
        head_.resize(m_);
        for (int j = 0; j < n_; ++j) place_nonbasic(j, State::at_lower);
        for (int i = 0; i < m_; ++i) {
            head_[i] = n_ + i;
            pos_[n_ + i] = i;
        }
    }

    bool load_basis(const std::vector<unsigned char>& basis) {
        if (static_cast<int>(basis.size()) != total_) return false;
        const auto basic = static_cast<unsigned char>(State::basic);
        if (std::count(basis.begin(), basis.end(), basic) != m_) return false;
        x_.assign(total_, 0.0);
        state_.assign(total_, State::basic);
        pos_.assign(total_, -1);
        head_.clear();
        for (int j = 0; j < total_; ++j) {
            if (basis[j] == basic) {
                pos_[j] = static_cast<int>(head_.size());
                head_.push_back(j);
            } else {
                place_nonbasic(j, static_cast<State>(basis[j]));
            }
        }
        return true;
    }

    enum class Outcome { optimal, unbounded, infeasible };

    struct Eta {
        int r;
        double pivot;
        std::vector<int> idx;
        std::vector<double> val;
    };

    template <class F>
    void for_col(int j, F&& f) const {
        if (j < n_) {
            for (int p = e_.col_start_[j]; p < e_.col_start_[j + 1]; ++p) f(e_.row_index_[p], e_.value_[p]);
        } else {
            f(j - n_, -1.0);
        }
    }

    double dot_col(int j) const {
        if (j >= n_) return -y_[j - n_];
        double s = 0.0;
        for (int p = e_.col_start_[j]; p < e_.col_start_[j + 1]; ++p) s += e_.value_[p] * y_[e_.row_index_[p]];
        return s;
    }

    void refactor() {
        etas_.clear();
        if (m_ == 0) return;
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<std::size_t>(m_) * 3);
        for (int k = 0; k < m_; ++k) for_col(head_[k], [&](int i, double v) { trips.emplace_back(i, k, v); });
        Eigen::SparseMatrix<double> basis(m_, m_);
        basis.setFromTriplets(trips.begin(), trips.end());
        basis.makeCompressed();
        lu_.compute(basis);
        if (lu_.info() != Eigen::Success)
            throw SolverError("basis factorization failed (numerically singular basis)");
    }

    void ftran(Eigen::VectorXd& v) const {
        if (m_ == 0) return;
        Eigen::VectorXd solved = lu_.solve(v);
        v.swap(solved);
        for (const auto& eta : etas_) {
            const double vr = v[eta.r] / eta.pivot;
            if (vr != 0.0)
                for (std::size_t p = 0; p < eta.idx.size(); ++p) v[eta.idx[p]] -= eta.val[p] * vr;
            v[eta.r] = vr;
        }
    }

    void btran(Eigen::VectorXd& v) {
        if (m_ == 0) return;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = v[it->r];
            for (std::size_t p = 0; p < it->idx.size(); ++p) s -= it->val[p] * v[it->idx[p]];
            v[it->r] = s / it->pivot;
        }
        Eigen::VectorXd solved = lu_.transpose().solve(v);
        v.swap(solved);
    }

    void recompute_primal() {
        if (m_ == 0) return;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == State::basic || x_[j] == 0.0) continue;
            const double xj = x_[j];
            for_col(j, [&](int i, double v) { rhs[i] -= v * xj; });
        }
        ftran(rhs);
        for (int k = 0; k < m_; ++k) x_[head_[k]] = rhs[k];
    }

    double max_basic_infeasibility() const {
        double worst = 0.0;
        for (int k = 0; k < m_; ++k) {
            const int b = head_[k];
            worst = std::max({worst, lb_[b] - x_[b], x_[b] - ub_[b]});
        }
        return worst;
    }

    // Step length at which basic position k stops the move. Returns false when
    // the position does not block. `relaxed` applies the Harris tolerance.
    bool blocking_step(bool phase1, int k, double delta, bool relaxed, double& step, bool& to_lower) const {
        const int b = head_[k];
        const double xb = x_[b];
        const double tol = relaxed ? kFeasTol : 0.0;
        if (phase1 && xb < lb_[b] - kFeasTol) {
            if (delta <= 0.0) return false;
            step = (lb_[b] - xb) / delta;
            to_lower = true;
            return true;
        }
        if (phase1 && xb > ub_[b] + kFeasTol) {
            if (delta >= 0.0) return false;
            step = (xb - ub_[b]) / -delta;
            to_lower = false;
            return true;
        }
        if (delta < 0.0) {
            if (!std::isfinite(lb_[b])) return false;
            step = (xb - lb_[b] + tol) / -delta;
            to_lower = true;
            return true;
        }
        if (!std::isfinite(ub_[b])) return false;
        step = (ub_[b] + tol - xb) / delta;
        to_lower = false;
        return true;
    }

    Outcome iterate(bool phase1) {
        Eigen::VectorXd alpha(m_);
        for (;;) {
            if (++iterations_ > max_iterations_) throw SolverError("simplex iteration limit exceeded");
            if (etas_.size() >= kRefactorEvery) {
                refactor();
                recompute_primal();
            }

            bool any_infeasible = false;
            for (int k = 0; k < m_; ++k) {
                const int b = head_[k];
                double cb = cost_[b];
                if (phase1) {
                    cb = 0.0;
                    if (x_[b] < lb_[b] - kFeasTol)
                        cb = -1.0;
                    else if (x_[b] > ub_[b] + kFeasTol)
                        cb = 1.0;
                    any_infeasible = any_infeasible || cb != 0.0;
                }
                y_[k] = cb;
            }
            if (phase1 && !any_infeasible) return Outcome::optimal;
            btran(y_);

            // Pricing: Dantzig, or lowest eligible index while stalling.
            int q = -1;
            double dq = 0.0;
            double best = 0.0;
            for (int j = 0; j < total_; ++j) {
                const State s = state_[j];
                if (s == State::basic || lb_[j] == ub_[j]) continue;
                const double d = (phase1 ? 0.0 : cost_[j]) - dot_col(j);
                bool eligible = false;
                if (s == State::at_lower)
                    eligible = d < -kDualTol;
                else if (s == State::at_upper)
                    eligible = d > kDualTol;
                else
                    eligible = std::abs(d) > kDualTol;
                if (!eligible) continue;
                if (bland_) {
                    q = j;
                    dq = d;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    q = j;
                    dq = d;
                }
            }
            if (q < 0) return phase1 ? Outcome::infeasible : Outcome::optimal;
            const double dir = dq < 0.0 ? 1.0 : -1.0;

            alpha.setZero();
            for_col(q, [&](int i, double v) { alpha[i] = v; });
            ftran(alpha);

            const double range = ub_[q] - lb_[q];
            int r = -1;
            bool r_to_lower = true;
            double theta = 0.0;
            if (!bland_) {
                double theta_max = inf;
                for (int k = 0; k < m_; ++k) {
                    if (std::abs(alpha[k]) < kPivotTol) continue;
                    double step;
                    bool lower;
                    if (blocking_step(phase1, k, -dir * alpha[k], true, step, lower))
                        theta_max = std::min(theta_max, step);
                }
                if (std::isfinite(range) && range <= theta_max) {
                    theta = range;
                } else {
                    if (!std::isfinite(theta_max)) {
                        if (phase1) throw SolverError("phase 1 ray without a breakpoint");
                        return Outcome::unbounded;
                    }
                    double best_pivot = 0.0;
                    for (int k = 0; k < m_; ++k) {
                        const double a = std::abs(alpha[k]);
                        if (a < kPivotTol) continue;
                        double step;
                        bool lower;
                        if (!blocking_step(phase1, k, -dir * alpha[k], false, step, lower)) continue;
                        if (step <= theta_max && a > best_pivot) {
                            best_pivot = a;
                            r = k;
                            r_to_lower = lower;
                            theta = std::max(step, 0.0);
                        }
                    }
                }
            } else {
                double theta_min = inf;
                int best_index = -1;
                for (int k = 0; k < m_; ++k) {
                    if (std::abs(alpha[k]) < kPivotTol) continue;
                    double step;
                    bool lower;
                    if (!blocking_step(phase1, k, -dir * alpha[k], false, step, lower)) continue;
                    step = std::max(step, 0.0);
                    if (step < theta_min - kDegenerateStep ||
                        (step <= theta_min + kDegenerateStep && head_[k] < best_index)) {
                        theta_min = std::min(step, theta_min);
                        best_index = head_[k];
                        r = k;
                        r_to_lower = lower;
                    }
                }
                if (std::isfinite(range) && range <= theta_min) {
                    r = -1;
                    theta = range;
                } else if (r < 0) {
                    if (phase1) throw SolverError("phase 1 ray without a breakpoint");
                    return Outcome::unbounded;
                } else {
                    theta = theta_min;
                }
            }

            // Apply the step.
            if (theta != 0.0) {
                x_[q] += dir * theta;
                for (int k = 0; k < m_; ++k)
                    if (alpha[k] != 0.0) x_[head_[k]] -= dir * alpha[k] * theta;
            }
            if (theta <= kDegenerateStep) {
                if (++stall_ > kStallLimit) {
                    if (may_perturb_ && !perturbed_)
                        perturb_bounds();
                    else
                        bland_ = true;
                }
            } else {
                stall_ = 0;
                bland_ = false;
            }

            if (r < 0) {
                // Bound flip of the entering variable.
                if (state_[q] == State::at_lower) {
                    state_[q] = State::at_upper;
                    x_[q] = ub_[q];
                } else {
                    state_[q] = State::at_lower;
                    x_[q] = lb_[q];
                }
                continue;
            }

            const int leaving = head_[r];
            if (r_to_lower) {
                x_[leaving] = lb_[leaving];
                state_[leaving] = State::at_lower;
            } else {
                x_[leaving] = ub_[leaving];
                state_[leaving] = lb_[leaving] == ub_[leaving] ? State::at_lower : State::at_upper;
            }
            pos_[leaving] = -1;
            head_[r] = q;
            pos_[q] = r;
            state_[q] = State::basic;

            Eta eta;
            eta.r = r;
            eta.pivot = alpha[r];
            for (int k = 0; k < m_; ++k) {
                if (k != r && alpha[k] != 0.0) {
                    eta.idx.push_back(k);
                    eta.val.push_back(alpha[k]);
                }
            }
            etas_.push_back(std::move(eta));
            if (std::abs(alpha[r]) < 1e-7) {
                refactor();
                recompute_primal();
            }
        }
    }

    const LpEngine& e_;
    const int n_;
    const int m_;
    const int total_;
    std::vector<double> lb_, ub_, x_, cost_;
    std::vector<State> state_;
    std::vector<int> head_, pos_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    std::vector<Eta> etas_;
    Eigen::VectorXd y_;
    std::int64_t iterations_ = 0;
    std::int64_t max_iterations_ = 0;
    bool bland_ = false;
    int stall_ = 0;
    bool may_perturb_ = false;
    bool perturbed_ = false;
    std::vector<double> orig_lb_, orig_ub_;
};

LpResult LpEngine::solve(std::span<const double> lower, std::span<const double> upper,
                         const std::vector<unsigned char>* warm) const {
    SimplexRun run(*this, lower, upper);
    return run.run(warm);
}

}  // namespace pdsr::milp::detail
