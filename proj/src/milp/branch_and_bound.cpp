#include <chrono>
#include <cmath>
#include <memory>
#include <queue>
#include <utility>

#include "pdsr/error.hpp"
#include "pdsr/milp.hpp"
#include "simplex.hpp"

namespace pdsr::milp {

namespace {

using detail::LpEngine;
using detail::LpResult;

constexpr double kIntTol = 1e-6;
constexpr double kSnapTol = 1e-7;
constexpr std::int64_t kHeuristicEvery = 50;

using Basis = std::shared_ptr<const std::vector<unsigned char>>;

struct Node {
    double bound;
    std::int64_t id;
    std::vector<std::pair<int, double>> fixings;
    Basis basis;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

double relative_gap(double incumbent, double bound) {
    if (incumbent - bound <= 1e-9) return 0.0;
    return (incumbent - bound) / std::max(std::abs(incumbent), 1e-10);
}

class BranchAndBound {
public:
    BranchAndBound(const Model& model, const MilpOptions& options)
        : model_(model), options_(options), engine_(model), start_(std::chrono::steady_clock::now()) {
        for (int j = 0; j < model.num_variables(); ++j)
            if (model.variable(j).binary) binaries_.push_back(j);
    }

    Solution run() {
        Solution out;
        LpResult root = solve_with({}, nullptr);
        node_count_ = 1;
        if (root.status != Status::optimal) {
            out.status = root.status;
            out.objective = root.status == Status::unbounded ? -inf : inf;
            out.best_bound = out.objective;
            out.node_count = node_count_;
            out.lp_iterations = lp_iterations_;
            return out;
        }
        auto root_basis = std::make_shared<const std::vector<unsigned char>>(std::move(root.basis));
        bool limited = false;
        double open_bound = inf;

        if (process(root, {}, root_basis)) {
            while (!queue_.empty()) {
                if (elapsed() > options_.time_limit || node_count_ >= options_.node_limit) {
                    limited = true;
                    open_bound = queue_.top().bound;
                    break;
                }
                Node node = queue_.top();
                queue_.pop();
                if (prunable(node.bound)) {
                    pruned_bound_ = std::min(pruned_bound_, node.bound);
                    continue;
                }
                LpResult r = solve_with(node.fixings, node.basis.get());
                ++node_count_;
                if (r.status == Status::unbounded) throw SolverError("unbounded relaxation below a bounded root");
                if (r.status != Status::optimal) continue;
                auto basis = std::make_shared<const std::vector<unsigned char>>(std::move(r.basis));
                process(r, node.fixings, basis);
                if (options_.record_trace) record_trace();
            }
        }

        out.node_count = node_count_;
        out.lp_iterations = lp_iterations_;
        out.trace = std::move(trace_);
        if (!std::isfinite(incumbent_)) {
            out.status = limited ? Status::gap_limit : Status::infeasible;
            out.best_bound = limited ? open_bound : inf;
            return out;
        }
        out.values = incumbent_x_;
        out.objective = incumbent_;
        out.best_bound = std::min({incumbent_, pruned_bound_, open_bound});
        out.mip_gap = relative_gap(incumbent_, out.best_bound);
        out.status = limited && out.mip_gap > options_.gap_tol ? Status::gap_limit : Status::optimal;
        if (options_.record_trace) out.trace.push_back({node_count_, incumbent_, out.best_bound});
        return out;
    }

private:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    bool prunable(double bound) const {
        return std::isfinite(incumbent_) && bound >= incumbent_ - options_.gap_tol * std::abs(incumbent_);
    }

    LpResult solve_with(const std::vector<std::pair<int, double>>& fixings, const std::vector<unsigned char>* warm) {
        std::vector<double> lo = engine_.lower();
        std::vector<double> up = engine_.upper();
        for (const auto& [var, value] : fixings) lo[var] = up[var] = value;
        LpResult r = engine_.solve(lo, up, warm);
        lp_iterations_ += r.iterations;
        return r;
    }

    // Handles a solved node. Returns false when the node is fathomed.
    bool process(const LpResult& r, const std::vector<std::pair<int, double>>& fixings, const Basis& basis) {
        if (prunable(r.objective)) {
            pruned_bound_ = std::min(pruned_bound_, r.objective);
            return false;
        }
        int branch = -1;
        double most = kIntTol;
        for (int j : binaries_) {
            const double frac = std::abs(r.x[j] - std::round(r.x[j]));
            if (frac > most) {
                most = frac;
                branch = j;
            }
        }
        if (branch < 0) {
            offer(r.x, basis.get());
            return false;
        }
        if (node_count_ == 1 || node_count_ % kHeuristicEvery == 0) round_and_fix(r.x, basis.get());
        if (prunable(r.objective)) {
            pruned_bound_ = std::min(pruned_bound_, r.objective);
            return false;
        }
        for (double value : {0.0, 1.0}) {
            Node child{r.objective, next_id_++, fixings, basis};
            child.fixings.emplace_back(branch, value);
            queue_.push(std::move(child));
        }
        return true;
    }

    void round_and_fix(const std::vector<double>& x, const std::vector<unsigned char>* warm) {
        std::vector<std::pair<int, double>> fixings;
        fixings.reserve(binaries_.size());
        for (int j : binaries_) fixings.emplace_back(j, std::round(x[j]) > 0.5 ? 1.0 : 0.0);
        LpResult r = solve_with(fixings, warm);
        if (r.status == Status::optimal) offer(r.x, nullptr);
    }

    // Snaps binaries to exact 0/1 and adopts the point when it improves the
    // incumbent. A point that no longer satisfies the rows after snapping is
    // repaired by re-solving with the binaries fixed.
    void offer(std::vector<double> x, const std::vector<unsigned char>* warm) {
        for (int j : binaries_) x[j] = std::round(x[j]) > 0.5 ? 1.0 : 0.0;
        if (model_.max_violation(x) > kSnapTol) {
            std::vector<std::pair<int, double>> fixings;
            for (int j : binaries_) fixings.emplace_back(j, x[j]);
            LpResult r = solve_with(fixings, warm);
            if (r.status != Status::optimal) return;
            x = std::move(r.x);
            for (int j : binaries_) x[j] = std::round(x[j]) > 0.5 ? 1.0 : 0.0;
        }
        const double obj = model_.objective_value(x);
        if (obj < incumbent_) {
            incumbent_ = obj;
            incumbent_x_ = std::move(x);
            if (options_.record_trace) record_trace();
        }
    }

    void record_trace() {
        double lower = std::min(incumbent_, pruned_bound_);
        if (!queue_.empty()) lower = std::min(lower, queue_.top().bound);
        trace_.push_back({node_count_, incumbent_, lower});
    }

    const Model& model_;
    const MilpOptions& options_;
    LpEngine engine_;
    std::chrono::steady_clock::time_point start_;
    std::vector<int> binaries_;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> queue_;
    double incumbent_ = inf;
    std::vector<double> incumbent_x_;
    double pruned_bound_ = inf;
    std::int64_t node_count_ = 0;
    std::int64_t next_id_ = 1;
    std::int64_t lp_iterations_ = 0;
    std::vector<BranchTracePoint> trace_;
};

}  // namespace

Solution solve_lp(const Model& model) {
    LpEngine engine(model);
    LpResult r = engine.solve();
    Solution s;
    s.status = r.status;
    s.lp_iterations = r.iterations;
    s.node_count = 1;
    if (r.status == Status::optimal) {
        s.objective = r.objective;
        s.best_bound = r.objective;
        s.values = std::move(r.x);
        s.row_duals = std::move(r.y);
    } else if (r.status == Status::unbounded) {
        s.objective = -inf;
        s.best_bound = -inf;
    } else {
        s.objective = inf;
        s.best_bound = inf;
    }
    return s;
}

Solution solve_milp(const Model& model, const MilpOptions& options) {
    if (options.gap_tol < 0.0) throw ValidationError("gap tolerance must be non-negative");
    if (model.num_binaries() == 0) return solve_lp(model);
    BranchAndBound bb(model, options);
    return bb.run();
}

}  // namespace pdsr::milp
