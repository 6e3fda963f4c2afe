#include "pdsr/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pdsr/error.hpp"
#include "pdsr/evaluation.hpp"
#include "pdsr/parallel.hpp"

namespace pdsr {

namespace {

using Clock = std::chrono::steady_clock;

void check_k(const ScenarioSet& set, int K) {
    if (K < 1 || K > set.size()) throw ValidationError("K must lie in [1, N]");
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
    return d;
}

// Turns cluster labels into a reduction whose representative for each label
// is `rep_of_label[label]`.
ReductionResult from_labels(const ScenarioSet& set, const std::vector<int>& labels, const std::vector<int>& rep_of_label,
                            const std::string& method, Clock::time_point start) {
    std::vector<int> assignment(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) assignment[i] = rep_of_label[labels[i]];
    ReductionResult r = make_reduction(std::move(assignment), set.probabilities(), method);
    r.fixed_K = r.K();
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

int medoid_of(const Eigen::MatrixXd& d, const std::vector<int>& members) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int a : members) {
        double cost = 0.0;
        for (int b : members) cost += d(a, b);
        if (cost < best_cost) {
            best_cost = cost;
            best = a;
        }
    }
    return best;
}

struct LloydRun {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double sse = std::numeric_limits<double>::infinity();
};

LloydRun lloyd(const Eigen::MatrixXd& x, int K, std::uint64_t seed) {
    const int n = static_cast<int>(x.rows());
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd centers(K, x.cols());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    int first = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
    centers.row(0) = x.row(first);
    for (int k = 1; k < K; ++k) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (x.row(i) - centers.row(k - 1)).squaredNorm());
            total += d2[i];
        }
        int pick = n - 1;
        if (total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (int i = 0; i < n; ++i) {
                if (u < d2[i]) {
                    pick = i;
                    break;
                }
                u -= d2[i];
            }
        } else {
            pick = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
        }
        centers.row(k) = x.row(pick);
    }

    std::vector<int> labels(n, -1);
    for (int iter = 0; iter < 300; ++iter) {
        bool changed = false;
        std::vector<double> dist(n);
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                const double v = (x.row(i) - centers.row(k)).squaredNorm();
                if (v < best_d) {
                    best_d = v;
                    best = k;
                }
            }
            dist[i] = best_d;
            if (labels[i] != best) {
                labels[i] = best;
                changed = true;
            }
        }
        std::vector<int> count(K, 0);
        for (int l : labels) ++count[l];
        for (int k = 0; k < K; ++k) {
            if (count[k] > 0) continue;
            // Empty cluster: move the point farthest from its center here.
            int far = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
            --count[labels[far]];
            labels[far] = k;
            count[k] = 1;
            dist[far] = 0.0;
            changed = true;
        }
        centers.setZero();
        for (int i = 0; i < n; ++i) centers.row(labels[i]) += x.row(i);
        for (int k = 0; k < K; ++k)
            if (count[k] > 0) centers.row(k) /= count[k];
        if (!changed) break;
    }
    LloydRun run;
    run.labels = std::move(labels);
    run.centers = std::move(centers);
    run.sse = within_cluster_sse(x, run.labels);
    return run;
}

}  // namespace

Eigen::MatrixXd FlatScenarios::inverse() const {
    Eigen::MatrixXd out = x;
    for (int c = 0; c < out.cols(); ++c) {
        const int u = c / horizon;
        out.col(c) = (x.col(c).array() * scale[u] + mean[u]).matrix();
    }
    return out;
}

FlatScenarios standardize(const ScenarioSet& set) {
    const int n = set.size(), U = set.num_sources(), T = set.horizon();
    FlatScenarios f;
    f.horizon = T;
    f.x.resize(n, U * T);
    f.mean.assign(U, 0.0);
    f.scale.assign(U, 1.0);
    for (int u = 0; u < U; ++u) {
        double sum = 0.0;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < T; ++t) sum += set.value(i, u, t);
        const double mean = sum / (n * T);
        double ss = 0.0;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < T; ++t) ss += (set.value(i, u, t) - mean) * (set.value(i, u, t) - mean);
        const double sd = std::sqrt(ss / (n * T));
        f.mean[u] = mean;
        f.scale[u] = sd > 1e-12 ? sd : 1.0;
        for (int i = 0; i < n; ++i)
            for (int t = 0; t < T; ++t) f.x(i, u * T + t) = (set.value(i, u, t) - mean) / f.scale[u];
    }
    return f;
}

double within_cluster_sse(const Eigen::MatrixXd& points, const std::vector<int>& labels) {
    const int K = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(K, points.cols());
    std::vector<int> count(K, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        centers.row(labels[i]) += points.row(i);
        ++count[labels[i]];
    }
    for (int k = 0; k < K; ++k)
        if (count[k] > 0) centers.row(k) /= count[k];
    double sse = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) sse += (points.row(i) - centers.row(labels[i])).squaredNorm();
    return sse;
}

ReductionResult kmeans_reduce(const ScenarioSet& set, int K, std::uint64_t seed, int restarts, int workers) {
    check_k(set, K);
    if (restarts < 1) throw ValidationError("restarts must be at least 1");
    const auto start = Clock::now();
    const FlatScenarios flat = standardize(set);
    std::vector<LloydRun> runs(restarts);
    parallel_for(restarts, workers, [&](std::size_t r) { runs[r] = lloyd(flat.x, K, seed * 1000003ULL + r); });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r)
        if (runs[r].sse < runs[best].sse) best = r;
    const LloydRun& run = runs[best];

    // Compact labels so empty clusters (only possible with duplicates) vanish.
    std::vector<int> remap(K, -1), labels(run.labels.size());
    int used = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (remap[run.labels[i]] < 0) remap[run.labels[i]] = used++;
        labels[i] = remap[run.labels[i]];
    }
    std::vector<int> rep(used, -1);
    std::vector<double> rep_d(used, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int old = run.labels[i];
        const double v = (flat.x.row(i) - run.centers.row(old)).squaredNorm();
        if (v < rep_d[labels[i]]) {
            rep_d[labels[i]] = v;
            rep[labels[i]] = static_cast<int>(i);
        }
    }
    return from_labels(set, labels, rep, "km-e", start);
}

ReductionResult kmedoids_reduce(const ScenarioSet& set, int K, std::uint64_t /*seed*/) {
    check_k(set, K);
    const auto start = Clock::now();
    const int n = set.size();
    const Eigen::MatrixXd d = pairwise_distances(standardize(set).x);
    auto cost_of = [&](const std::vector<int>& medoids) {
        double c = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int m : medoids) best = std::min(best, d(i, m));
            c += best;
        }
        return c;
    };

    std::vector<int> medoids;
    std::vector<bool> is_medoid(n, false);
    double current = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
        int pick = -1;
        double pick_cost = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            medoids.push_back(c);
            const double v = cost_of(medoids);
            medoids.pop_back();
            if (v < pick_cost) {
                pick_cost = v;
                pick = c;
            }
        }
        medoids.push_back(pick);
        is_medoid[pick] = true;
        current = pick_cost;
    }

    for (;;) {
        double best = current;
        int best_slot = -1, best_in = -1;
        for (int s = 0; s < K; ++s)
            for (int c = 0; c < n; ++c) {
                if (is_medoid[c]) continue;
                std::vector<int> trial = medoids;
                trial[s] = c;
                const double v = cost_of(trial);
                if (v < best - 1e-12 * std::max(1.0, std::abs(best))) {
                    best = v;
                    best_slot = s;
                    best_in = c;
                }
            }
        if (best_slot < 0) break;
        is_medoid[medoids[best_slot]] = false;
        medoids[best_slot] = best_in;
        is_medoid[best_in] = true;
        current = best;
    }

    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
        int best = 0;
        for (int k = 1; k < K; ++k)
            if (d(i, medoids[k]) < d(i, medoids[best])) best = k;
        labels[i] = best;
    }
    for (int k = 0; k < K; ++k) labels[medoids[k]] = k;
    return from_labels(set, labels, medoids, "kd-e", start);
}

namespace {

struct Dendrogram {
    std::vector<std::vector<int>> clusters;
    std::vector<double> heights;
};

// Merges until `target` clusters remain.
Dendrogram average_linkage(const Eigen::MatrixXd& d, int target) {
    const int n = static_cast<int>(d.rows());
    Dendrogram out;
    for (int i = 0; i < n; ++i) out.clusters.push_back({i});
    Eigen::MatrixXd link = d;
    std::vector<bool> alive(n, true);
    int remaining = n;
    while (remaining > target) {
        int a = -1, b = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (int j = i + 1; j < n; ++j)
                if (alive[j] && link(i, j) < best) {
                    best = link(i, j);
                    a = i;
                    b = j;
                }
        }
        const double na = static_cast<double>(out.clusters[a].size());
        const double nb = static_cast<double>(out.clusters[b].size());
        for (int k = 0; k < n; ++k) {
            if (!alive[k] || k == a || k == b) continue;
            link(a, k) = link(k, a) = (na * link(a, k) + nb * link(b, k)) / (na + nb);
        }
        out.clusters[a].insert(out.clusters[a].end(), out.clusters[b].begin(), out.clusters[b].end());
        out.clusters[b].clear();
        alive[b] = false;
        --remaining;
        out.heights.push_back(best);
    }
    std::erase_if(out.clusters, [](const std::vector<int>& c) { return c.empty(); });
    return out;
}

}  // namespace

std::vector<double> average_linkage_heights(const Eigen::MatrixXd& points) {
    if (points.rows() == 0) return {};
    return average_linkage(pairwise_distances(points), 1).heights;
}

ReductionResult hierarchical_reduce(const ScenarioSet& set, int K) {
    check_k(set, K);
    const auto start = Clock::now();
    const Eigen::MatrixXd d = pairwise_distances(standardize(set).x);
    const Dendrogram tree = average_linkage(d, K);
    std::vector<int> labels(set.size()), rep;
    for (std::size_t k = 0; k < tree.clusters.size(); ++k) {
        for (int i : tree.clusters[k]) labels[i] = static_cast<int>(k);
        rep.push_back(medoid_of(d, tree.clusters[k]));
    }
    return from_labels(set, labels, rep, "hc", start);
}

std::vector<double> severity_scores(const ScenarioSet& set) {
    const FlatScenarios flat = standardize(set);
    const int T = set.horizon();
    const auto loads = set.sources_with_role(SourceRole::load);
    auto res = set.sources_with_role(SourceRole::wt);
    for (int u : set.sources_with_role(SourceRole::pv)) res.push_back(u);
    std::vector<double> out(set.size());
    for (int i = 0; i < set.size(); ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < T; ++t) {
            double v = 0.0;
            for (int u : loads) v += flat.x(i, u * T + t);
            for (int u : res) v -= flat.x(i, u * T + t);
            peak = std::max(peak, v);
        }
        out[i] = peak;
    }
    return out;
}

ReductionResult worst_case_select(const ScenarioSet& set, int K) {
    check_k(set, K);
    const auto start = Clock::now();
    const std::vector<double> score = severity_scores(set);
    std::vector<int> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return score[a] > score[b]; });
    std::vector<int> reps(order.begin(), order.begin() + K);
    std::sort(reps.begin(), reps.end());

    const FlatScenarios flat = standardize(set);
    std::vector<int> labels(set.size());
    for (int i = 0; i < set.size(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
            const double v = reps[k] == i ? -1.0 : (flat.x.row(i) - flat.x.row(reps[k])).squaredNorm();
            if (v < best_d) {
                best_d = v;
                best = k;
            }
        }
        labels[i] = best;
    }
    return from_labels(set, labels, reps, "ws", start);
}

}  // namespace pdsr
