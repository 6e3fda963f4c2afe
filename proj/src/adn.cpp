#include "pdsr/adn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>

#include "pdsr/error.hpp"

namespace pdsr {

using milp::LinExpr;
using milp::Relation;

namespace {

std::string idx(const char* base, std::initializer_list<int> ids) {
    std::string s = base;
    s += '[';
    bool first = true;
    for (int i : ids) {
        if (!first) s += ',';
        s += std::to_string(i);
        first = false;
    }
    s += ']';
    return s;
}

}  // namespace

void AdnConfig::validate() const {
    if (num_nodes < 2) throw ConfigError("adn: need at least two nodes");
    if (root < 0 || root >= num_nodes) throw ConfigError("adn: root node out of range");
    if (static_cast<int>(lines.size()) != num_nodes - 1)
        throw ConfigError("adn: a radial feeder with n nodes has n-1 lines");
    if (horizon < 1 || !(dt_hours > 0.0)) throw ConfigError("adn: horizon and dt_hours must be positive");
    if (!(s_base_mva > 0.0)) throw ConfigError("adn: s_base_mva must be positive");
    if (!(0.0 <= v2_min && v2_min <= 1.0 && 1.0 <= v2_max)) throw ConfigError("adn: voltage bounds must bracket 1.0");
    if (!(price_up > 1.0 && 1.0 > price_down && price_down > 0.0))
        throw ConfigError("adn: price multipliers must satisfy up > 1 > down > 0");
    if (!(trade_max > 0.0)) throw ConfigError("adn: trade_max must be positive");
    if (curtailment_penalty < 0.0 || shedding_penalty < 0.0) throw ConfigError("adn: penalties must be non-negative");
    auto check_node = [&](int n, const char* what) {
        if (n < 0 || n >= num_nodes) throw ConfigError(std::string("adn: ") + what + " node out of range");
    };
    for (const auto& l : lines) {
        check_node(l.from, "line");
        check_node(l.to, "line");
        if (l.from == l.to) throw ConfigError("adn: line connects a node to itself");
    }
    for (const auto& d : res) check_node(d.node, "RES");
    for (const auto& d : loads) check_node(d.node, "load");
    for (const auto& f : fixed_loads) {
        check_node(f.node, "fixed load");
        if (static_cast<int>(f.profile.size()) != horizon) throw ConfigError("adn: fixed load profile length != horizon");
        for (double v : f.profile)
            if (!(v >= 0.0)) throw ConfigError("adn: fixed load profile must be non-negative");
    }
    for (const auto& e : storage) {
        check_node(e.node, "storage");
        if (!(0.0 < e.eta_c && e.eta_c <= 1.0 && 0.0 < e.eta_d && e.eta_d <= 1.0))
            throw ConfigError("adn: storage efficiencies must lie in (0, 1]");
        if (!(0.0 <= e.soc_min && e.soc_min <= e.soc0 && e.soc0 <= e.soc_max && e.soc_max <= 1.0))
            throw ConfigError("adn: storage SoC bounds must satisfy 0 <= min <= soc0 <= max <= 1");
        if (e.p_max < 0.0 || e.e_max < 0.0 || e.price < 0.0) throw ConfigError("adn: storage ratings must be >= 0");
    }
    // Connectivity from the root over n-1 lines implies a tree.
    std::vector<std::vector<int>> adj(num_nodes);
    for (const auto& l : lines) {
        adj[l.from].push_back(l.to);
        adj[l.to].push_back(l.from);
    }
    std::vector<bool> seen(num_nodes, false);
    std::queue<int> q;
    q.push(root);
    seen[root] = true;
    int count = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = true;
                ++count;
                q.push(v);
            }
    }
    if (count != num_nodes) throw ConfigError("adn: network is not a radial tree rooted at the substation");
}

nlohmann::json to_json(const AdnConfig& c) {
    using nlohmann::json;
    json j;
    j["num_nodes"] = c.num_nodes;
    j["root"] = c.root;
    j["lines"] = json::array();
    for (const auto& l : c.lines) j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"r", l.r}, {"x", l.x}});
    j["s_base_mva"] = c.s_base_mva;
    j["v2_min"] = c.v2_min;
    j["v2_max"] = c.v2_max;
    j["horizon"] = c.horizon;
    j["dt_hours"] = c.dt_hours;
    j["price_source"] = c.price_source;
    auto devices = [](const std::vector<AdnDevice>& ds, bool with_q) {
        json a = json::array();
        for (const auto& d : ds) {
            json e{{"source", d.source}, {"node", d.node}};
            if (with_q) e["q_ratio"] = d.q_ratio;
            a.push_back(e);
        }
        return a;
    };
    j["res"] = devices(c.res, false);
    j["loads"] = devices(c.loads, true);
    j["fixed_loads"] = json::array();
    for (const auto& f : c.fixed_loads)
        j["fixed_loads"].push_back({{"node", f.node}, {"profile", f.profile}, {"q_ratio", f.q_ratio}});
    j["storage"] = json::array();
    for (const auto& e : c.storage)
        j["storage"].push_back({{"node", e.node},
                                {"p_max", e.p_max},
                                {"e_max", e.e_max},
                                {"soc_min", e.soc_min},
                                {"soc_max", e.soc_max},
                                {"soc0", e.soc0},
                                {"eta_c", e.eta_c},
                                {"eta_d", e.eta_d},
                                {"price", e.price}});
    j["trade_max"] = c.trade_max;
    j["price_up"] = c.price_up;
    j["price_down"] = c.price_down;
    j["curtailment_penalty"] = c.curtailment_penalty;
    j["shedding_penalty"] = c.shedding_penalty;
    return j;
}

AdnConfig adn_config_from_json(const nlohmann::json& j) {
    AdnConfig c;
    try {
        c.num_nodes = j.at("num_nodes").get<int>();
        c.root = j.value("root", 0);
        for (const auto& l : j.at("lines"))
            c.lines.push_back({l.at("from").get<int>(), l.at("to").get<int>(), l.at("r").get<double>(),
                               l.at("x").get<double>()});
        c.s_base_mva = j.value("s_base_mva", 1.0);
        c.v2_min = j.value("v2_min", 0.81);
        c.v2_max = j.value("v2_max", 1.21);
        c.horizon = j.at("horizon").get<int>();
        c.dt_hours = j.value("dt_hours", 24.0 / c.horizon);
        c.price_source = j.value("price_source", std::string("price"));
        for (const auto& d : j.value("res", nlohmann::json::array()))
            c.res.push_back({d.at("source").get<std::string>(), d.at("node").get<int>(), 0.0});
        for (const auto& d : j.value("loads", nlohmann::json::array()))
            c.loads.push_back({d.at("source").get<std::string>(), d.at("node").get<int>(), d.value("q_ratio", 0.0)});
        for (const auto& f : j.value("fixed_loads", nlohmann::json::array()))
            c.fixed_loads.push_back(
                {f.at("node").get<int>(), f.at("profile").get<std::vector<double>>(), f.value("q_ratio", 0.0)});
        for (const auto& e : j.value("storage", nlohmann::json::array())) {
            AdnStorage s;
            s.node = e.at("node").get<int>();
            s.p_max = e.value("p_max", s.p_max);
            s.e_max = e.value("e_max", s.e_max);
            s.soc_min = e.value("soc_min", s.soc_min);
            s.soc_max = e.value("soc_max", s.soc_max);
            s.soc0 = e.value("soc0", s.soc0);
            s.eta_c = e.value("eta_c", s.eta_c);
            s.eta_d = e.value("eta_d", s.eta_d);
            s.price = e.value("price", s.price);
            c.storage.push_back(s);
        }
        c.trade_max = j.value("trade_max", c.trade_max);
        c.price_up = j.value("price_up", c.price_up);
        c.price_down = j.value("price_down", c.price_down);
        c.curtailment_penalty = j.value("curtailment_penalty", c.curtailment_penalty);
        c.shedding_penalty = j.value("shedding_penalty", c.shedding_penalty);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("adn config: ") + e.what());
    }
    c.validate();
    return c;
}

AdnProblem::AdnProblem(AdnConfig config) : config_(std::move(config)) {
    config_.validate();
    const int n = config_.num_nodes;
    parent_.assign(n, -1);
    parent_line_.assign(n, -1);
    child_lines_.assign(n, {});
    std::vector<std::vector<int>> incident(n);
    for (int l = 0; l < static_cast<int>(config_.lines.size()); ++l) {
        incident[config_.lines[l].from].push_back(l);
        incident[config_.lines[l].to].push_back(l);
    }
    std::vector<bool> seen(n, false);
    std::queue<int> q;
    q.push(config_.root);
    seen[config_.root] = true;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int l : incident[u]) {
            const auto& line = config_.lines[l];
            int v = line.from == u ? line.to : line.from;
            if (seen[v]) continue;
            seen[v] = true;
            parent_[v] = u;
            parent_line_[v] = l;
            child_lines_[u].push_back(l);
            q.push(v);
        }
    }
}

int AdnProblem::num_first_stage() const { return config_.horizon + static_cast<int>(config_.storage.size()); }

void AdnProblem::check_compatible(const ScenarioSet& set) const {
    if (set.horizon() != config_.horizon)
        throw ConfigError("adn: scenario horizon " + std::to_string(set.horizon()) + " != configured horizon " +
                          std::to_string(config_.horizon));
    auto require = [&](const std::string& source, SourceRole role) {
        auto u = set.source_index(source);
        if (!u) throw ConfigError("adn: scenario set has no source '" + source + "'");
        if (set.roles()[*u] != role) throw ConfigError("adn: source '" + source + "' has the wrong role");
    };
    require(config_.price_source, SourceRole::price);
    for (const auto& d : config_.res) {
        auto u = set.source_index(d.source);
        if (!u) throw ConfigError("adn: scenario set has no source '" + d.source + "'");
        if (set.roles()[*u] != SourceRole::wt && set.roles()[*u] != SourceRole::pv)
            throw ConfigError("adn: source '" + d.source + "' is not a RES source");
    }
    for (const auto& d : config_.loads) require(d.source, SourceRole::load);
}

CompiledModel AdnProblem::compile(const ScenarioSet& set, std::span<const int> members,
                                  std::span<const double> weights, const FirstStageDecision* fixed) const {
    check_compatible(set);
    const auto& c = config_;
    const int T = c.horizon;
    const double dt = c.dt_hours;
    const int n_nodes = c.num_nodes;
    const int n_lines = static_cast<int>(c.lines.size());
    const int n_es = static_cast<int>(c.storage.size());

    CompiledModel cm;
    milp::Model& m = cm.model;

    std::vector<LinExpr> trade(T);
    std::vector<LinExpr> capacity(n_es);
    if (fixed) {
        if (static_cast<int>(fixed->values.size()) != num_first_stage())
            throw ShapeError("adn: first-stage decision has the wrong length");
        for (int t = 0; t < T; ++t) trade[t] = LinExpr(fixed->values[t]);
        for (int e = 0; e < n_es; ++e) capacity[e] = LinExpr(fixed->values[T + e]);
    } else {
        for (int t = 0; t < T; ++t) {
            int v = m.add_variable(idx("PT", {t}), -c.trade_max, c.trade_max);
            trade[t] = LinExpr::variable(v);
            cm.first_stage.push_back(v);
        }
        for (int e = 0; e < n_es; ++e) {
            int v = m.add_variable(idx("E", {c.storage[e].node}), 0.0, c.storage[e].e_max);
            capacity[e] = LinExpr::variable(v);
            cm.first_stage.push_back(v);
        }
    }

    const int price_u = *set.source_index(c.price_source);
    std::vector<int> res_u, load_u;
    for (const auto& d : c.res) res_u.push_back(*set.source_index(d.source));
    for (const auto& d : c.loads) load_u.push_back(*set.source_index(d.source));

    LinExpr procurement;
    LinExpr total_capacity;
    for (int e = 0; e < n_es; ++e) {
        procurement += c.storage[e].price * capacity[e];
        total_capacity += capacity[e];
    }

    for (std::size_t k = 0; k < members.size(); ++k) {
        const int s = members[k];
        const int sk = static_cast<int>(k);
        LinExpr day_ahead, intraday, penalty;
        std::vector<LinExpr> prev_energy(n_es);
        for (int e = 0; e < n_es; ++e) prev_energy[e] = c.storage[e].soc0 * capacity[e];

        for (int t = 0; t < T; ++t) {
            const double price = set.value(s, price_u, t);
            day_ahead += (price * dt) * trade[t];

            // Intraday balancing with exclusive up/down state.
            const int tp = m.add_variable(idx("Tup", {sk, t}), 0.0, c.trade_max);
            const int tm = m.add_variable(idx("Tdn", {sk, t}), 0.0, c.trade_max);
            const int dtb = m.add_binary(idx("DT", {sk, t}));
            m.add_constraint(idx("trade_up", {sk, t}), {{tp, 1.0}, {dtb, c.trade_max}}, Relation::less_equal,
                             c.trade_max);
            m.add_constraint(idx("trade_dn", {sk, t}), {{tm, 1.0}, {dtb, -c.trade_max}}, Relation::less_equal, 0.0);
            LinExpr net = trade[t];
            net.add(tp, 1.0).add(tm, -1.0);
            m.add_constraint(idx("trade_hi", {sk, t}), net, Relation::less_equal, c.trade_max);
            m.add_constraint(idx("trade_lo", {sk, t}), net, Relation::greater_equal, -c.trade_max);
            intraday.add(tp, dt * c.price_up * price).add(tm, -dt * c.price_down * price);

            // Net active/reactive consumption per node.
            std::vector<LinExpr> p(n_nodes), q(n_nodes);
            for (std::size_t r = 0; r < c.res.size(); ++r) {
                const double avail = set.value(s, res_u[r], t);
                const int curt = m.add_variable(idx("Rc", {sk, static_cast<int>(r), t}), 0.0, avail);
                p[c.res[r].node] += LinExpr(-avail);
                p[c.res[r].node].add(curt, 1.0);
                penalty.add(curt, dt * c.curtailment_penalty);
            }
            auto add_load = [&](int node, double demand, double ratio, int id) {
                const int shed = m.add_variable(idx("Ls", {sk, id, t}), 0.0, demand);
                p[node] += LinExpr(demand);
                p[node].add(shed, -1.0);
                q[node] += LinExpr(ratio * demand);
                q[node].add(shed, -ratio);
                penalty.add(shed, dt * c.shedding_penalty);
            };
            int load_id = 0;
            for (std::size_t l = 0; l < c.loads.size(); ++l)
                add_load(c.loads[l].node, set.value(s, load_u[l], t), c.loads[l].q_ratio, load_id++);
            for (const auto& f : c.fixed_loads) add_load(f.node, f.profile[t], f.q_ratio, load_id++);

            for (int e = 0; e < n_es; ++e) {
                const auto& es = c.storage[e];
                const int pc = m.add_variable(idx("Ec", {sk, e, t}), 0.0, es.p_max);
                const int pd = m.add_variable(idx("Ed", {sk, e, t}), 0.0, es.p_max);
                const int de = m.add_binary(idx("DE", {sk, e, t}));
                m.add_constraint(idx("es_ch", {sk, e, t}), {{pc, 1.0}, {de, es.p_max}}, Relation::less_equal, es.p_max);
                m.add_constraint(idx("es_dis", {sk, e, t}), {{pd, 1.0}, {de, -es.p_max}}, Relation::less_equal, 0.0);
                // Stored energy in MWh replaces SoC * E.
                const int energy = m.add_variable(idx("Es", {sk, e, t}), 0.0, es.soc_max * es.e_max);
                LinExpr dyn = LinExpr::variable(energy) - prev_energy[e];
                dyn.add(pc, -dt * es.eta_c).add(pd, dt / es.eta_d);
                m.add_constraint(idx("es_soc", {sk, e, t}), dyn, Relation::equal, 0.0);
                m.add_constraint(idx("es_min", {sk, e, t}),
                                 LinExpr::variable(energy) - es.soc_min * capacity[e], Relation::greater_equal, 0.0);
                m.add_constraint(idx("es_max", {sk, e, t}),
                                 LinExpr::variable(energy) - es.soc_max * capacity[e], Relation::less_equal, 0.0);
                prev_energy[e] = LinExpr::variable(energy);
                p[es.node].add(pc, 1.0).add(pd, -1.0);
            }

            // LinDistFlow on the oriented tree.
            std::vector<int> flow_p(n_lines), flow_q(n_lines);
            for (int l = 0; l < n_lines; ++l) {
                flow_p[l] = m.add_variable(idx("Pl", {sk, l, t}), -milp::inf, milp::inf);
                flow_q[l] = m.add_variable(idx("Ql", {sk, l, t}), -milp::inf, milp::inf);
            }
            std::vector<LinExpr> volt(n_nodes);
            for (int j = 0; j < n_nodes; ++j) {
                if (j == c.root)
                    volt[j] = LinExpr(1.0);
                else
                    volt[j] = LinExpr::variable(m.add_variable(idx("V", {sk, j, t}), c.v2_min, c.v2_max));
            }
            for (int j = 0; j < n_nodes; ++j) {
                LinExpr bal_p = j == c.root ? net : LinExpr::variable(flow_p[parent_line_[j]]);
                for (int l : child_lines_[j]) bal_p.add(flow_p[l], -1.0);
                bal_p -= p[j];
                m.add_constraint(idx("bal_p", {sk, j, t}), bal_p, Relation::equal, 0.0);
                if (j == c.root) continue;  // the substation supplies reactive power
                LinExpr bal_q = LinExpr::variable(flow_q[parent_line_[j]]);
                for (int l : child_lines_[j]) bal_q.add(flow_q[l], -1.0);
                bal_q -= q[j];
                m.add_constraint(idx("bal_q", {sk, j, t}), bal_q, Relation::equal, 0.0);

                const auto& line = c.lines[parent_line_[j]];
                LinExpr drop = volt[j] - volt[parent_[j]];
                drop.add(flow_p[parent_line_[j]], 2.0 * line.r / c.s_base_mva)
                    .add(flow_q[parent_line_[j]], 2.0 * line.x / c.s_base_mva);
                m.add_constraint(idx("volt", {sk, j, t}), drop, Relation::equal, 0.0);
            }
        }
        for (int e = 0; e < n_es; ++e)
            m.add_constraint(idx("es_end", {sk, e}), prev_energy[e] - c.storage[e].soc0 * capacity[e],
                             Relation::equal, 0.0);

        LinExpr cost = day_ahead + procurement + intraday + penalty;
        m.add_objective(weights[k] * cost);
        cm.member_cost.push_back(cost);
        cm.member_components.push_back({{"capacity", total_capacity},
                                        {"procurement", procurement},
                                        {"day_ahead", day_ahead},
                                        {"intraday", intraday},
                                        {"penalty", penalty}});
    }
    return cm;
}

// ---------------------------------------------------------------------------
// Desk instance generator

namespace {

double gauss_bump(double h, double centre, double width) {
    const double z = (h - centre) / width;
    return std::exp(-z * z);
}

}  // namespace

AdnDeskInstance make_desk_instance(std::uint64_t seed, int n, int horizon, int buses, double bad_fraction) {
    if (buses < 3) throw ValidationError("desk instance needs at least 3 buses");
    if (horizon < 2) throw ValidationError("desk instance needs at least 2 periods");
    if (n < 1) throw ValidationError("desk instance needs at least one scenario");
    if (!(bad_fraction >= 0.0 && bad_fraction <= 1.0)) throw ValidationError("bad_fraction must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    AdnConfig c;
    c.num_nodes = buses;
    c.root = 0;
    c.horizon = horizon;
    c.dt_hours = 24.0 / horizon;

    // Feeder topology: a trunk 0-1-2 plus randomly attached nodes.
    std::vector<int> parent(buses, -1), depth(buses, 0);
    for (int k = 1; k < buses; ++k) {
        parent[k] = k <= 2 || unif(rng) < 0.7 ? k - 1 : static_cast<int>(unif(rng) * (k - 1));
        depth[k] = depth[parent[k]] + 1;
    }
    int leaf = 1;
    for (int k = 1; k < buses; ++k)
        if (depth[k] >= depth[leaf]) leaf = k;
    std::vector<bool> on_path(buses, false);
    for (int v = leaf; v >= 0; v = parent[v]) on_path[v] = true;

    std::vector<double> r_base(buses), x_ratio(buses);
    for (int k = 1; k < buses; ++k) {
        r_base[k] = 0.5 + unif(rng);
        x_ratio[k] = 0.6 + 0.4 * unif(rng);
    }

    auto pick_node = [&](auto&& accept) {
        std::vector<int> cands;
        for (int k = 1; k < buses; ++k)
            if (accept(k)) cands.push_back(k);
        if (cands.empty())
            for (int k = 1; k < buses; ++k)
                if (k != leaf) cands.push_back(k);
        if (cands.empty()) cands.push_back(leaf);
        return cands[static_cast<std::size_t>(unif(rng) * cands.size()) % cands.size()];
    };
    const int wt_node = pick_node([&](int k) { return !on_path[k]; });
    const int pv_node = pick_node([&](int k) { return !on_path[k] || k == 1; });
    const int load2_node = pick_node([&](int k) { return k != leaf && k != wt_node; });

    const double q_ratio = 0.3;
    c.res = {{"wt1", wt_node, 0.0}, {"pv1", pv_node, 0.0}};
    c.loads = {{"load1", leaf, q_ratio}, {"load2", load2_node, q_ratio}};

    std::vector<double> hours(horizon), load_shape(horizon), pv_shape(horizon), price_shape(horizon);
    for (int t = 0; t < horizon; ++t) {
        const double h = (t + 0.5) * c.dt_hours;
        hours[t] = h;
        load_shape[t] = 0.55 + 0.25 * gauss_bump(h, 9.0, 3.0) + 0.45 * gauss_bump(h, 19.0, 2.5);
        pv_shape[t] = h > 6.0 && h < 18.0 ? std::sin(M_PI * (h - 6.0) / 12.0) : 0.0;
        price_shape[t] = 35.0 + 15.0 * gauss_bump(h, 9.0, 3.0) + 35.0 * gauss_bump(h, 19.0, 2.5);
    }
    for (int k = 1; k < buses; ++k) {
        if (k == leaf || k == load2_node) continue;
        AdnFixedLoad f;
        f.node = k;
        f.q_ratio = q_ratio;
        const double base = 0.2 + 0.2 * unif(rng);
        for (int t = 0; t < horizon; ++t) f.profile.push_back(base * load_shape[t]);
        c.fixed_loads.push_back(std::move(f));
    }

    // Scenarios: five weather/market regimes with independent noise.
    const int n_bad = static_cast<int>(std::lround(n * bad_fraction));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> bad(n, false);
    for (int b = 0; b < n_bad; ++b) bad[order[b]] = true;

    // Bad scenarios are low-wind days on which, for the two evening hours of
    // peak load, the wind drops out and the leaf load rises just past what the
    // feeder can carry. The excess must come from local storage or be shed.
    const int surge_len = std::max(1, static_cast<int>(std::lround(2.0 / c.dt_hours)));
    int surge_start = std::max(0, horizon - surge_len);
    double surge_peak = -1.0;
    for (int t = 0; t + surge_len <= horizon; ++t) {
        if (hours[t] < 16.0 || hours[t] > 22.0) continue;
        const double s = std::accumulate(load_shape.begin() + t, load_shape.begin() + t + surge_len, 0.0);
        if (s > surge_peak) {
            surge_peak = s;
            surge_start = t;
        }
    }
    auto in_surge = [&](int t) { return t >= surge_start && t < surge_start + surge_len; };

    const double wind_level[] = {0.15, 0.35, 0.5, 0.65, 0.8};
    const double cloud[] = {0.9, 0.5, 0.75, 0.6, 0.85};
    const double price_level[] = {1.15, 1.05, 0.95, 1.1, 0.85};
    const std::vector<std::string> sources{"wt1", "pv1", "load1", "load2", "price"};
    std::vector<Scenario> scenarios;
    for (int i = 0; i < n; ++i) {
        const int drawn = static_cast<int>(unif(rng) * 5) % 5;
        const int regime = bad[i] ? 0 : drawn;
        Scenario sc;
        sc.id = "s" + std::to_string(i);
        sc.values.assign(sources.size() * horizon, 0.0);
        double ar = 0.0;
        const double l1 = 1.0 + 0.05 * normal(rng), l2 = 1.0 + 0.05 * normal(rng);
        const double price_f = price_level[regime] * (1.0 + 0.05 * normal(rng));
        for (int t = 0; t < horizon; ++t) {
            ar = 0.6 * ar + 0.12 * normal(rng);
            sc.values[0 * horizon + t] = bad[i] && in_surge(t) ? 0.0 : std::clamp(wind_level[regime] + ar, 0.0, 1.0);
            sc.values[1 * horizon + t] =
                std::max(0.0, 1.2 * pv_shape[t] * std::clamp(cloud[regime] + 0.1 * normal(rng), 0.0, 1.0));
            sc.values[2 * horizon + t] = std::max(0.0, 0.5 * load_shape[t] * (l1 + 0.07 * normal(rng)));
            sc.values[3 * horizon + t] = std::max(0.0, 0.6 * load_shape[t] * (l2 + 0.07 * normal(rng)));
            sc.values[4 * horizon + t] = price_f * price_shape[t] + 3.0 * normal(rng);
        }
        scenarios.push_back(std::move(sc));
    }

    // Net consumption below each node and the resulting voltage drop at the
    // far leaf, used to scale the impedances and size the surges.
    auto leaf_drop = [&](const Scenario& sc, int t, double extra_leaf, const std::vector<double>& r,
                         const std::vector<double>& x) {
        std::vector<double> pn(buses, 0.0), qn(buses, 0.0);
        pn[wt_node] -= sc.values[0 * horizon + t];
        pn[pv_node] -= sc.values[1 * horizon + t];
        const double d1 = sc.values[2 * horizon + t] + extra_leaf, d2 = sc.values[3 * horizon + t];
        pn[leaf] += d1;
        qn[leaf] += q_ratio * d1;
        pn[load2_node] += d2;
        qn[load2_node] += q_ratio * d2;
        for (const auto& f : c.fixed_loads) {
            pn[f.node] += f.profile[t];
            qn[f.node] += q_ratio * f.profile[t];
        }
        for (int k = buses - 1; k >= 1; --k) {  // parents precede children
            pn[parent[k]] += pn[k];
            qn[parent[k]] += qn[k];
        }
        double drop = 0.0;
        for (int v = leaf; v > 0; v = parent[v]) drop += 2.0 * (r[v] * pn[v] + x[v] * qn[v]);
        return drop;
    };
    std::vector<double> xb(buses);
    for (int k = 1; k < buses; ++k) xb[k] = r_base[k] * x_ratio[k];
    const double allowed = 1.0 - c.v2_min;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < horizon; ++t) worst = std::max(worst, leaf_drop(scenarios[i], t, 0.0, r_base, xb));
    const double scale = worst > 0.0 ? 0.97 * allowed / worst : 1.0;
    std::vector<double> r(buses), x(buses);
    for (int k = 1; k < buses; ++k) {
        r[k] = r_base[k] * scale;
        x[k] = xb[k] * scale;
        c.lines.push_back({parent[k], k, r[k], x[k]});
    }

    AdnStorage es;
    es.node = leaf;
    c.storage.push_back(es);

    const double excess = 0.08;
    double sensitivity = 0.0;
    for (int v = leaf; v > 0; v = parent[v]) sensitivity += 2.0 * (r[v] + x[v] * q_ratio);
    for (int i = 0; i < n; ++i) {
        if (!bad[i]) continue;
        auto& sc = scenarios[i];
        for (int t = surge_start; t < surge_start + surge_len; ++t) {
            const double headroom = std::max(0.0, (allowed - leaf_drop(sc, t, 0.0, r, x)) / sensitivity);
            sc.values[2 * horizon + t] += headroom + excess;
        }
    }

    // Capacity price between the daily arbitrage value of storage and the
    // expected value of covering surges.
    double spread = 0.0;
    for (int i = 0; i < n; ++i) {
        if (bad[i]) continue;
        double lo = milp::inf, hi = -milp::inf;
        for (int t = 0; t < horizon; ++t) {
            lo = std::min(lo, scenarios[i].values[4 * horizon + t]);
            hi = std::max(hi, scenarios[i].values[4 * horizon + t]);
        }
        spread = std::max(spread, hi - lo / (es.eta_c * es.eta_d));
    }
    c.storage[0].price = std::max(1.3 * spread * (es.soc_max - es.soc_min), 40.0);
    c.trade_max = 10.0;
    c.shedding_penalty = 15000.0;

    c.validate();
    ScenarioSet set(sources, horizon, std::move(scenarios), std::vector<double>(n, 1.0 / n));
    return {std::move(c), std::move(set), std::move(bad)};
}

}  // namespace pdsr
