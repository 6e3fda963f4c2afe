#include "pdsr/uc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
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

void UcConfig::validate() const {
    if (num_buses < 1) throw ConfigError("uc: need at least one bus");
    if (reference_bus < 0 || reference_bus >= num_buses) throw ConfigError("uc: reference bus out of range");
    if (horizon < 1 || !(dt_hours > 0.0)) throw ConfigError("uc: horizon and dt_hours must be positive");
    if (!(s_base_mva > 0.0)) throw ConfigError("uc: s_base_mva must be positive");
    if (!(angle_max > 0.0)) throw ConfigError("uc: angle_max must be positive");
    if (curtailment_penalty < 0.0 || shedding_penalty < 0.0) throw ConfigError("uc: penalties must be non-negative");
    if (generators.empty()) throw ConfigError("uc: need at least one generator");
    auto check_bus = [&](int b, const char* what) {
        if (b < 0 || b >= num_buses) throw ConfigError(std::string("uc: ") + what + " bus out of range");
    };
    for (const auto& l : lines) {
        check_bus(l.from, "line");
        check_bus(l.to, "line");
        if (l.from == l.to) throw ConfigError("uc: line connects a bus to itself");
        if (!(l.b > 0.0)) throw ConfigError("uc: line susceptance must be positive");
    }
    for (const auto& g : generators) {
        check_bus(g.bus, "generator");
        if (!(g.p_min >= 0.0 && g.p_max >= g.p_min)) throw ConfigError("uc: generator needs 0 <= p_min <= p_max");
        if (g.min_up < 1 || g.min_down < 1) throw ConfigError("uc: minimum up/down times must be at least 1");
        if (g.ramp_up < 0.0 || g.ramp_down < 0.0) throw ConfigError("uc: ramp limits must be non-negative");
        if (g.initially_on ? !(g.p_initial >= g.p_min && g.p_initial <= g.p_max) : g.p_initial != 0.0)
            throw ConfigError("uc: initial output does not match the initial commitment");
    }
    for (const auto& d : res) check_bus(d.bus, "RES");
    for (const auto& d : loads) check_bus(d.bus, "load");
}

nlohmann::json to_json(const UcConfig& c) {
    using nlohmann::json;
    json j;
    j["num_buses"] = c.num_buses;
    j["reference_bus"] = c.reference_bus;
    j["s_base_mva"] = c.s_base_mva;
    j["lines"] = json::array();
    for (const auto& l : c.lines) j["lines"].push_back({{"from", l.from}, {"to", l.to}, {"b", l.b}});
    j["generators"] = json::array();
    for (const auto& g : c.generators)
        j["generators"].push_back({{"bus", g.bus},
                                   {"p_min", g.p_min},
                                   {"p_max", g.p_max},
                                   {"ramp_up", g.ramp_up},
                                   {"ramp_down", g.ramp_down},
                                   {"cost_pg", g.cost_pg},
                                   {"cost_nl", g.cost_nl},
                                   {"cost_on", g.cost_on},
                                   {"cost_off", g.cost_off},
                                   {"cost_up", g.cost_up},
                                   {"cost_down", g.cost_down},
                                   {"min_up", g.min_up},
                                   {"min_down", g.min_down},
                                   {"initially_on", g.initially_on},
                                   {"p_initial", g.p_initial}});
    auto devices = [](const std::vector<UcDevice>& ds) {
        json a = json::array();
        for (const auto& d : ds) a.push_back({{"source", d.source}, {"bus", d.bus}});
        return a;
    };
    j["res"] = devices(c.res);
    j["loads"] = devices(c.loads);
    j["curtailment_penalty"] = c.curtailment_penalty;
    j["shedding_penalty"] = c.shedding_penalty;
    j["horizon"] = c.horizon;
    j["dt_hours"] = c.dt_hours;
    j["angle_max"] = c.angle_max;
    return j;
}

UcConfig uc_config_from_json(const nlohmann::json& j) {
    UcConfig c;
    try {
        c.num_buses = j.at("num_buses").get<int>();
        c.reference_bus = j.value("reference_bus", 0);
        c.s_base_mva = j.value("s_base_mva", c.s_base_mva);
        for (const auto& l : j.value("lines", nlohmann::json::array()))
            c.lines.push_back({l.at("from").get<int>(), l.at("to").get<int>(), l.at("b").get<double>()});
        for (const auto& e : j.at("generators")) {
            UcGenerator g;
            g.bus = e.at("bus").get<int>();
            g.p_min = e.value("p_min", 0.0);
            g.p_max = e.at("p_max").get<double>();
            g.ramp_up = e.value("ramp_up", g.p_max);
            g.ramp_down = e.value("ramp_down", g.p_max);
            g.cost_pg = e.value("cost_pg", 0.0);
            g.cost_nl = e.value("cost_nl", 0.0);
            g.cost_on = e.value("cost_on", 0.0);
            g.cost_off = e.value("cost_off", 0.0);
            g.cost_up = e.value("cost_up", 0.0);
            g.cost_down = e.value("cost_down", 0.0);
            g.min_up = e.value("min_up", 1);
            g.min_down = e.value("min_down", 1);
            g.initially_on = e.value("initially_on", false);
            g.p_initial = e.value("p_initial", 0.0);
            c.generators.push_back(g);
        }
        for (const auto& d : j.value("res", nlohmann::json::array()))
            c.res.push_back({d.at("source").get<std::string>(), d.at("bus").get<int>()});
        for (const auto& d : j.value("loads", nlohmann::json::array()))
            c.loads.push_back({d.at("source").get<std::string>(), d.at("bus").get<int>()});
        c.curtailment_penalty = j.value("curtailment_penalty", c.curtailment_penalty);
        c.shedding_penalty = j.value("shedding_penalty", c.shedding_penalty);
        c.horizon = j.at("horizon").get<int>();
        c.dt_hours = j.value("dt_hours", 24.0 / c.horizon);
        c.angle_max = j.value("angle_max", c.angle_max);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("uc config: ") + e.what());
    }
    c.validate();
    return c;
}

UcProblem::UcProblem(UcConfig config) : config_(std::move(config)) { config_.validate(); }

int UcProblem::num_first_stage() const {
    return 2 * static_cast<int>(config_.generators.size()) * config_.horizon;
}

void UcProblem::check_compatible(const ScenarioSet& set) const {
    if (set.horizon() != config_.horizon)
        throw ConfigError("uc: scenario horizon " + std::to_string(set.horizon()) + " != configured horizon " +
                          std::to_string(config_.horizon));
    for (const auto& d : config_.res) {
        auto u = set.source_index(d.source);
        if (!u) throw ConfigError("uc: scenario set has no source '" + d.source + "'");
        if (set.roles()[*u] != SourceRole::wt && set.roles()[*u] != SourceRole::pv)
            throw ConfigError("uc: source '" + d.source + "' is not a RES source");
    }
    for (const auto& d : config_.loads) {
        auto u = set.source_index(d.source);
        if (!u) throw ConfigError("uc: scenario set has no source '" + d.source + "'");
        if (set.roles()[*u] != SourceRole::load) throw ConfigError("uc: source '" + d.source + "' is not a load");
    }
}

CompiledModel UcProblem::compile(const ScenarioSet& set, std::span<const int> members, std::span<const double> weights,
                                 const FirstStageDecision* fixed) const {
    check_compatible(set);
    const auto& c = config_;
    const int T = c.horizon;
    const int G = static_cast<int>(c.generators.size());
    const double dt = c.dt_hours;

    CompiledModel cm;
    milp::Model& m = cm.model;

    // First stage: day-ahead schedule and commitment.
    std::vector<std::vector<LinExpr>> p(G, std::vector<LinExpr>(T)), u(G, std::vector<LinExpr>(T));
    LinExpr day_ahead;
    if (fixed) {
        if (static_cast<int>(fixed->values.size()) != num_first_stage())
            throw ShapeError("uc: first-stage decision has the wrong length");
        for (int g = 0; g < G; ++g) {
            const auto& gen = c.generators[g];
            double prev = gen.initially_on ? 1.0 : 0.0;
            for (int t = 0; t < T; ++t) {
                const double pv = fixed->values[g * T + t];
                const double uv = fixed->values[G * T + g * T + t] > 0.5 ? 1.0 : 0.0;
                p[g][t] = LinExpr(pv);
                u[g][t] = LinExpr(uv);
                const double v = uv - prev;
                day_ahead += LinExpr(dt * (gen.cost_pg * pv + gen.cost_nl * uv) +
                                     std::max(v * gen.cost_on, -v * gen.cost_off));
                prev = uv;
            }
        }
    } else {
        std::vector<std::vector<int>> pv(G, std::vector<int>(T)), uv(G, std::vector<int>(T));
        for (int g = 0; g < G; ++g)
            for (int t = 0; t < T; ++t) {
                pv[g][t] = m.add_variable(idx("P", {g, t}), 0.0, c.generators[g].p_max);
                cm.first_stage.push_back(pv[g][t]);
            }
        for (int g = 0; g < G; ++g)
            for (int t = 0; t < T; ++t) {
                uv[g][t] = m.add_binary(idx("u", {g, t}));
                cm.first_stage.push_back(uv[g][t]);
            }
        for (int g = 0; g < G; ++g) {
            const auto& gen = c.generators[g];
            std::vector<LinExpr> v(T);
            for (int t = 0; t < T; ++t) {
                p[g][t] = LinExpr::variable(pv[g][t]);
                u[g][t] = LinExpr::variable(uv[g][t]);
                m.add_constraint(idx("p_min", {g, t}), {{pv[g][t], 1.0}, {uv[g][t], -gen.p_min}},
                                 Relation::greater_equal, 0.0);
                m.add_constraint(idx("p_max", {g, t}), {{pv[g][t], 1.0}, {uv[g][t], -gen.p_max}},
                                 Relation::less_equal, 0.0);
                if (t > 0 || gen.initially_on) {
                    const LinExpr prev = t > 0 ? LinExpr::variable(pv[g][t - 1]) : LinExpr(gen.p_initial);
                    const LinExpr step = LinExpr::variable(pv[g][t]) - prev;
                    m.add_constraint(idx("ramp_up", {g, t}), step, Relation::less_equal, gen.ramp_up);
                    m.add_constraint(idx("ramp_dn", {g, t}), step, Relation::greater_equal, -gen.ramp_down);
                }
                const int vv = m.add_variable(idx("v", {g, t}), -1.0, 1.0);
                v[t] = LinExpr::variable(vv);
                LinExpr def = LinExpr::variable(vv) - LinExpr::variable(uv[g][t]);
                if (t > 0)
                    def.add(uv[g][t - 1], 1.0);
                else
                    def += gen.initially_on ? 1.0 : 0.0;
                m.add_constraint(idx("onoff", {g, t}), def, Relation::equal, 0.0);
                const int sc = m.add_variable(idx("SC", {g, t}), 0.0, milp::inf);
                m.add_constraint(idx("start", {g, t}), {{sc, 1.0}, {vv, -gen.cost_on}}, Relation::greater_equal, 0.0);
                m.add_constraint(idx("stop", {g, t}), {{sc, 1.0}, {vv, gen.cost_off}}, Relation::greater_equal, 0.0);
                day_ahead.add(pv[g][t], dt * gen.cost_pg).add(uv[g][t], dt * gen.cost_nl).add(sc, 1.0);
            }
            // Minimum up/down windows, truncated at the horizon.
            for (int t = 0; t < T; ++t) {
                const int last = std::min(t + gen.min_up, T - 1);
                if (last > t) {
                    LinExpr up = -static_cast<double>(last - t) * v[t];
                    for (int tau = t + 1; tau <= last; ++tau) up.add(uv[g][tau], 1.0);
                    m.add_constraint(idx("min_up", {g, t}), up, Relation::greater_equal, 0.0);
                }
                const int last_off = std::min(t + gen.min_down, T - 1);
                if (last_off > t) {
                    const double len = last_off - t;
                    LinExpr down = -len * v[t];
                    for (int tau = t + 1; tau <= last_off; ++tau) down.add(uv[g][tau], 1.0);
                    m.add_constraint(idx("min_down", {g, t}), down, Relation::less_equal, len);
                }
            }
        }
    }

    std::vector<int> res_u, load_u;
    for (const auto& d : c.res) res_u.push_back(*set.source_index(d.source));
    for (const auto& d : c.loads) load_u.push_back(*set.source_index(d.source));

    for (std::size_t k = 0; k < members.size(); ++k) {
        const int s = members[k];
        const int sk = static_cast<int>(k);
        LinExpr regulation, penalty;
        std::vector<LinExpr> prev_out(G);
        for (int t = 0; t < T; ++t) {
            std::vector<LinExpr> injection(c.num_buses);
            for (int g = 0; g < G; ++g) {
                const auto& gen = c.generators[g];
                const int up = m.add_variable(idx("Pup", {sk, g, t}), 0.0, gen.p_max);
                const int dn = m.add_variable(idx("Pdn", {sk, g, t}), 0.0, gen.p_max);
                const int d = m.add_binary(idx("D", {sk, g, t}));
                m.add_constraint(idx("up_on", {sk, g, t}), LinExpr::variable(up) - gen.p_max * u[g][t],
                                 Relation::less_equal, 0.0);
                m.add_constraint(idx("dn_on", {sk, g, t}), LinExpr::variable(dn) - gen.p_max * u[g][t],
                                 Relation::less_equal, 0.0);
                m.add_constraint(idx("up_state", {sk, g, t}), {{up, 1.0}, {d, -gen.p_max}}, Relation::less_equal, 0.0);
                m.add_constraint(idx("dn_state", {sk, g, t}), {{dn, 1.0}, {d, gen.p_max}}, Relation::less_equal,
                                 gen.p_max);
                LinExpr out = p[g][t];
                out.add(up, 1.0).add(dn, -1.0);
                m.add_constraint(idx("out_min", {sk, g, t}), out - gen.p_min * u[g][t], Relation::greater_equal, 0.0);
                m.add_constraint(idx("out_max", {sk, g, t}), out - gen.p_max * u[g][t], Relation::less_equal, 0.0);
                if (t > 0 || gen.initially_on) {
                    const LinExpr step = out - (t > 0 ? prev_out[g] : LinExpr(gen.p_initial));
                    m.add_constraint(idx("ramp_up", {sk, g, t}), step, Relation::less_equal, gen.ramp_up);
                    m.add_constraint(idx("ramp_dn", {sk, g, t}), step, Relation::greater_equal, -gen.ramp_down);
                }
                injection[gen.bus] += out;
                prev_out[g] = out;
                regulation.add(up, dt * gen.cost_up).add(dn, dt * gen.cost_down);
            }
            for (std::size_t r = 0; r < c.res.size(); ++r) {
                const double avail = set.value(s, res_u[r], t);
                const int curt = m.add_variable(idx("Rc", {sk, static_cast<int>(r), t}), 0.0, avail);
                injection[c.res[r].bus] += LinExpr(avail);
                injection[c.res[r].bus].add(curt, -1.0);
                penalty.add(curt, dt * c.curtailment_penalty);
            }
            for (std::size_t l = 0; l < c.loads.size(); ++l) {
                const double demand = set.value(s, load_u[l], t);
                const int shed = m.add_variable(idx("Ls", {sk, static_cast<int>(l), t}), 0.0, demand);
                injection[c.loads[l].bus] += LinExpr(-demand);
                injection[c.loads[l].bus].add(shed, 1.0);
                penalty.add(shed, dt * c.shedding_penalty);
            }

            // DC power flow: net injection equals the susceptance-weighted outflow.
            std::vector<int> theta(c.num_buses, -1);
            for (int b = 0; b < c.num_buses; ++b)
                if (b != c.reference_bus)
                    theta[b] = m.add_variable(idx("theta", {sk, b, t}), -c.angle_max, c.angle_max);
            for (const auto& line : c.lines) {
                const double w = c.s_base_mva * line.b;
                // Flow from -> to = w * (theta_from - theta_to).
                if (theta[line.from] >= 0) {
                    injection[line.from].add(theta[line.from], -w);
                    injection[line.to].add(theta[line.from], w);
                }
                if (theta[line.to] >= 0) {
                    injection[line.from].add(theta[line.to], w);
                    injection[line.to].add(theta[line.to], -w);
                }
            }
            for (int b = 0; b < c.num_buses; ++b)
                m.add_constraint(idx("balance", {sk, b, t}), injection[b], Relation::equal, 0.0);
        }

        LinExpr cost = day_ahead + regulation + penalty;
        m.add_objective(weights[k] * cost);
        cm.member_cost.push_back(cost);
        cm.member_components.push_back({{"day_ahead", day_ahead},
                                        {"regulation", regulation},
                                        {"penalty", penalty},
                                        {"intraday", regulation + penalty}});
    }
    return cm;
}

namespace {

double bump(double h, double centre, double width) {
    const double z = (h - centre) / width;
    return std::exp(-z * z);
}

}  // namespace

UcDeskInstance make_uc_desk_instance(std::uint64_t seed, int n, int horizon, double bad_fraction) {
    if (horizon < 2) throw ValidationError("desk instance needs at least 2 periods");
    if (n < 1) throw ValidationError("desk instance needs at least one scenario");
    if (!(bad_fraction >= 0.0 && bad_fraction <= 1.0)) throw ValidationError("bad_fraction must lie in [0, 1]");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    UcConfig c;
    c.num_buses = 3;
    c.reference_bus = 0;
    c.horizon = horizon;
    c.dt_hours = 24.0 / horizon;
    c.lines = {{0, 1, 10.0}, {1, 2, 10.0}, {0, 2, 8.0}};

    UcGenerator base;
    base.bus = 0;
    base.p_min = 10.0;
    base.p_max = 85.0;
    base.ramp_up = base.ramp_down = 60.0;
    base.cost_pg = 20.0;
    base.cost_nl = 50.0;
    base.cost_on = 400.0;
    base.cost_off = 50.0;
    base.cost_up = 25.0;
    base.cost_down = 2.0;
    base.min_up = 3;
    base.min_down = 2;
    base.initially_on = true;
    base.p_initial = 50.0;

    UcGenerator peaker;
    peaker.bus = 1;
    peaker.p_min = 5.0;
    peaker.p_max = 60.0;
    peaker.ramp_up = peaker.ramp_down = 60.0;
    peaker.cost_pg = 60.0;
    peaker.cost_nl = 40.0;
    peaker.cost_on = 150.0;
    peaker.cost_off = 20.0;
    peaker.cost_up = 70.0;
    peaker.cost_down = 2.0;
    c.generators = {base, peaker};
    c.res = {{"wt1", 2}, {"pv1", 1}};
    c.loads = {{"load1", 2}, {"load2", 1}};

    std::vector<double> hours(horizon), load_shape(horizon), pv_shape(horizon);
    for (int t = 0; t < horizon; ++t) {
        const double h = (t + 0.5) * c.dt_hours;
        hours[t] = h;
        load_shape[t] = 0.6 + 0.25 * bump(h, 9.0, 3.0) + 0.45 * bump(h, 19.0, 2.5);
        pv_shape[t] = h > 6.0 && h < 18.0 ? std::sin(M_PI * (h - 6.0) / 12.0) : 0.0;
    }

    const int n_bad = static_cast<int>(std::lround(n * bad_fraction));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<bool> bad(n, false);
    for (int b = 0; b < n_bad; ++b) bad[order[b]] = true;

    const double wind_level[] = {0.2, 0.7};
    const double cloud[] = {0.8, 0.6};
    const std::vector<std::string> sources{"wt1", "pv1", "load1", "load2"};
    std::vector<Scenario> scenarios;
    for (int i = 0; i < n; ++i) {
        const int regime = unif(rng) < 0.5 ? 0 : 1;
        Scenario sc;
        sc.id = "s" + std::to_string(i);
        sc.values.assign(sources.size() * horizon, 0.0);
        double ar = 0.0;
        const double l1 = 1.0 + 0.05 * normal(rng), l2 = 1.0 + 0.05 * normal(rng);
        for (int t = 0; t < horizon; ++t) {
            ar = 0.6 * ar + 0.08 * normal(rng);
            sc.values[0 * horizon + t] = 30.0 * std::clamp(wind_level[regime] + ar, 0.0, 1.0);
            sc.values[1 * horizon + t] =
                std::max(0.0, 25.0 * pv_shape[t] * std::clamp(cloud[regime] + 0.1 * normal(rng), 0.0, 1.0));
            sc.values[2 * horizon + t] = std::max(0.0, 45.0 * load_shape[t] * (l1 + 0.04 * normal(rng)));
            sc.values[3 * horizon + t] = std::max(0.0, 30.0 * load_shape[t] * (l2 + 0.04 * normal(rng)));
        }
        if (bad[i]) {
            // Wind lull and an evening peak 25 MW beyond the baseload unit,
            // shared by both loads.
            int peak = 0;
            for (int t = 0; t < horizon; ++t)
                if (std::abs(hours[t] - 19.0) < std::abs(hours[peak] - 19.0)) peak = t;
            for (int t = 0; t < horizon; ++t) sc.values[0 * horizon + t] *= 0.2;
            const double net = sc.values[2 * horizon + peak] + sc.values[3 * horizon + peak] -
                               sc.values[0 * horizon + peak] - sc.values[1 * horizon + peak];
            const double surge = std::max(0.0, base.p_max - net) + 25.0;
            sc.values[2 * horizon + peak] += 0.5 * surge;
            sc.values[3 * horizon + peak] += 0.5 * surge;
        }
        scenarios.push_back(std::move(sc));
    }

    c.validate();
    ScenarioSet set(sources, horizon, std::move(scenarios), std::vector<double>(n, 1.0 / n));
    return {std::move(c), std::move(set), std::move(bad)};
}

}  // namespace pdsr
