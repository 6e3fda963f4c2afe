#include "pdsr/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pdsr/error.hpp"

namespace pdsr {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        auto b = f.find_first_not_of(" \t");
        auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid number '" + s + "'", line);
    return v;
}

long parse_int(const std::string& s, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid integer '" + s + "'", line);
    return v;
}

bool starts_with_ci(const std::string& s, const char* prefix) {
    std::size_t i = 0;
    for (; prefix[i]; ++i)
        if (i >= s.size() || std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    return true;
}

}  // namespace

const char* to_string(SourceRole role) {
    switch (role) {
        case SourceRole::wt: return "wt";
        case SourceRole::pv: return "pv";
        case SourceRole::load: return "load";
        case SourceRole::price: return "price";
    }
    return "unknown";
}

SourceRole infer_role(const std::string& source) {
    if (starts_with_ci(source, "wt")) return SourceRole::wt;
    if (starts_with_ci(source, "pv")) return SourceRole::pv;
    if (starts_with_ci(source, "load")) return SourceRole::load;
    if (starts_with_ci(source, "price")) return SourceRole::price;
    throw ConfigError("cannot infer the role of source '" + source + "' (expected prefix wt, pv, load or price)");
}

ScenarioSet::ScenarioSet(std::vector<std::string> sources, int horizon, std::vector<Scenario> scenarios,
                         std::vector<double> probabilities)
    : sources_(std::move(sources)),
      horizon_(horizon),
      scenarios_(std::move(scenarios)),
      probabilities_(std::move(probabilities)) {
    if (scenarios_.empty()) throw ValidationError("a scenario set needs at least one scenario");
    if (horizon_ < 1) throw ShapeError("horizon must be positive");
    if (sources_.empty()) throw ShapeError("a scenario set needs at least one source");
    for (const auto& s : sources_) roles_.push_back(infer_role(s));
    std::unordered_set<std::string> ids;
    const std::size_t width = sources_.size() * static_cast<std::size_t>(horizon_);
    for (const auto& sc : scenarios_) {
        if (!ids.insert(sc.id).second) throw ValidationError("duplicate scenario id '" + sc.id + "'");
        if (sc.values.size() != width) throw ShapeError("scenario '" + sc.id + "' has the wrong number of values");
        for (std::size_t u = 0; u < sources_.size(); ++u) {
            for (int t = 0; t < horizon_; ++t) {
                const double v = sc.values[u * horizon_ + t];
                if (!std::isfinite(v)) throw ValidationError("scenario '" + sc.id + "' has a non-finite value");
                if (roles_[u] != SourceRole::price && v < 0.0)
                    throw ValidationError("scenario '" + sc.id + "' has negative power for " + sources_[u]);
            }
        }
    }
    if (probabilities_.size() != scenarios_.size())
        throw ShapeError("probability count does not match scenario count");
    double sum = 0.0;
    for (double p : probabilities_) {
        if (!(p > 0.0)) throw ValidationError("scenario probabilities must be positive");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("scenario probabilities must sum to 1");
}

std::optional<int> ScenarioSet::source_index(const std::string& name) const {
    auto it = std::find(sources_.begin(), sources_.end(), name);
    if (it == sources_.end()) return std::nullopt;
    return static_cast<int>(it - sources_.begin());
}

std::vector<int> ScenarioSet::sources_with_role(SourceRole role) const {
    std::vector<int> out;
    for (int u = 0; u < num_sources(); ++u)
        if (roles_[u] == role) out.push_back(u);
    return out;
}

double ScenarioSet::distance(int i, int j) const {
    const auto& a = scenarios_[i].values;
    const auto& b = scenarios_[j].values;
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
    return std::sqrt(s);
}

ScenarioSet ScenarioSet::with_probabilities(std::vector<double> probabilities) const {
    return ScenarioSet(sources_, horizon_, scenarios_, std::move(probabilities));
}

ScenarioSet ScenarioSet::subset(std::span<const int> indices) const {
    std::vector<Scenario> sc;
    std::vector<double> raw;
    for (int i : indices) {
        sc.push_back(scenarios_.at(i));
        raw.push_back(probabilities_.at(i));
    }
    return ScenarioSet(sources_, horizon_, std::move(sc), normalize_probabilities(raw));
}

std::vector<double> normalize_probabilities(std::span<const double> raw) {
    if (raw.empty()) throw ValidationError("no probabilities given");
    double sum = 0.0;
    for (double p : raw) {
        if (!std::isfinite(p) || p < 0.0) throw ValidationError("probabilities must be finite and non-negative");
        sum += p;
    }
    if (sum <= 0.0) throw ValidationError("probabilities are all zero");
    std::vector<double> out;
    out.reserve(raw.size());
    for (double p : raw) {
        if (p == 0.0) throw ValidationError("zero probability is not allowed; remove the scenario instead");
        out.push_back(p / sum);
    }
    return out;
}

ScenarioSet load_scenarios(const std::filesystem::path& values_path,
                           const std::optional<std::filesystem::path>& probabilities_path) {
    std::ifstream in(values_path);
    if (!in) throw Error("cannot open " + values_path.string());
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty scenario file", 1);
    ++lineno;
    const auto header = split_csv_line(line);
    if (header != std::vector<std::string>{"scenario_id", "source", "t", "value"})
        throw ParseError("expected header scenario_id,source,t,value", 1);

    std::vector<std::string> ids;
    std::unordered_map<std::string, int> id_index;
    std::vector<std::string> sources;
    std::unordered_map<std::string, int> source_index;
    std::vector<std::map<std::pair<int, long>, double>> cells;
    long max_t = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw ParseError("expected 4 fields", lineno);
        if (f[0].empty() || f[1].empty()) throw ParseError("empty scenario id or source", lineno);
        const long t = parse_int(f[2], lineno);
        if (t < 0) throw ParseError("negative time index", lineno);
        const double v = parse_double(f[3], lineno);
        auto [sit, snew] = id_index.emplace(f[0], static_cast<int>(ids.size()));
        if (snew) {
            ids.push_back(f[0]);
            cells.emplace_back();
        }
        auto [uit, unew] = source_index.emplace(f[1], static_cast<int>(sources.size()));
        if (unew) sources.push_back(f[1]);
        if (!cells[sit->second].emplace(std::make_pair(uit->second, t), v).second)
            throw ParseError("duplicate entry for (" + f[0] + ", " + f[1] + ", " + f[2] + ")", lineno);
        max_t = std::max(max_t, t);
    }
    if (ids.empty()) throw ParseError("scenario file has no data rows", lineno);
    const int horizon = static_cast<int>(max_t + 1);
    const std::size_t width = sources.size() * static_cast<std::size_t>(horizon);
    std::vector<Scenario> scenarios;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (cells[i].size() != width)
            throw ShapeError("scenario '" + ids[i] + "' does not cover every source and time step");
        Scenario sc{ids[i], std::vector<double>(width)};
        for (const auto& [key, v] : cells[i]) sc.values[key.first * horizon + key.second] = v;
        scenarios.push_back(std::move(sc));
    }

    std::vector<double> probs(ids.size(), 1.0 / static_cast<double>(ids.size()));
    if (probabilities_path) {
        std::ifstream pin(*probabilities_path);
        if (!pin) throw Error("cannot open " + probabilities_path->string());
        std::size_t pl = 1;
        if (!std::getline(pin, line) || split_csv_line(line) != std::vector<std::string>{"scenario_id", "probability"})
            throw ParseError("expected header scenario_id,probability", 1);
        std::vector<bool> seen(ids.size(), false);
        double sum = 0.0;
        while (std::getline(pin, line)) {
            ++pl;
            if (line.empty() || line == "\r") continue;
            const auto f = split_csv_line(line);
            if (f.size() != 2) throw ParseError("expected 2 fields", pl);
            auto it = id_index.find(f[0]);
            if (it == id_index.end()) throw ParseError("unknown scenario id '" + f[0] + "'", pl);
            if (seen[it->second]) throw ParseError("duplicate probability for '" + f[0] + "'", pl);
            seen[it->second] = true;
            probs[it->second] = parse_double(f[1], pl);
            sum += probs[it->second];
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end())
            throw ValidationError("probability file does not cover every scenario");
        if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("probabilities sum to " + format_double(sum) + ", not 1");
        probs = normalize_probabilities(probs);
    }
    return ScenarioSet(std::move(sources), horizon, std::move(scenarios), std::move(probs));
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string scenarios_to_csv(const ScenarioSet& set) {
    std::string out = "scenario_id,source,t,value\n";
    for (const auto& sc : set.scenarios()) {
        for (int u = 0; u < set.num_sources(); ++u) {
            for (int t = 0; t < set.horizon(); ++t) {
                out += sc.id;
                out += ',';
                out += set.sources()[u];
                out += ',';
                out += std::to_string(t);
                out += ',';
                out += format_double(sc.values[u * set.horizon() + t]);
                out += '\n';
            }
        }
    }
    return out;
}

std::string probabilities_to_csv(const ScenarioSet& set) {
    std::string out = "scenario_id,probability\n";
    for (int i = 0; i < set.size(); ++i) out += set.scenario(i).id + "," + format_double(set.probabilities()[i]) + "\n";
    return out;
}

void save_scenarios(const ScenarioSet& set, const std::filesystem::path& values_path) {
    write_file(values_path, scenarios_to_csv(set));
}

void save_probabilities(const ScenarioSet& set, const std::filesystem::path& path) {
    write_file(path, probabilities_to_csv(set));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace pdsr
