#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pdsr/error.hpp"
#include "pdsr/milp.hpp"

namespace pdsr::milp {

namespace {

constexpr std::size_t kWrapColumn = 200;

std::string format_number(double v) {
    if (v == inf) return "+inf";
    if (v == -inf) return "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string sanitize(const std::string& raw) {
    std::string s;
    s.reserve(raw.size());
    for (char c : raw) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
        s.push_back(ok ? c : '_');
    }
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' || s[0] == 'e' || s[0] == 'E')
        s = "n_" + s;
    return s;
}

std::vector<std::string> unique_names(const std::vector<std::string>& raw, const char* fallback) {
    std::vector<std::string> out;
    out.reserve(raw.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        std::string name = raw[i].empty() ? fallback + std::to_string(i) : sanitize(raw[i]);
        if (!seen.insert(name).second) {
            name += "_" + std::to_string(i);
            while (!seen.insert(name).second) name += "_";
        }
        out.push_back(std::move(name));
    }
    return out;
}

// Appends `terms` after `head`, merging repeated variables and wrapping long lines.
void write_terms(std::ostream& os, std::string head, const std::vector<Term>& terms,
                 const std::vector<std::string>& names) {
    std::vector<std::pair<int, double>> merged;
    std::unordered_map<int, std::size_t> where;
    for (const auto& t : terms) {
        auto [it, inserted] = where.emplace(t.var, merged.size());
        if (inserted)
            merged.emplace_back(t.var, t.coef);
        else
            merged[it->second].second += t.coef;
    }
    std::string line = std::move(head);
    bool first = true;
    for (const auto& [var, coef] : merged) {
        if (coef == 0.0) continue;
        std::string piece;
        if (coef < 0.0)
            piece = " - " + format_number(-coef);
        else
            piece = first ? " " + format_number(coef) : " + " + format_number(coef);
        piece += " " + names[var];
        if (line.size() + piece.size() > kWrapColumn) {
            os << line << '\n';
            line.clear();
        }
        line += piece;
        first = false;
    }
    if (first && !names.empty()) line += " 0 " + names[0];
    os << line;
}

}  // namespace

std::string to_lp_string(const Model& model) {
    model.validate();
    std::vector<std::string> raw;
    for (const auto& v : model.variables()) raw.push_back(v.name);
    const auto vars = unique_names(raw, "x");
    raw.clear();
    for (const auto& c : model.constraints()) raw.push_back(c.name);
    const auto rows = unique_names(raw, "c");

    std::vector<Term> objective;
    const auto coefs = model.objective_coefficients();
    for (int j = 0; j < model.num_variables(); ++j)
        if (coefs[j] != 0.0) objective.push_back({j, coefs[j]});

    std::ostringstream os;
    os << "Minimize\n";
    write_terms(os, " obj:", objective, vars);
    if (model.objective_constant() != 0.0) {
        const double c = model.objective_constant();
        os << (c < 0.0 ? " - " : " + ") << format_number(std::abs(c));
    }
    os << "\nSubject To\n";
    for (int i = 0; i < model.num_constraints(); ++i) {
        const auto& c = model.constraints()[i];
        write_terms(os, " " + rows[i] + ":", c.terms, vars);
        const char* rel = c.relation == Relation::less_equal ? " <= " : c.relation == Relation::equal ? " = " : " >= ";
        os << rel << format_number(c.rhs) << '\n';
    }
    os << "Bounds\n";
    for (int j = 0; j < model.num_variables(); ++j) {
        const auto& v = model.variable(j);
        if (v.binary && v.lower == 0.0 && v.upper == 1.0) continue;
        if (v.lower == -inf && v.upper == inf)
            os << ' ' << vars[j] << " free\n";
        else
            os << ' ' << format_number(v.lower) << " <= " << vars[j] << " <= " << format_number(v.upper) << '\n';
    }
    if (model.num_binaries() > 0) {
        os << "Binaries\n";
        for (int j = 0; j < model.num_variables(); ++j)
            if (model.variable(j).binary) os << ' ' << vars[j] << '\n';
    }
    os << "End\n";
    return os.str();
}

void export_lp_file(const Model& model, const std::filesystem::path& path) {
    const std::string text = to_lp_string(model);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace pdsr::milp
