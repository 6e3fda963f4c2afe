#include "pdsr/projection.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pdsr/error.hpp"
#include "pdsr/parallel.hpp"

namespace pdsr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

// Runs one cell and tags any failure with its coordinates.
template <class Fn>
void run_cell(int i, int j, const ScenarioSet& set, Fn&& fn) {
    try {
        fn();
    } catch (const RecourseError& e) {
        throw RecourseError("projection cell (" + set.scenario(i).id + ", " + set.scenario(j).id + "): " + e.what());
    } catch (const Error& e) {
        throw SolverError("projection cell (" + set.scenario(i).id + ", " + set.scenario(j).id + "): " + e.what());
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

double ProblemSpaceMatrix::max_diagonal_excess() const {
    double worst = -milp::inf;
    for (int i = 0; i < size(); ++i)
        for (int j = 0; j < size(); ++j)
            if (i != j) worst = std::max(worst, F(i, i) - F(j, i));
    return size() > 1 ? worst : 0.0;
}

std::string problem_fingerprint(const TssoProblem& problem, const ScenarioSet& set, const SolveOptions& options) {
    std::string data = problem.name();
    data += '\n';
    data += problem.config_json().dump();
    data += '\n';
    data += scenarios_to_csv(set);
    data += "gap_tol=" + format_double(options.gap_tol);
    data += ";recourse_gap_tol=" + format_double(options.recourse_gap_tol);
    data += ";tie_break=" + std::string(options.tie_break ? "1" : "0");
    return sha256_hex(data);
}

ProblemSpaceMatrix build_problem_space_matrix(const TssoProblem& problem, const ScenarioSet& set, int workers,
                                              const SolveOptions& options) {
    if (workers < 1) throw ValidationError("workers must be at least 1");
    problem.check_compatible(set);
    const auto start = Clock::now();
    const int n = set.size();
    ProblemSpaceMatrix m;
    m.problem = problem.name();
    m.gap_tol = options.gap_tol;
    m.fingerprint = problem_fingerprint(problem, set, options);
    for (const auto& sc : set.scenarios()) m.ids.push_back(sc.id);
    m.F = Eigen::MatrixXd::Zero(n, n);
    m.decisions.resize(n);

    parallel_for(n, workers, [&](std::size_t k) {
        const int i = static_cast<int>(k);
        run_cell(i, i, set, [&] {
            StochasticSolution s = solve_scenario_specific(problem, set, i, options);
            m.decisions[i] = std::move(s.decision);
            m.F(i, i) = s.objective;
        });
    });
    m.diagonal_seconds = seconds_since(start);

    const std::size_t cells = static_cast<std::size_t>(n) * n;
    parallel_for(cells, workers, [&](std::size_t k) {
        const int i = static_cast<int>(k / n);
        const int j = static_cast<int>(k % n);
        if (i == j) return;
        run_cell(i, j, set, [&] { m.F(i, j) = evaluate_with_fixed_first_stage(problem, m.decisions[i], set, j, options); });
    });
    m.total_seconds = seconds_since(start);
    return m;
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension(".meta.json");
    return p;
}

void save_matrix(const ProblemSpaceMatrix& m, const std::filesystem::path& csv_path) {
    std::string csv = "id";
    for (const auto& id : m.ids) csv += "," + id;
    csv += '\n';
    for (int i = 0; i < m.size(); ++i) {
        csv += m.ids[i];
        for (int j = 0; j < m.size(); ++j) csv += "," + format_double(m.F(i, j));
        csv += '\n';
    }
    write_file(csv_path, csv);

    nlohmann::json meta;
    meta["problem"] = m.problem;
    meta["fingerprint"] = m.fingerprint;
    meta["gap_tol"] = m.gap_tol;
    meta["ids"] = m.ids;
    meta["decisions"] = nlohmann::json::array();
    for (const auto& d : m.decisions) {
        nlohmann::json jd{{"values", d.values}, {"objective_at_source", d.objective_at_source}};
        if (d.source_scenario) jd["source_scenario"] = *d.source_scenario;
        meta["decisions"].push_back(jd);
    }
    meta["timings"] = {{"diagonal_seconds", m.diagonal_seconds}, {"total_seconds", m.total_seconds}};
    write_file(meta_path_for(csv_path), meta.dump(2) + "\n");
}

ProblemSpaceMatrix load_matrix(const std::filesystem::path& csv_path,
                               const std::optional<std::string>& expected_fingerprint) {
    const auto meta_path = meta_path_for(csv_path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    ProblemSpaceMatrix m;
    try {
        m.problem = meta.at("problem").get<std::string>();
        m.fingerprint = meta.at("fingerprint").get<std::string>();
        m.gap_tol = meta.at("gap_tol").get<double>();
        m.ids = meta.at("ids").get<std::vector<std::string>>();
        for (const auto& jd : meta.at("decisions")) {
            FirstStageDecision d;
            d.values = jd.at("values").get<std::vector<double>>();
            d.objective_at_source = jd.at("objective_at_source").get<double>();
            if (jd.contains("source_scenario")) d.source_scenario = jd.at("source_scenario").get<int>();
            m.decisions.push_back(std::move(d));
        }
        m.diagonal_seconds = meta.at("timings").at("diagonal_seconds").get<double>();
        m.total_seconds = meta.at("timings").at("total_seconds").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    if (expected_fingerprint && *expected_fingerprint != m.fingerprint)
        throw StaleCacheError("cached matrix " + csv_path.string() + " was built for different inputs");

    const int n = static_cast<int>(m.ids.size());
    if (static_cast<int>(m.decisions.size()) != n) throw ParseError(meta_path.string() + ": decision count mismatch");
    std::istringstream in(read_file(csv_path));
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError("empty matrix file", 1);
    auto header = split(line, ',');
    if (header.empty() || header[0] != "id" || static_cast<int>(header.size()) != n + 1)
        throw ParseError("matrix header does not match metadata", 1);
    for (int j = 0; j < n; ++j)
        if (header[j + 1] != m.ids[j]) throw ParseError("matrix header does not match metadata", 1);
    m.F = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        ++lineno;
        if (!std::getline(in, line)) throw ParseError("matrix file is truncated", lineno);
        auto f = split(line, ',');
        if (static_cast<int>(f.size()) != n + 1 || f[0] != m.ids[i])
            throw ParseError("malformed matrix row", lineno);
        for (int j = 0; j < n; ++j) {
            try {
                std::size_t used = 0;
                m.F(i, j) = std::stod(f[j + 1], &used);
                if (used != f[j + 1].size()) throw std::invalid_argument("trailing text");
            } catch (const std::exception&) {
                throw ParseError("invalid number '" + f[j + 1] + "'", lineno);
            }
            if (!std::isfinite(m.F(i, j))) throw ParseError("non-finite matrix entry", lineno);
        }
    }
    return m;
}

}  // namespace pdsr
