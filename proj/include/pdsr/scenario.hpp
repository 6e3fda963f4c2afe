#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pdsr {

enum class SourceRole { wt, pv, load, price };

const char* to_string(SourceRole role);

/// Role from the source name prefix: wt*, pv*, load*, price*.
SourceRole infer_role(const std::string& source);

struct Scenario {
    std::string id;
    std::vector<double> values;  // row-major (source, t)
};

/// An ordered set of equally shaped scenarios with probabilities.
class ScenarioSet {
public:
    ScenarioSet(std::vector<std::string> sources, int horizon, std::vector<Scenario> scenarios,
                std::vector<double> probabilities);

    int size() const { return static_cast<int>(scenarios_.size()); }
    int num_sources() const { return static_cast<int>(sources_.size()); }
    int horizon() const { return horizon_; }

    const std::vector<std::string>& sources() const { return sources_; }
    const std::vector<SourceRole>& roles() const { return roles_; }
    const std::vector<Scenario>& scenarios() const { return scenarios_; }
    const Scenario& scenario(int i) const { return scenarios_.at(i); }
    const std::vector<double>& probabilities() const { return probabilities_; }

    double value(int i, int source, int t) const { return scenarios_[i].values[source * horizon_ + t]; }
    std::optional<int> source_index(const std::string& name) const;
    std::vector<int> sources_with_role(SourceRole role) const;

    /// Euclidean distance between two scenarios' raw value vectors.
    double distance(int i, int j) const;

    /// Same scenarios with a different probability vector.
    ScenarioSet with_probabilities(std::vector<double> probabilities) const;
    /// Scenarios at `indices` with renormalized probabilities.
    ScenarioSet subset(std::span<const int> indices) const;

private:
    std::vector<std::string> sources_;
    std::vector<SourceRole> roles_;
    int horizon_;
    std::vector<Scenario> scenarios_;
    std::vector<double> probabilities_;
};

/// Divides by the sum. Throws ValidationError on negative, all-zero, or any
/// zero entry (every scenario must carry positive mass).
std::vector<double> normalize_probabilities(std::span<const double> raw);

ScenarioSet load_scenarios(const std::filesystem::path& values_path,
                           const std::optional<std::filesystem::path>& probabilities_path = std::nullopt);

/// Long CSV text `scenario_id,source,t,value` with shortest round-trip numbers.
std::string scenarios_to_csv(const ScenarioSet& set);
std::string probabilities_to_csv(const ScenarioSet& set);
void save_scenarios(const ScenarioSet& set, const std::filesystem::path& values_path);
void save_probabilities(const ScenarioSet& set, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pdsr
