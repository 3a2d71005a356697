#pragma once

#include "lwucb/environments.hpp"
#include "lwucb/harness.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lwucb::cli {

/// Invalid experiment spec. field() is the dotted path of the offending entry.
class SpecError : public std::runtime_error {
public:
    SpecError(const std::string& field, const std::string& why)
        : std::runtime_error(field + ": " + why), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

struct EnvironmentSpec {
    /// cosine | michalewicz | modified_michalewicz | wheel | sensor
    std::string type;
    int grid_n = 50;
    double noise_std = 1e-4;
    double rho = 0.5;
    /// Sensor data as written in the experiment file, and resolved against the experiment file's directory.
    std::string snapshot_file;
    std::filesystem::path snapshot_path;
    int dims = 2;
    ContextMode context = ContextMode::Full;
    /// Snapshot indices to use; empty means all.
    std::vector<std::size_t> snapshots;
};

struct ExperimentSpec {
    std::string name;
    EnvironmentSpec environment;
    std::vector<AcquisitionConfig> acquisitions;
    int horizon = 100;
    std::size_t trials = 20;
    int n_init = 3;
    std::uint64_t seed = 0;
    std::string output_dir = "results";
    bool normalize_contexts = true;
    std::optional<double> fixed_noise_variance;
    bool warm_start = false;
    int restarts = 8;
    /// Serial trials per acquisition for bench-runtime.
    std::size_t runtime_experiments = 10;

    /// Harness configuration for one of the acquisitions.
    TrialConfig trial_config(const AcquisitionConfig& acquisition) const;
};

/// Parses and validates. Relative snapshot paths resolve against `base_dir`.
/// Throws SpecError naming the field.
ExperimentSpec parse_spec(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
/// Reads a JSON spec file (comments allowed). Throws IoError if unreadable.
ExperimentSpec load_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentSpec& spec);

/// Environments described by the experiment file; one per selected snapshot for sensor data.
std::vector<Environment> build_environments(const EnvironmentSpec& spec);

} // namespace lwucb::cli
