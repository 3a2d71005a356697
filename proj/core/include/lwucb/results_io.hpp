#pragma once

#include "lwucb/harness.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lwucb {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr std::string_view kArtifactVersion = "0.1.0";

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

nlohmann::json to_json(const AcquisitionConfig& acq);
AcquisitionConfig acquisition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrialConfig& cfg);
TrialConfig trial_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GpHyperparams& hp);
GpHyperparams hyperparams_from_json(const nlohmann::json& j);

/// Everything needed to reproduce a bundle besides the environment itself.
struct RunManifest {
    /// Caller description of the experiment (environment spec, name, ...).
    nlohmann::json experiment = nlohmann::json::object();
    TrialConfig trial{};
    std::uint64_t master_seed = 0;
    std::size_t requested_trials = 0;
    /// Trial index of each persisted record.
    std::vector<std::size_t> trial_indices;
    std::vector<TrialFailure> failures;
};

/// `round,arm_id,reward,simple_regret,cumulative_regret,seconds`, rounds from 1.
void write_trace_csv(std::ostream& out, const TrialRecord& record);
/// `round,median_cum_regret,mad`.
void write_aggregate_csv(std::ostream& out, const AggregateCurves& curves);

/// Writes manifest.json, traces/trial_NNNN.csv and aggregate.csv under `dir`.
/// Throws IoError with the failing path.
void persist_results(const std::filesystem::path& dir, const RunManifest& manifest,
                     std::span<const TrialRecord> records, const AggregateCurves& curves);

struct ResultBundle {
    nlohmann::json manifest;
    std::vector<TrialRecord> records;
    AggregateCurves curves;
};

/// Reads a bundle written by persist_results.
ResultBundle read_results(const std::filesystem::path& dir);

} // namespace lwucb
