#pragma once

#include "lwucb/rng.hpp"
#include "lwucb/types.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace lwucb {

enum class EnvironmentKind {
    Synthetic, ///< non-contextual benchmark grid
    Wheel,     ///< wheel bandit on the unit disk
    Sensor,    ///< dataset-backed sensor snapshot
};

/// Bandit reward oracle over a fixed candidate set.
class Environment {
public:
    Environment(std::string name, EnvironmentKind kind, CandidateSet candidates,
                Eigen::VectorXd true_values, double noise_std);

    const std::string& name() const noexcept { return name_; }
    EnvironmentKind kind() const noexcept { return kind_; }
    const CandidateSet& candidates() const noexcept { return candidates_; }
    const Eigen::VectorXd& true_values() const noexcept { return true_values_; }
    double noise_std() const noexcept { return noise_std_; }
    double optimum() const noexcept { return optimum_; }
    /// Lowest-index arm attaining the optimum.
    std::size_t best_arm() const noexcept { return best_arm_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(true_values_.size()); }

    /// f(x*) - f(x_i) from noise-free values.
    double simple_regret(std::size_t arm) const;

    /// |D| used by GP-UCB: arm count, or context dimension for sensor data.
    double beta_cardinality() const noexcept;

private:
    std::string name_;
    EnvironmentKind kind_;
    CandidateSet candidates_;
    Eigen::VectorXd true_values_;
    double noise_std_;
    double optimum_;
    std::size_t best_arm_;
};

struct PullResult {
    double reward;
    double simple_regret;
};

/// true value + N(0, sigma_n^2). Throws std::out_of_range for an unknown arm.
PullResult pull(const Environment& env, std::size_t arm, Rng& rng);

double cosine_value(double x1, double x2);
double michalewicz_value(double x1, double x2);
double modified_michalewicz_value(double x1, double x2);
double wheel_value(double x, double y, double rho);

/// grid_n x grid_n nodes of [0, 1]^2 including both endpoints.
Eigen::MatrixXd unit_grid(int grid_n);

Environment make_cosine(int grid_n = 50, double noise_std = 1e-4);
Environment make_michalewicz(int grid_n = 50, double noise_std = 1e-4);
Environment make_modified_michalewicz(int grid_n = 50, double noise_std = 1e-4);
/// grid_n x grid_n nodes of [-1, 1]^2 restricted to r <= 1.
Environment make_wheel(double rho, int grid_n = 70, double noise_std = 1e-3);

/// Sensor readings: one context per sensor and a list of snapshots.
struct SnapshotDataset {
    struct Snapshot {
        std::string label;
        /// Indices into sensor_ids of the sensors with a reading, ascending.
        std::vector<std::size_t> sensors;
        Eigen::VectorXd values;
    };

    int dims = 2;
    std::vector<std::string> sensor_ids;
    /// One row per sensor: x, y[, z].
    Eigen::MatrixXd contexts;
    std::vector<Snapshot> snapshots;
    /// Rows whose value was missing or NaN.
    std::size_t dropped_rows = 0;
};

/// Parses the snapshot CSV schema (see README). `dims` is 2 or 3.
/// Throws IngestionError with the offending line number.
SnapshotDataset parse_snapshot_csv(std::istream& in, int dims, const std::string& default_label = "0");
SnapshotDataset load_snapshot_csv(const std::filesystem::path& path, int dims);

enum class ContextMode { Full, Partial };

/// One arm per sensor with a reading in the snapshot. Partial mode keeps only x and y.
Environment make_sensor_env(const SnapshotDataset& dataset, std::size_t snapshot_index,
                            ContextMode mode = ContextMode::Full, double noise_std = 1e-4);

} // namespace lwucb
