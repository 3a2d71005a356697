#pragma once

#include "lwucb/acquisition.hpp"
#include "lwucb/environments.hpp"
#include "lwucb/gp.hpp"
#include "lwucb/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lwucb {

struct TrialConfig {
    AcquisitionConfig acquisition{};
    /// Rounds after initialization.
    int horizon = 100;
    /// Initial arms drawn uniformly without replacement.
    int n_init = 3;
    std::uint64_t seed = 0;
    /// Map contexts onto [0, 1]^d before fitting.
    bool normalize_contexts = true;
    /// Hold the GP noise variance at this value instead of learning it.
    std::optional<double> fixed_noise_variance;
    /// Start each round's fit from the previous round's hyperparameters.
    bool warm_start = false;
    GpFitConfig fit{};

    void validate() const;
};

/// Per-round trace of one trial; every vector has length horizon.
struct TrialRecord {
    std::string environment;
    std::uint64_t seed = 0;
    std::vector<std::size_t> init_arms;
    std::vector<double> init_rewards;
    std::vector<std::size_t> arms;
    std::vector<std::string> arm_ids;
    std::vector<double> rewards;
    std::vector<double> simple_regrets;
    std::vector<double> cumulative_regrets;
    std::vector<double> seconds;
    std::optional<GpHyperparams> final_hyperparams;

    std::size_t horizon() const noexcept { return arms.size(); }
};

struct RoundState {
    /// 1-based round index after initialization.
    int t;
    const Environment& env;
    /// Candidate contexts as seen by the model (normalized when configured).
    const CandidateSet& candidates;
    const History& history;
};

/// Arm-selection strategy driven by run_trial.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::size_t select(const RoundState& state) = 0;
    virtual std::optional<GpHyperparams> last_hyperparams() const { return std::nullopt; }
};

/// Fit GP, score every candidate with the configured acquisition, take the argmax.
class AcquisitionPolicy final : public Policy {
public:
    AcquisitionPolicy(const TrialConfig& config, double beta_cardinality, std::uint64_t seed);

    std::size_t select(const RoundState& state) override;
    std::optional<GpHyperparams> last_hyperparams() const override { return last_hp_; }

    /// Likelihood-ratio field of the latest LW-UCB round.
    const std::optional<LikelihoodRatioField>& last_field() const noexcept { return last_field_; }
    const Eigen::VectorXd& last_scores() const noexcept { return last_scores_; }

private:
    TrialConfig config_;
    double beta_cardinality_;
    Rng rng_;
    std::optional<GpHyperparams> last_hp_;
    std::optional<LikelihoodRatioField> last_field_;
    Eigen::VectorXd last_scores_;
};

/// Runs the bandit loop: n_init random pulls, then `horizon` rounds of
/// select -> pull -> append. Deterministic in (env, config) apart from timings.
TrialRecord run_trial(const Environment& env, const TrialConfig& config);
TrialRecord run_trial(const Environment& env, const TrialConfig& config, Policy& policy);

/// Seed of trial `trial` under `master_seed` (see derive_seed).
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial);

struct TrialFailure {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::string environment;
    std::string message;
};

struct ExperimentResult {
    /// Successful trials in trial-index order.
    std::vector<TrialRecord> records;
    std::vector<std::size_t> trial_indices;
    std::vector<TrialFailure> failures;
};

/// Trial i runs on envs[i % envs.size()] with seed trial_seed(master_seed, i).
/// Up to `jobs` trials run concurrently; failures are collected, not rethrown.
ExperimentResult run_experiment(std::span<const Environment> envs, const TrialConfig& config,
                                std::size_t n_trials, std::uint64_t master_seed, int jobs = 1);

struct AggregateCurves {
    std::vector<double> median_cumulative_regret;
    /// Unscaled median absolute deviation from the median.
    std::vector<double> mad;
    std::size_t trials = 0;

    std::size_t horizon() const noexcept { return median_cumulative_regret.size(); }
};

/// Median of a non-empty sample; the mean of the two central values for even sizes.
double median(std::vector<double> values);

/// Pointwise median and MAD of cumulative regret. Records must share a horizon.
AggregateCurves aggregate(std::span<const TrialRecord> records);

struct RuntimeRow {
    std::string label;
    AcquisitionKind kind;
    double mean_seconds = 0.0;
    std::size_t iterations = 0;
    std::size_t failures = 0;
};

/// Mean wall-clock seconds per loop iteration for each acquisition, over
/// n_experiments serial trials sharing seeds across acquisitions.
std::vector<RuntimeRow> time_iterations(const Environment& env, const TrialConfig& base,
                                        std::span<const AcquisitionConfig> acquisitions,
                                        std::size_t n_experiments = 10, std::uint64_t master_seed = 0);

} // namespace lwucb
