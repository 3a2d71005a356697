#include "lwucb/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace lwucb {

namespace {

// Independent streams carved out of a trial seed.
enum Stream : std::uint64_t { kInitStream = 0, kNoiseStream = 1, kPolicyStream = 2 };

} // namespace

void TrialConfig::validate() const
{
    acquisition.validate();
    if (horizon < 1)
        throw std::invalid_argument("trial.horizon: must be >= 1");
    if (n_init < 1)
        throw std::invalid_argument("trial.n_init: must be >= 1");
    if (fixed_noise_variance && !(*fixed_noise_variance > 0.0))
        throw std::invalid_argument("trial.fixed_noise_variance: must be positive");
    if (fit.restarts < 1)
        throw std::invalid_argument("trial.fit.restarts: must be >= 1");
}

AcquisitionPolicy::AcquisitionPolicy(const TrialConfig& config, double beta_cardinality, std::uint64_t seed)
    : config_(config),
      beta_cardinality_(config.acquisition.cardinality_for_beta.value_or(beta_cardinality)),
      rng_(seed)
{
}

std::size_t AcquisitionPolicy::select(const RoundState& state)
{
    const AcquisitionConfig& acq = config_.acquisition;
    GpFitConfig fit = config_.fit;
    fit.fixed_noise_variance = config_.fixed_noise_variance;
    if (config_.warm_start && last_hp_)
        fit.warm_start = last_hp_;

    const GpModel model = gp_fit(state.history, fit, rng_);
    last_hp_ = model.hyperparams();
    const GpPrediction pred = gp_predict(model, state.candidates);
    const Eigen::VectorXd sd = pred.stddev();

    switch (acq.kind) {
    case AcquisitionKind::V_UCB:
        last_scores_ = score_vucb(pred.mean, sd, acq.kappa);
        break;
    case AcquisitionKind::GP_UCB:
        last_scores_ = score_gpucb(pred.mean, sd, state.t, beta_cardinality_, acq.delta);
        break;
    case AcquisitionKind::EI:
        last_scores_ = score_ei(pred.mean, sd, state.history.rewards().maxCoeff(), acq.xi);
        break;
    case AcquisitionKind::TS:
        last_scores_ = sample_marginal(pred, rng_);
        break;
    case AcquisitionKind::LW_UCB:
        last_field_ = compute_likelihood_ratio(pred.mean, state.candidates, acq.n_gmm, rng_, acq.input_prior);
        last_scores_ = score_lwucb(pred.mean, sd, *last_field_, state.candidates, acq.kappa);
        break;
    }
    return select_next_arm(last_scores_);
}

TrialRecord run_trial(const Environment& env, const TrialConfig& config)
{
    AcquisitionPolicy policy(config, env.beta_cardinality(), derive_seed(config.seed, kPolicyStream));
    return run_trial(env, config, policy);
}

TrialRecord run_trial(const Environment& env, const TrialConfig& config, Policy& policy)
{
    config.validate();
    const std::size_t m = env.size();
    if (static_cast<std::size_t>(config.n_init) > m)
        throw std::invalid_argument("run_trial: n_init exceeds the number of arms");

    const CandidateSet candidates =
        config.normalize_contexts ? env.candidates().normalized() : env.candidates();

    TrialRecord rec;
    rec.environment = env.name();
    rec.seed = config.seed;

    Rng init_rng(derive_seed(config.seed, kInitStream));
    Rng noise_rng(derive_seed(config.seed, kNoiseStream));

    // Partial Fisher-Yates: first n_init entries become a uniform sample without replacement.
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i)
        order[i] = i;
    for (std::size_t i = 0; i < static_cast<std::size_t>(config.n_init); ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(order[i], order[pick(init_rng)]);
    }

    History history(candidates.dim());
    for (int i = 0; i < config.n_init; ++i) {
        const std::size_t arm = order[static_cast<std::size_t>(i)];
        const PullResult r = pull(env, arm, noise_rng);
        history.append(candidates.context(static_cast<Eigen::Index>(arm)), r.reward);
        rec.init_arms.push_back(arm);
        rec.init_rewards.push_back(r.reward);
    }

    const auto horizon = static_cast<std::size_t>(config.horizon);
    rec.arms.reserve(horizon);
    double cumulative = 0.0;
    for (int t = 1; t <= config.horizon; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t arm = policy.select(RoundState{t, env, candidates, history});
        const PullResult r = pull(env, arm, noise_rng);
        history.append(candidates.context(static_cast<Eigen::Index>(arm)), r.reward);
        const auto stop = std::chrono::steady_clock::now();

        cumulative += r.simple_regret;
        rec.arms.push_back(arm);
        rec.arm_ids.push_back(env.candidates().id(static_cast<Eigen::Index>(arm)));
        rec.rewards.push_back(r.reward);
        rec.simple_regrets.push_back(r.simple_regret);
        rec.cumulative_regrets.push_back(cumulative);
        rec.seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    rec.final_hyperparams = policy.last_hyperparams();
    return rec;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial)
{
    return derive_seed(master_seed, static_cast<std::uint64_t>(trial));
}

ExperimentResult run_experiment(std::span<const Environment> envs, const TrialConfig& config,
                                std::size_t n_trials, std::uint64_t master_seed, int jobs)
{
    if (envs.empty())
        throw std::invalid_argument("run_experiment: no environments");
    if (n_trials == 0)
        throw std::invalid_argument("run_experiment: n_trials must be >= 1");
    config.validate();

    std::vector<std::optional<TrialRecord>> records(n_trials);
    std::vector<std::optional<TrialFailure>> failures(n_trials);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < n_trials; i = next++) {
            const Environment& env = envs[i % envs.size()];
            TrialConfig cfg = config;
            cfg.seed = trial_seed(master_seed, i);
            try {
                records[i] = run_trial(env, cfg);
            } catch (const std::exception& e) {
                failures[i] = TrialFailure{i, cfg.seed, env.name(), e.what()};
            }
        }
    };

    const auto n_workers = static_cast<std::size_t>(std::clamp<long long>(jobs, 1, static_cast<long long>(n_trials)));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w)
            pool.emplace_back(worker);
    }

    ExperimentResult out;
    for (std::size_t i = 0; i < n_trials; ++i) {
        if (records[i]) {
            out.records.push_back(std::move(*records[i]));
            out.trial_indices.push_back(i);
        }
        if (failures[i])
            out.failures.push_back(std::move(*failures[i]));
    }
    return out;
}

double median(std::vector<double> values)
{
    if (values.empty())
        throw std::invalid_argument("median: empty sample");
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1)
        return upper;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

AggregateCurves aggregate(std::span<const TrialRecord> records)
{
    if (records.empty())
        throw std::invalid_argument("aggregate: no records");
    const std::size_t horizon = records.front().horizon();
    for (const TrialRecord& r : records) {
        if (r.horizon() != horizon || r.cumulative_regrets.size() != horizon)
            throw std::invalid_argument("aggregate: records have different horizons");
    }

    AggregateCurves out;
    out.trials = records.size();
    out.median_cumulative_regret.resize(horizon);
    out.mad.resize(horizon);
    std::vector<double> column(records.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t i = 0; i < records.size(); ++i)
            column[i] = records[i].cumulative_regrets[t];
        const double med = median(column);
        for (double& v : column)
            v = std::abs(v - med);
        out.median_cumulative_regret[t] = med;
        out.mad[t] = median(column);
    }
    return out;
}

std::vector<RuntimeRow> time_iterations(const Environment& env, const TrialConfig& base,
                                        std::span<const AcquisitionConfig> acquisitions,
                                        std::size_t n_experiments, std::uint64_t master_seed)
{
    if (n_experiments == 0)
        throw std::invalid_argument("time_iterations: n_experiments must be >= 1");
    std::vector<RuntimeRow> rows;
    for (const AcquisitionConfig& acq : acquisitions) {
        RuntimeRow row{acq.label(), acq.kind, 0.0, 0, 0};
        double total = 0.0;
        for (std::size_t e = 0; e < n_experiments; ++e) {
            TrialConfig cfg = base;
            cfg.acquisition = acq;
            cfg.seed = trial_seed(master_seed, e);
            try {
                const TrialRecord rec = run_trial(env, cfg);
                for (double s : rec.seconds)
                    total += s;
                row.iterations += rec.seconds.size();
            } catch (const std::exception&) {
                ++row.failures;
            }
        }
        row.mean_seconds = row.iterations ? total / static_cast<double>(row.iterations) : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace lwucb
