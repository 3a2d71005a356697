#pragma once

#include "lwucb/numopt.hpp"
#include "lwucb/rng.hpp"
#include "lwucb/types.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <vector>

namespace lwucb {

/// Lower bound on the effective observation-noise variance.
inline constexpr double kNoiseFloor = 1e-8;

/// Diagonal jitter is kJitterStart * signal variance, escalated x10 up to kJitterMax * signal variance.
inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterMax = 1e-4;

/// SE-ARD kernel and noise hyperparameters, all stored in log space.
struct GpHyperparams {
    double log_signal_variance = 0.0;
    Eigen::VectorXd log_lengthscales;
    double log_noise_variance = 0.0;

    static GpHyperparams from_values(double signal_variance, const Eigen::VectorXd& lengthscales,
                                     double noise_variance);

    Eigen::Index dim() const noexcept { return log_lengthscales.size(); }
    double signal_variance() const { return std::exp(log_signal_variance); }
    Eigen::VectorXd lengthscales() const { return log_lengthscales.array().exp(); }
    /// exp(log_noise_variance) raised to `floor`.
    double noise_variance(double floor = kNoiseFloor) const;

    /// Packs as (log_signal_variance, log_lengthscales..., log_noise_variance).
    Eigen::VectorXd to_vector() const;
    static GpHyperparams from_vector(const Eigen::VectorXd& v);

    bool operator==(const GpHyperparams& other) const;
};

/// sigma_f^2 * exp(-0.5 * sum_d (a_d - b_d)^2 / l_d^2)
double kernel_eval(const Context& a, const Context& b, const GpHyperparams& hp);

/// Cross-covariance between the rows of `a` and the rows of `b`.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GpHyperparams& hp);

/// Negative log marginal likelihood. Requires at least one observation.
/// Throws NumericalError when K + sigma_n^2 I cannot be factorized.
double nlml(const GpHyperparams& hp, const History& history, double noise_floor = kNoiseFloor);

/// Gradient of nlml with respect to GpHyperparams::to_vector() coordinates.
/// The noise coordinate is zero while exp(log_noise_variance) sits below the floor.
Eigen::VectorXd nlml_gradient(const GpHyperparams& hp, const History& history,
                              double noise_floor = kNoiseFloor);

/// Value and gradient from a single factorization.
double nlml_with_gradient(const GpHyperparams& hp, const History& history, Eigen::VectorXd& grad,
                          double noise_floor = kNoiseFloor);

/// GP posterior for fixed hyperparameters. Immutable once constructed.
class GpModel {
public:
    /// An empty history yields the zero-mean prior.
    GpModel(GpHyperparams hp, History history, double noise_floor = kNoiseFloor);

    const GpHyperparams& hyperparams() const noexcept { return hp_; }
    const History& history() const noexcept { return history_; }
    /// N x d training contexts.
    const Eigen::MatrixXd& inputs() const noexcept { return inputs_; }
    /// Lower Cholesky factor of K + sigma_n^2 I + jitter I.
    const Eigen::MatrixXd& chol_factor() const noexcept { return chol_; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    double jitter() const noexcept { return jitter_; }
    double noise_variance() const noexcept { return noise_variance_; }
    double noise_floor() const noexcept { return noise_floor_; }
    /// NLML at the stored hyperparameters (0 for an empty history).
    double nlml() const noexcept { return nlml_; }

private:
    GpHyperparams hp_;
    History history_;
    double noise_floor_;
    double noise_variance_;
    Eigen::MatrixXd inputs_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
    double nlml_ = 0.0;
};

struct GpFitConfig {
    /// Total number of optimizer starts; the first is the data-scaled default.
    int restarts = 8;
    /// Random starts perturb each log-hyperparameter by U(-init_spread, init_spread).
    double init_spread = 3.0;
    double noise_floor = kNoiseFloor;
    /// Hold sigma_n^2 at this value instead of learning it.
    std::optional<double> fixed_noise_variance;
    /// When set, a single start from these hyperparameters replaces the restarts.
    std::optional<GpHyperparams> warm_start;
    MinimizeSettings optimizer{.value_tolerance = 1e-10};
};

/// Data-scaled starting point used by gp_fit: lengthscales at the per-dimension
/// input standard deviation, signal variance at the output second moment about
/// the zero prior mean, noise at 1% of that.
GpHyperparams default_hyperparams(const History& history, double noise_floor = kNoiseFloor);

/// Optimizer starting points gp_fit draws from `rng` for this history.
std::vector<GpHyperparams> fit_starts(const History& history, const GpFitConfig& config, Rng& rng);

/// Minimizes the NLML over hyperparameters with multistart L-BFGS and
/// conditions on `history`. Throws FitError when no start yields a finite NLML.
GpModel gp_fit(const History& history, const GpFitConfig& config, Rng& rng);

struct GpPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;

    Eigen::VectorXd stddev() const { return variance.array().sqrt(); }
};

GpPrediction gp_predict(const GpModel& model, const Eigen::MatrixXd& queries);
GpPrediction gp_predict(const GpModel& model, const CandidateSet& queries);

/// One independent draw from N(mean_i, variance_i) per query.
Eigen::VectorXd sample_marginal(const GpPrediction& prediction, Rng& rng);
Eigen::VectorXd gp_sample_marginal(const GpModel& model, const CandidateSet& queries, Rng& rng);

} // namespace lwucb
