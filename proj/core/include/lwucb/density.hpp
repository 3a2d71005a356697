#pragma once

#include "lwucb/rng.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace lwucb {

/// Gaussian-kernel density estimate on the real line.
class Kde1d {
public:
    /// Throws std::invalid_argument for empty samples, non-finite samples or bandwidth <= 0.
    Kde1d(std::vector<double> samples, double bandwidth);

    const std::vector<double>& samples() const noexcept { return samples_; }
    double bandwidth() const noexcept { return bandwidth_; }

    /// (1 / (N h)) sum_i phi((y - y_i) / h), floored at the smallest normal double.
    double density(double y) const;

private:
    std::vector<double> samples_; // sorted
    double bandwidth_;
};

/// max(1e-6, 1e-3 * (max - min)).
double kde_bandwidth_floor(std::span<const double> values);

/// 0.9 * min(sd, IQR / 1.34) * N^(-1/5), raised to kde_bandwidth_floor.
/// Falls back to sd alone when the IQR is zero.
double silverman_bandwidth(std::span<const double> values);

Kde1d kde_fit(std::span<const double> values);
double kde_eval(const Kde1d& kde, double y);
/// kde_eval at each of `values`, which must be the samples `kde` was fitted on, in any order.
/// Each kernel pair is evaluated once.
Eigen::VectorXd kde_eval_samples(const Kde1d& kde, std::span<const double> values);

/// Weighted mixture of full-covariance Gaussians.
class GmmModel {
public:
    /// Validates shapes, renormalizes `weights` and factorizes every covariance.
    GmmModel(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
             std::vector<Eigen::MatrixXd> covariances);

    int n_components() const noexcept { return static_cast<int>(weights_.size()); }
    Eigen::Index dim() const noexcept { return dim_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    const std::vector<Eigen::VectorXd>& means() const noexcept { return means_; }
    const std::vector<Eigen::MatrixXd>& covariances() const noexcept { return covariances_; }

    double density(const Eigen::VectorXd& x) const;
    double log_density(const Eigen::VectorXd& x) const;
    /// log alpha_k + log N(x; gamma_k, Sigma_k) for every component.
    Eigen::VectorXd component_log_densities(const Eigen::VectorXd& x) const;
    /// Row i holds component_log_densities(points.row(i)).
    Eigen::MatrixXd component_log_densities(const Eigen::MatrixXd& points) const;

private:
    Eigen::Index dim_;
    Eigen::VectorXd weights_;
    std::vector<Eigen::VectorXd> means_;
    std::vector<Eigen::MatrixXd> covariances_;
    std::vector<Eigen::MatrixXd> chol_;
    Eigen::VectorXd log_norm_;
};

struct GmmSettings {
    int max_iterations = 200;
    /// Convergence once the weighted log-likelihood changes by less than this.
    double tolerance = 1e-6;
    /// Ridge added to a covariance that is not comfortably positive definite,
    /// as a fraction of trace(weighted data covariance) / d.
    double regularization = 1e-6;
};

struct GmmFit {
    GmmModel model;
    /// Weighted log-likelihood sum_i w_i log p(x_i) of the initial model and after every EM step.
    std::vector<double> log_likelihood_trace;
    int iterations = 0;
    bool converged = false;
    int requested_components = 0;
};

/// Weighted EM for a Gaussian mixture over the rows of `points`.
///
/// Weights are normalized to sum to one. Components are seeded k-means++
/// style with selection probabilities proportional to weight times squared
/// distance. If fewer points than components carry positive weight, the
/// component count drops to that number and a warning is logged.
GmmFit gmm_fit_weighted(const Eigen::MatrixXd& points, std::span<const double> weights,
                        int n_components, Rng& rng, const GmmSettings& settings = {});

/// Throws std::invalid_argument on dimension mismatch.
double gmm_eval(const GmmModel& model, const Eigen::VectorXd& x);

} // namespace lwucb
