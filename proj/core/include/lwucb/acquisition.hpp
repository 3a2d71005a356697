#pragma once

#include "lwucb/density.hpp"
#include "lwucb/gp.hpp"
#include "lwucb/rng.hpp"
#include "lwucb/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace lwucb {

enum class AcquisitionKind { EI, TS, V_UCB, GP_UCB, LW_UCB };

std::string_view to_string(AcquisitionKind kind) noexcept;
std::optional<AcquisitionKind> parse_acquisition_kind(std::string_view name) noexcept;

struct AcquisitionConfig {
    AcquisitionKind kind = AcquisitionKind::LW_UCB;
    /// Exploration weight for V-UCB and LW-UCB.
    double kappa = 1.0;
    /// GP-UCB confidence parameter.
    double delta = 0.1;
    /// EI margin.
    double xi = 0.01;
    /// Mixture components approximating the likelihood ratio.
    int n_gmm = 2;
    /// |D| in beta_t. Unset: the harness picks it from the environment.
    std::optional<double> cardinality_for_beta;
    /// Constant input prior p_x in the likelihood ratio.
    double input_prior = 1.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Short label such as "LW_UCB_k1_g4" used for result bundle names.
    std::string label() const;
};

/// Floor on the output density in the likelihood-ratio denominator.
inline constexpr double kOutputDensityFloor = 1e-12;

Eigen::VectorXd score_vucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, double kappa);

/// beta_t = 2 log(|D| t^2 pi^2 / (6 delta)), clamped at 0.
double gpucb_beta(int t, double cardinality, double delta);
Eigen::VectorXd score_gpucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, int t,
                            double cardinality, double delta);

/// sigma (lambda Phi(lambda) + phi(lambda)), lambda = (mu - best - xi) / sigma; 0 where sigma = 0.
Eigen::VectorXd score_ei(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, double best_reward,
                         double xi);

/// One independent posterior marginal draw per candidate.
Eigen::VectorXd score_ts(const GpModel& model, const CandidateSet& candidates, Rng& rng);

/// GMM-smoothed likelihood ratio over a candidate set.
struct LikelihoodRatioField {
    GmmModel gmm;
    /// p_x / max(p_mu(mu(x_i)), floor) per candidate.
    Eigen::VectorXd raw_weights;
    double input_prior = 1.0;

    /// Smoothed weight w(x) = input_prior * gmm(x).
    double operator()(const Eigen::VectorXd& x) const { return input_prior * gmm_eval(gmm, x); }
};

/// Posterior means -> KDE of p_mu -> raw weights -> weighted GMM over the contexts.
LikelihoodRatioField compute_likelihood_ratio(const Eigen::VectorXd& posterior_mean,
                                              const CandidateSet& candidates, int n_gmm, Rng& rng,
                                              double input_prior = 1.0);
LikelihoodRatioField compute_likelihood_ratio(const GpModel& model, const CandidateSet& candidates,
                                              int n_gmm, Rng& rng, double input_prior = 1.0);

/// mu + kappa * w(x) * sigma.
Eigen::VectorXd score_lwucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev,
                            const LikelihoodRatioField& field, const CandidateSet& candidates,
                            double kappa);

/// mu + kappa * w_i * sigma for per-candidate weights w_i.
Eigen::VectorXd score_lwucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev,
                            const Eigen::VectorXd& weights, double kappa);

/// w(x_i) for every candidate.
Eigen::VectorXd evaluate_field(const LikelihoodRatioField& field, const CandidateSet& candidates);

/// Index of the first maximal score. Throws SelectionError on any non-finite score.
std::size_t select_next_arm(std::span<const double> scores);
std::size_t select_next_arm(const Eigen::VectorXd& scores);

} // namespace lwucb
