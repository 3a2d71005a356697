#include "lwucb/acquisition.hpp"

#include "lwucb/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lwucb {

std::string_view to_string(AcquisitionKind kind) noexcept
{
    switch (kind) {
    case AcquisitionKind::EI: return "EI";
    case AcquisitionKind::TS: return "TS";
    case AcquisitionKind::V_UCB: return "V_UCB";
    case AcquisitionKind::GP_UCB: return "GP_UCB";
    case AcquisitionKind::LW_UCB: return "LW_UCB";
    }
    return "?";
}

std::optional<AcquisitionKind> parse_acquisition_kind(std::string_view name) noexcept
{
    for (auto kind : {AcquisitionKind::EI, AcquisitionKind::TS, AcquisitionKind::V_UCB,
                      AcquisitionKind::GP_UCB, AcquisitionKind::LW_UCB}) {
        if (name == to_string(kind))
            return kind;
    }
    return std::nullopt;
}

void AcquisitionConfig::validate() const
{
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("acquisition." + field + ": " + why);
    };
    if (!std::isfinite(kappa) || kappa < 0.0)
        fail("kappa", "must be finite and >= 0");
    if (!(delta > 0.0 && delta < 1.0))
        fail("delta", "must lie in (0, 1)");
    if (!std::isfinite(xi) || xi < 0.0)
        fail("xi", "must be finite and >= 0");
    if (n_gmm < 1)
        fail("n_gmm", "must be >= 1");
    if (cardinality_for_beta && !(*cardinality_for_beta >= 1.0 && std::isfinite(*cardinality_for_beta)))
        fail("cardinality_for_beta", "must be >= 1");
    if (!(input_prior > 0.0) || !std::isfinite(input_prior))
        fail("input_prior", "must be positive");
}

std::string AcquisitionConfig::label() const
{
    std::ostringstream os;
    os << to_string(kind);
    switch (kind) {
    case AcquisitionKind::V_UCB: os << "_k" << kappa; break;
    case AcquisitionKind::GP_UCB: os << "_d" << delta; break;
    case AcquisitionKind::EI: os << "_xi" << xi; break;
    case AcquisitionKind::LW_UCB: os << "_k" << kappa << "_g" << n_gmm; break;
    case AcquisitionKind::TS: break;
    }
    return os.str();
}

Eigen::VectorXd score_vucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, double kappa)
{
    return mean + kappa * stddev;
}

double gpucb_beta(int t, double cardinality, double delta)
{
    const double tt = static_cast<double>(t);
    const double beta = 2.0 * std::log(cardinality * tt * tt * std::numbers::pi * std::numbers::pi / (6.0 * delta));
    return std::max(beta, 0.0);
}

Eigen::VectorXd score_gpucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, int t,
                            double cardinality, double delta)
{
    return mean + std::sqrt(gpucb_beta(t, cardinality, delta)) * stddev;
}

Eigen::VectorXd score_ei(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev, double best_reward,
                         double xi)
{
    Eigen::VectorXd out(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double s = stddev(i);
        if (!(s > 0.0)) {
            out(i) = 0.0;
            continue;
        }
        const double lambda = (mean(i) - best_reward - xi) / s;
        const double cdf = 0.5 * std::erfc(-lambda / std::numbers::sqrt2);
        const double pdf = std::exp(-0.5 * lambda * lambda) / std::sqrt(2.0 * std::numbers::pi);
        out(i) = std::max(0.0, s * (lambda * cdf + pdf));
    }
    return out;
}

Eigen::VectorXd score_ts(const GpModel& model, const CandidateSet& candidates, Rng& rng)
{
    return gp_sample_marginal(model, candidates, rng);
}

LikelihoodRatioField compute_likelihood_ratio(const Eigen::VectorXd& posterior_mean,
                                              const CandidateSet& candidates, int n_gmm, Rng& rng,
                                              double input_prior)
{
    if (posterior_mean.size() != candidates.size())
        throw std::invalid_argument("compute_likelihood_ratio: mean/candidate size mismatch");
    if (n_gmm < 1 || n_gmm > candidates.size())
        throw std::invalid_argument("compute_likelihood_ratio: n_gmm must lie in [1, M]");

    std::span<const double> mu(posterior_mean.data(), static_cast<std::size_t>(posterior_mean.size()));
    const Kde1d output_density = kde_fit(mu);

    const Eigen::VectorXd raw =
        input_prior / kde_eval_samples(output_density, mu).array().max(kOutputDensityFloor);

    std::span<const double> wspan(raw.data(), static_cast<std::size_t>(raw.size()));
    GmmFit fit = gmm_fit_weighted(candidates.contexts(), wspan, n_gmm, rng);
    return LikelihoodRatioField{std::move(fit.model), std::move(raw), input_prior};
}

LikelihoodRatioField compute_likelihood_ratio(const GpModel& model, const CandidateSet& candidates,
                                              int n_gmm, Rng& rng, double input_prior)
{
    return compute_likelihood_ratio(gp_predict(model, candidates).mean, candidates, n_gmm, rng,
                                    input_prior);
}

Eigen::VectorXd evaluate_field(const LikelihoodRatioField& field, const CandidateSet& candidates)
{
    const Eigen::MatrixXd lc = field.gmm.component_log_densities(candidates.contexts());
    Eigen::VectorXd w(lc.rows());
    for (Eigen::Index i = 0; i < lc.rows(); ++i) {
        const double m = lc.row(i).maxCoeff();
        const double density = std::exp(m + std::log((lc.row(i).array() - m).exp().sum()));
        w(i) = field.input_prior * std::max(density, std::numeric_limits<double>::min());
    }
    return w;
}

Eigen::VectorXd score_lwucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev,
                            const Eigen::VectorXd& weights, double kappa)
{
    if (mean.size() != stddev.size() || mean.size() != weights.size())
        throw std::invalid_argument("score_lwucb: mean/stddev/weight size mismatch");
    return mean + kappa * weights.cwiseProduct(stddev);
}

Eigen::VectorXd score_lwucb(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev,
                            const LikelihoodRatioField& field, const CandidateSet& candidates,
                            double kappa)
{
    if (mean.size() != candidates.size())
        throw std::invalid_argument("score_lwucb: score/candidate size mismatch");
    return score_lwucb(mean, stddev, evaluate_field(field, candidates), kappa);
}

std::size_t select_next_arm(std::span<const double> scores)
{
    if (scores.empty())
        throw std::invalid_argument("select_next_arm: empty score vector");
    std::size_t best = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i]))
            throw SelectionError("select_next_arm: non-finite score at arm " + std::to_string(i), i);
        if (scores[i] > scores[best])
            best = i;
    }
    return best;
}

std::size_t select_next_arm(const Eigen::VectorXd& scores)
{
    return select_next_arm(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())));
}

} // namespace lwucb
