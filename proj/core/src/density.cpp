#include "lwucb/density.hpp"

#include <Eigen/Cholesky>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace lwucb {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();
// Kernels further than this many bandwidths away contribute < 1e-31 relative.
constexpr double kKdeWindow = 12.0;

double quantile_sorted(const std::vector<double>& s, double q)
{
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double log_sum_exp(const Eigen::VectorXd& v)
{
    const double m = v.maxCoeff();
    if (!std::isfinite(m))
        return m;
    return m + std::log((v.array() - m).exp().sum());
}

} // namespace

Kde1d::Kde1d(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), bandwidth_(bandwidth)
{
    if (samples_.empty())
        throw std::invalid_argument("Kde1d: no samples");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
        throw std::invalid_argument("Kde1d: bandwidth must be positive");
    for (double v : samples_) {
        if (!std::isfinite(v))
            throw std::invalid_argument("Kde1d: non-finite sample");
    }
    std::sort(samples_.begin(), samples_.end());
}

double Kde1d::density(double y) const
{
    if (!std::isfinite(y))
        throw std::invalid_argument("Kde1d::density: non-finite query");
    const double h = bandwidth_;
    auto first = std::lower_bound(samples_.begin(), samples_.end(), y - kKdeWindow * h);
    auto last = std::upper_bound(first, samples_.end(), y + kKdeWindow * h);
    if (first == last) {
        first = samples_.begin();
        last = samples_.end();
    }
    double sum = 0.0;
    for (auto it = first; it != last; ++it) {
        const double u = (y - *it) / h;
        sum += std::exp(-0.5 * u * u);
    }
    const double norm = static_cast<double>(samples_.size()) * h * std::sqrt(2.0 * std::numbers::pi);
    return std::max(sum / norm, kTiny);
}

double kde_bandwidth_floor(std::span<const double> values)
{
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return std::max(1e-6, 1e-3 * (*hi - *lo));
}

double silverman_bandwidth(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("silverman_bandwidth: no values");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());

    double sd = 0.0;
    if (s.size() > 1) {
        const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : s)
            ss += (v - mean) * (v - mean);
        sd = std::sqrt(ss / (n - 1.0));
    }
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    const double h = 0.9 * spread * std::pow(n, -0.2);
    return std::max(h, kde_bandwidth_floor(values));
}

Kde1d kde_fit(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("kde_fit: no values");
    return Kde1d(std::vector<double>(values.begin(), values.end()), silverman_bandwidth(values));
}

double kde_eval(const Kde1d& kde, double y)
{
    return kde.density(y);
}

Eigen::VectorXd kde_eval_samples(const Kde1d& kde, std::span<const double> values)
{
    const std::vector<double>& s = kde.samples();
    const std::size_t n = s.size();
    if (values.size() != n)
        throw std::invalid_argument("kde_eval_samples: values are not the fitted samples");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    for (std::size_t r = 0; r < n; ++r) {
        if (values[order[r]] != s[r])
            throw std::invalid_argument("kde_eval_samples: values are not the fitted samples");
    }

    const double h = kde.bandwidth();
    const double reach = kKdeWindow * h;
    std::vector<double> acc(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n && s[j] - s[i] <= reach; ++j) {
            const double u = (s[j] - s[i]) / h;
            const double e = std::exp(-0.5 * u * u);
            acc[i] += e;
            acc[j] += e;
        }
    }
    const double norm = static_cast<double>(n) * h * std::sqrt(2.0 * std::numbers::pi);
    Eigen::VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r)
        out(static_cast<Eigen::Index>(order[r])) = std::max(acc[r] / norm, kTiny);
    return out;
}

GmmModel::GmmModel(Eigen::VectorXd weights, std::vector<Eigen::VectorXd> means,
                   std::vector<Eigen::MatrixXd> covariances)
    : weights_(std::move(weights)), means_(std::move(means)), covariances_(std::move(covariances))
{
    const auto k = static_cast<std::size_t>(weights_.size());
    if (k == 0 || means_.size() != k || covariances_.size() != k)
        throw std::invalid_argument("GmmModel: component arrays must be non-empty and equally sized");
    if (!weights_.allFinite() || (weights_.array() < 0.0).any() || !(weights_.sum() > 0.0))
        throw std::invalid_argument("GmmModel: weights must be non-negative with positive sum");
    weights_ /= weights_.sum();
    dim_ = means_.front().size();
    if (dim_ < 1)
        throw std::invalid_argument("GmmModel: dimension must be >= 1");

    const double log_2pi = std::log(2.0 * std::numbers::pi);
    log_norm_.resize(static_cast<Eigen::Index>(k));
    chol_.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (means_[c].size() != dim_ || covariances_[c].rows() != dim_ || covariances_[c].cols() != dim_)
            throw std::invalid_argument("GmmModel: component dimension mismatch");
        Eigen::LLT<Eigen::MatrixXd> llt(covariances_[c]);
        if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array() > 0.0).all())
            throw std::invalid_argument("GmmModel: covariance is not positive definite");
        chol_.push_back(llt.matrixL());
        log_norm_(static_cast<Eigen::Index>(c)) = std::log(weights_(static_cast<Eigen::Index>(c)))
            - 0.5 * static_cast<double>(dim_) * log_2pi - chol_.back().diagonal().array().log().sum();
    }
}

Eigen::VectorXd GmmModel::component_log_densities(const Eigen::VectorXd& x) const
{
    if (x.size() != dim_)
        throw std::invalid_argument("GmmModel: point dimension does not match the model");
    Eigen::VectorXd out(n_components());
    for (int c = 0; c < n_components(); ++c) {
        const Eigen::VectorXd z =
            chol_[static_cast<std::size_t>(c)].triangularView<Eigen::Lower>().solve(x - means_[static_cast<std::size_t>(c)]);
        out(c) = log_norm_(c) - 0.5 * z.squaredNorm();
    }
    return out;
}

Eigen::MatrixXd GmmModel::component_log_densities(const Eigen::MatrixXd& points) const
{
    if (points.cols() != dim_)
        throw std::invalid_argument("GmmModel: point dimension does not match the model");
    Eigen::MatrixXd out(points.rows(), n_components());
    for (int c = 0; c < n_components(); ++c) {
        const auto cu = static_cast<std::size_t>(c);
        const Eigen::MatrixXd centred = (points.rowwise() - means_[cu].transpose()).transpose();
        const Eigen::MatrixXd z = chol_[cu].triangularView<Eigen::Lower>().solve(centred);
        out.col(c) = (log_norm_(c) - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
    }
    return out;
}

double GmmModel::log_density(const Eigen::VectorXd& x) const
{
    return log_sum_exp(component_log_densities(x));
}

double GmmModel::density(const Eigen::VectorXd& x) const
{
    return std::max(std::exp(log_density(x)), kTiny);
}

double gmm_eval(const GmmModel& model, const Eigen::VectorXd& x)
{
    return model.density(x);
}

namespace {

// Covariance plus a ridge whenever its Cholesky pivots fall below the ridge.
Eigen::MatrixXd stabilize(Eigen::MatrixXd cov, double ridge)
{
    cov = 0.5 * (cov + cov.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array().square() >= ridge).all())
        cov.diagonal().array() += ridge;
    return cov;
}

std::size_t draw_index(const std::vector<double>& probs, Rng& rng)
{
    std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
    return pick(rng);
}

} // namespace

GmmFit gmm_fit_weighted(const Eigen::MatrixXd& points, std::span<const double> weights,
                        int n_components, Rng& rng, const GmmSettings& settings)
{
    const Eigen::Index m = points.rows();
    const Eigen::Index d = points.cols();
    if (m == 0 || d == 0)
        throw std::invalid_argument("gmm_fit_weighted: no points");
    if (static_cast<Eigen::Index>(weights.size()) != m)
        throw std::invalid_argument("gmm_fit_weighted: weight count does not match point count");
    if (n_components < 1)
        throw std::invalid_argument("gmm_fit_weighted: n_components must be >= 1");

    Eigen::VectorXd w(m);
    int positive = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v = weights[static_cast<std::size_t>(i)];
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("gmm_fit_weighted: weights must be finite and non-negative");
        w(i) = v;
        positive += v > 0.0 ? 1 : 0;
    }
    if (positive == 0)
        throw std::invalid_argument("gmm_fit_weighted: all weights are zero");
    w /= w.sum();

    int k = n_components;
    if (positive < k) {
        spdlog::warn("gmm_fit_weighted: only {} positive-weight points for {} components; using {}",
                     positive, n_components, positive);
        k = positive;
    }

    const Eigen::VectorXd global_mean = points.transpose() * w;
    const Eigen::MatrixXd centred = points.rowwise() - global_mean.transpose();
    const Eigen::MatrixXd global_cov = centred.transpose() * w.asDiagonal() * centred;
    const double scale = global_cov.trace() / static_cast<double>(d);
    const double ridge = settings.regularization * (scale > 0.0 ? scale : 1.0);

    // k-means++ seeding, probabilities proportional to weight (times squared distance).
    std::vector<double> probs(w.data(), w.data() + m);
    std::vector<Eigen::VectorXd> means;
    means.push_back(points.row(static_cast<Eigen::Index>(draw_index(probs, rng))).transpose());
    Eigen::VectorXd nearest = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
    while (static_cast<int>(means.size()) < k) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            nearest(i) = std::min(nearest(i), (points.row(i).transpose() - means.back()).squaredNorm());
            probs[static_cast<std::size_t>(i)] = w(i) * nearest(i);
            total += probs[static_cast<std::size_t>(i)];
        }
        if (!(total > 0.0))
            probs.assign(w.data(), w.data() + m);
        means.push_back(points.row(static_cast<Eigen::Index>(draw_index(probs, rng))).transpose());
    }
    const Eigen::MatrixXd init_cov = stabilize(global_cov, ridge);
    std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k), init_cov);
    Eigen::VectorXd alpha = Eigen::VectorXd::Constant(k, 1.0 / k);

    GmmModel model(alpha, means, covs);
    Eigen::MatrixXd resp(m, k);

    // E-step: responsibilities for `model`, returns the weighted log-likelihood.
    auto expectation = [&](const GmmModel& g) {
        const Eigen::MatrixXd lc = g.component_log_densities(points);
        const Eigen::VectorXd top = lc.rowwise().maxCoeff();
        resp = (lc.colwise() - top).array().exp().matrix();
        const Eigen::ArrayXd total = resp.rowwise().sum().array();
        resp.array().colwise() /= total;
        return w.dot((top.array() + total.log()).matrix());
    };

    GmmFit fit{model, {}, 0, false, n_components};
    double ll = expectation(model);
    fit.log_likelihood_trace.push_back(ll);

    for (int iter = 1; iter <= settings.max_iterations; ++iter) {
        for (int c = 0; c < k; ++c) {
            const auto cu = static_cast<std::size_t>(c);
            const Eigen::VectorXd wr = w.cwiseProduct(resp.col(c));
            const double nk = wr.sum();
            alpha(c) = nk;
            if (!(nk > 1e-300))
                continue;
            means[cu] = points.transpose() * wr / nk;
            const Eigen::MatrixXd dc = points.rowwise() - means[cu].transpose();
            covs[cu] = stabilize(dc.transpose() * wr.asDiagonal() * dc / nk, ridge);
        }
        fit.model = GmmModel(alpha, means, covs);
        const double next = expectation(fit.model);
        fit.log_likelihood_trace.push_back(next);
        fit.iterations = iter;
        const double change = std::abs(next - ll);
        ll = next;
        if (change < settings.tolerance) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

} // namespace lwucb
