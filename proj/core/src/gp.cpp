#include "lwucb/gp.hpp"

#include "lwucb/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lwucb {

GpHyperparams GpHyperparams::from_values(double signal_variance, const Eigen::VectorXd& lengthscales,
                                         double noise_variance)
{
    if (!(signal_variance > 0.0) || !(lengthscales.array() > 0.0).all() || !(noise_variance >= 0.0))
        throw std::invalid_argument("GpHyperparams: variances and lengthscales must be positive");
    GpHyperparams hp;
    hp.log_signal_variance = std::log(signal_variance);
    hp.log_lengthscales = lengthscales.array().log();
    hp.log_noise_variance = std::log(noise_variance);
    return hp;
}

double GpHyperparams::noise_variance(double floor) const
{
    return std::max(std::exp(log_noise_variance), floor);
}

Eigen::VectorXd GpHyperparams::to_vector() const
{
    Eigen::VectorXd v(dim() + 2);
    v(0) = log_signal_variance;
    v.segment(1, dim()) = log_lengthscales;
    v(dim() + 1) = log_noise_variance;
    return v;
}

GpHyperparams GpHyperparams::from_vector(const Eigen::VectorXd& v)
{
    if (v.size() < 3)
        throw std::invalid_argument("GpHyperparams: packed vector needs at least 3 entries");
    GpHyperparams hp;
    hp.log_signal_variance = v(0);
    hp.log_lengthscales = v.segment(1, v.size() - 2);
    hp.log_noise_variance = v(v.size() - 1);
    return hp;
}

bool GpHyperparams::operator==(const GpHyperparams& other) const
{
    return log_signal_variance == other.log_signal_variance
        && log_noise_variance == other.log_noise_variance
        && log_lengthscales.size() == other.log_lengthscales.size()
        && log_lengthscales == other.log_lengthscales;
}

double kernel_eval(const Context& a, const Context& b, const GpHyperparams& hp)
{
    if (a.size() != hp.dim() || b.size() != hp.dim())
        throw std::invalid_argument("kernel_eval: context dimension does not match lengthscales");
    double z = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        const double u = (a(k) - b(k)) / std::exp(hp.log_lengthscales(k));
        z += u * u;
    }
    return hp.signal_variance() * std::exp(-0.5 * z);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              const GpHyperparams& hp)
{
    if (a.cols() != hp.dim() || b.cols() != hp.dim())
        throw std::invalid_argument("kernel_matrix: context dimension does not match lengthscales");
    const Eigen::VectorXd inv_ell = (-hp.log_lengthscales).array().exp();
    const Eigen::MatrixXd as = a * inv_ell.asDiagonal();
    const Eigen::MatrixXd bs = b * inv_ell.asDiagonal();
    const double sf2 = hp.signal_variance();
    const Eigen::Index d = hp.dim();

    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            double z = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double u = as(i, c) - bs(j, c);
                z += u * u;
            }
            k(i, j) = sf2 * std::exp(-0.5 * z);
        }
    }
    return k;
}

namespace {

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Cholesky of `a` + jitter I with jitter escalated from kJitterStart to
// kJitterMax, both relative to the signal variance.
Factorization factorize(const Eigen::MatrixXd& a, double signal_variance)
{
    double rel = kJitterStart;
    for (int attempt = 0; attempt < 7; ++attempt, rel *= 10.0) {
        Factorization f;
        f.jitter = rel * signal_variance;
        Eigen::MatrixXd b = a;
        b.diagonal().array() += f.jitter;
        f.llt.compute(b);
        if (f.llt.info() == Eigen::Success) {
            const auto diag = f.llt.matrixLLT().diagonal().array();
            if (diag.allFinite() && (diag > 0.0).all())
                return f;
        }
    }
    throw NumericalError("Cholesky factorization failed after jitter escalation (ill-conditioned K)");
}

Eigen::MatrixXd symmetric_kernel_matrix(const Eigen::MatrixXd& x, const GpHyperparams& hp)
{
    const Eigen::VectorXd inv_ell = (-hp.log_lengthscales).array().exp();
    const Eigen::MatrixXd xs = x * inv_ell.asDiagonal();
    const double sf2 = hp.signal_variance();
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        k(j, j) = sf2;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = sf2 * std::exp(-0.5 * (xs.row(i) - xs.row(j)).squaredNorm());
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

void check_dims(const GpHyperparams& hp, const History& history)
{
    if (history.empty())
        throw std::invalid_argument("nlml: history must contain at least one observation");
    if (hp.dim() != history.dim())
        throw std::invalid_argument("nlml: hyperparameter dimension does not match history");
}

double nlml_impl(const GpHyperparams& hp, const History& history, Eigen::VectorXd* grad,
                 double noise_floor)
{
    check_dims(hp, history);
    const Eigen::MatrixXd x = history.inputs();
    const Eigen::VectorXd y = history.rewards();
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    const double sf2 = hp.signal_variance();
    const double raw_noise = std::exp(hp.log_noise_variance);
    const double sn2 = std::max(raw_noise, noise_floor);

    Eigen::MatrixXd k = symmetric_kernel_matrix(x, hp);
    Eigen::MatrixXd a = k;
    a.diagonal().array() += sn2;
    const Factorization f = factorize(a, sf2);
    const Eigen::VectorXd alpha = f.llt.solve(y);

    const double log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
    const double value = 0.5 * y.dot(alpha) + 0.5 * log_det
                       + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    if (grad) {
        grad->setZero(d + 2);
        // Lower triangle of A^-1 - alpha alpha^T, via L^-T L^-1.
        Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
        f.llt.matrixL().solveInPlace(linv);
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        w.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());
        w.selfadjointView<Eigen::Lower>().rankUpdate(alpha, -1.0);

        const Eigen::VectorXd inv_ell2 = (-2.0 * hp.log_lengthscales).array().exp();
        double g_signal = 0.0;
        Eigen::VectorXd g_ell = Eigen::VectorXd::Zero(d);
        for (Eigen::Index j = 0; j < n; ++j) {
            g_signal += w(j, j) * (k(j, j) + f.jitter);
            for (Eigen::Index i = j + 1; i < n; ++i) {
                const double wk = 2.0 * w(i, j) * k(i, j);
                g_signal += wk;
                for (Eigen::Index c = 0; c < d; ++c) {
                    const double u = x(i, c) - x(j, c);
                    g_ell(c) += wk * u * u * inv_ell2(c);
                }
            }
        }
        (*grad)(0) = 0.5 * g_signal;
        grad->segment(1, d) = 0.5 * g_ell;
        (*grad)(d + 1) = raw_noise > noise_floor ? 0.5 * sn2 * w.trace() : 0.0;
    }
    return value;
}

} // namespace

double nlml(const GpHyperparams& hp, const History& history, double noise_floor)
{
    return nlml_impl(hp, history, nullptr, noise_floor);
}

Eigen::VectorXd nlml_gradient(const GpHyperparams& hp, const History& history, double noise_floor)
{
    Eigen::VectorXd g;
    nlml_impl(hp, history, &g, noise_floor);
    return g;
}

double nlml_with_gradient(const GpHyperparams& hp, const History& history, Eigen::VectorXd& grad,
                          double noise_floor)
{
    return nlml_impl(hp, history, &grad, noise_floor);
}

GpModel::GpModel(GpHyperparams hp, History history, double noise_floor)
    : hp_(std::move(hp)), history_(std::move(history)), noise_floor_(noise_floor)
{
    if (hp_.dim() != history_.dim())
        throw std::invalid_argument("GpModel: hyperparameter dimension does not match history");
    // log noise of -inf encodes an exactly noise-free model.
    const Eigen::VectorXd v = hp_.to_vector();
    if (!v.head(v.size() - 1).allFinite() || std::isnan(hp_.log_noise_variance)
        || hp_.log_noise_variance == std::numeric_limits<double>::infinity())
        throw std::invalid_argument("GpModel: non-finite hyperparameters");
    noise_variance_ = hp_.noise_variance(noise_floor_);
    inputs_ = history_.inputs();
    if (history_.empty())
        return;

    const Eigen::VectorXd y = history_.rewards();
    Eigen::MatrixXd a = kernel_matrix(inputs_, inputs_, hp_);
    a.diagonal().array() += noise_variance_;
    const Factorization f = factorize(a, hp_.signal_variance());
    chol_ = f.llt.matrixL();
    alpha_ = f.llt.solve(y);
    jitter_ = f.jitter;
    nlml_ = 0.5 * y.dot(alpha_) + chol_.diagonal().array().log().sum()
          + 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi);
}

GpHyperparams default_hyperparams(const History& history, double noise_floor)
{
    const Eigen::MatrixXd x = history.inputs();
    const Eigen::VectorXd y = history.rewards();
    const Eigen::Index d = history.dim();

    Eigen::VectorXd ell = Eigen::VectorXd::Ones(d);
    if (x.rows() > 1) {
        const Eigen::RowVectorXd mean = x.colwise().mean();
        for (Eigen::Index c = 0; c < d; ++c) {
            const double sd = std::sqrt((x.col(c).array() - mean(c)).square().mean());
            if (sd > 1e-12)
                ell(c) = sd;
        }
    }
    double sf2 = y.size() > 0 ? y.squaredNorm() / static_cast<double>(y.size()) : 1.0;
    sf2 = std::max(sf2, 1e-6);
    return GpHyperparams::from_values(sf2, ell, std::max(1e-2 * sf2, noise_floor));
}

std::vector<GpHyperparams> fit_starts(const History& history, const GpFitConfig& config, Rng& rng)
{
    if (history.empty())
        throw std::invalid_argument("gp_fit: history must contain at least one observation");
    if (config.restarts < 1)
        throw std::invalid_argument("gp_fit: restarts must be >= 1");

    const bool fixed_noise = config.fixed_noise_variance.has_value();
    if (config.warm_start) {
        if (config.warm_start->dim() != history.dim())
            throw std::invalid_argument("gp_fit: warm start dimension does not match history");
        GpHyperparams warm = *config.warm_start;
        if (fixed_noise)
            warm.log_noise_variance = std::log(*config.fixed_noise_variance);
        return {warm};
    }

    GpHyperparams base = default_hyperparams(history, config.noise_floor);
    if (fixed_noise)
        base.log_noise_variance = std::log(*config.fixed_noise_variance);
    const Eigen::Index n_free = fixed_noise ? history.dim() + 1 : history.dim() + 2;

    std::vector<GpHyperparams> out{base};
    std::uniform_real_distribution<double> offset(-config.init_spread, config.init_spread);
    for (int r = 1; r < config.restarts; ++r) {
        Eigen::VectorXd v = base.to_vector();
        for (Eigen::Index i = 0; i < n_free; ++i)
            v(i) += offset(rng);
        out.push_back(GpHyperparams::from_vector(v));
    }
    return out;
}

GpModel gp_fit(const History& history, const GpFitConfig& config, Rng& rng)
{
    if (history.empty())
        throw std::invalid_argument("gp_fit: history must contain at least one observation");
    if (config.restarts < 1)
        throw std::invalid_argument("gp_fit: restarts must be >= 1");

    const double floor = config.noise_floor;
    const bool fixed_noise = config.fixed_noise_variance.has_value();
    const Eigen::Index d = history.dim();
    const Eigen::Index n_free = fixed_noise ? d + 1 : d + 2;

    GpHyperparams base = default_hyperparams(history, floor);
    if (fixed_noise)
        base.log_noise_variance = std::log(*config.fixed_noise_variance);

    // Learned noise is searched as sigma_n^2 = floor + exp(v_noise), which keeps
    // the objective smooth across the floor instead of flattening below it.
    auto to_search = [&](const GpHyperparams& hp) {
        Eigen::VectorXd v = hp.to_vector().head(n_free);
        if (!fixed_noise) {
            const double excess = std::exp(hp.log_noise_variance) - floor;
            v(d + 1) = std::log(std::max(excess, 1e-3 * floor));
        }
        return v;
    };
    auto from_search = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd full(d + 2);
        full.head(d + 1) = v.head(d + 1);
        full(d + 1) = fixed_noise ? base.log_noise_variance : std::log(floor + std::exp(v(d + 1)));
        return GpHyperparams::from_vector(full);
    };

    const Objective objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
        try {
            const GpHyperparams hp = from_search(v);
            Eigen::VectorXd g;
            // Floor 0: the search parameterization already enforces it.
            const double value = nlml_with_gradient(hp, history, g, 0.0);
            grad = g.head(n_free);
            if (!fixed_noise)
                grad(d + 1) *= std::exp(v(d + 1)) / std::exp(hp.log_noise_variance);
            return value;
        } catch (const NumericalError&) {
            grad.setConstant(std::numeric_limits<double>::quiet_NaN());
            return std::numeric_limits<double>::quiet_NaN();
        }
    };

    std::vector<Eigen::VectorXd> starts;
    for (const GpHyperparams& hp : fit_starts(history, config, rng))
        starts.push_back(to_search(hp));

    MinimizeResult best;
    try {
        best = multistart_minimize(objective, starts, config.optimizer);
    } catch (const OptimizationError& e) {
        throw FitError(std::string("gp_fit: no restart produced a finite NLML: ") + e.what());
    }

    GpHyperparams hp = from_search(best.argmin);
    hp.log_noise_variance = std::max(hp.log_noise_variance, std::log(floor));
    try {
        return GpModel(std::move(hp), history, floor);
    } catch (const NumericalError& e) {
        throw FitError(std::string("gp_fit: ") + e.what());
    }
}

GpPrediction gp_predict(const GpModel& model, const Eigen::MatrixXd& queries)
{
    const GpHyperparams& hp = model.hyperparams();
    if (queries.cols() != hp.dim())
        throw std::invalid_argument("gp_predict: query dimension does not match the model");
    const double sf2 = hp.signal_variance();
    const Eigen::Index m = queries.rows();

    GpPrediction out;
    if (model.history().empty()) {
        out.mean = Eigen::VectorXd::Zero(m);
        out.variance = Eigen::VectorXd::Constant(m, sf2);
        return out;
    }
    const Eigen::MatrixXd ks = kernel_matrix(model.inputs(), queries, hp); // N x M
    out.mean.noalias() = ks.transpose() * model.alpha();
    const Eigen::MatrixXd v = model.chol_factor().triangularView<Eigen::Lower>().solve(ks);
    out.variance = (sf2 - v.colwise().squaredNorm().array()).max(0.0).min(sf2).matrix().transpose();
    return out;
}

GpPrediction gp_predict(const GpModel& model, const CandidateSet& queries)
{
    return gp_predict(model, queries.contexts());
}

Eigen::VectorXd sample_marginal(const GpPrediction& prediction, Rng& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd draws(prediction.mean.size());
    for (Eigen::Index i = 0; i < draws.size(); ++i) {
        const double z = normal(rng);
        const double sd = std::sqrt(prediction.variance(i));
        draws(i) = sd > 0.0 ? prediction.mean(i) + sd * z : prediction.mean(i);
    }
    return draws;
}

Eigen::VectorXd gp_sample_marginal(const GpModel& model, const CandidateSet& queries, Rng& rng)
{
    return sample_marginal(gp_predict(model, queries), rng);
}

} // namespace lwucb
