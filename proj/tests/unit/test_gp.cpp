#include "lwucb/errors.hpp"
#include "lwucb/gp.hpp"

#include "../support/oracles.hpp"

#include <doctest/doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace lwucb;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v)
        out(i++) = x;
    return out;
}

struct RandomProblem {
    History history;
    GpHyperparams hp;
};

RandomProblem random_problem(std::mt19937_64& gen, int max_n = 20, int max_d = 3)
{
    std::uniform_int_distribution<int> pick_n(1, max_n), pick_d(1, max_d);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = pick_n(gen), d = pick_d(gen);
    History h(d);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd x(d);
        for (int k = 0; k < d; ++k)
            x(k) = u(gen);
        h.append(x, std::sin(4.0 * x.sum()) + 0.3 * (u(gen) - 0.5));
    }
    Eigen::VectorXd ell(d);
    for (int k = 0; k < d; ++k)
        ell(k) = 0.2 + 0.8 * u(gen);
    const double sf2 = 0.5 + 1.5 * u(gen);
    const double sn2 = sf2 * (0.01 + 0.2 * u(gen));
    return {h, GpHyperparams::from_values(sf2, ell, sn2)};
}

oracle::DenseGp dense_of(const RandomProblem& p)
{
    const double sf2 = p.hp.signal_variance();
    return {p.history.inputs(), p.history.rewards(), sf2, p.hp.lengthscales(),
            p.hp.noise_variance() + kJitterStart * sf2};
}

bool rel_close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

} // namespace

TEST_CASE("kernel_eval on fixed points")
{
    const auto hp = GpHyperparams::from_values(1.0, vec({1.0, 1.0}), 1e-4);
    CHECK(kernel_eval(vec({0, 0}), vec({0, 0}), hp) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel_eval(vec({0, 0}), vec({1, 0}), hp) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));

    const auto hp2 = GpHyperparams::from_values(2.0, vec({1.0, 2.0}), 1e-4);
    CHECK(kernel_eval(vec({0, 0}), vec({1, 1}), hp2) == doctest::Approx(2.0 * std::exp(-0.625)).epsilon(1e-14));

    CHECK_THROWS_AS(kernel_eval(vec({0, 0, 0}), vec({0, 0}), hp), std::invalid_argument);
}

TEST_CASE("kernel matrix is symmetric and positive semidefinite")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 5 + rep * 4;
        Eigen::MatrixXd x(n, 2);
        for (int i = 0; i < n; ++i)
            x.row(i) << u(gen), u(gen);
        const auto hp = GpHyperparams::from_values(1.3, vec({0.4, 0.7}), 1e-4);
        const Eigen::MatrixXd k = kernel_matrix(x, x, hp);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        for (int i = 0; i < n; ++i)
            CHECK(kernel_eval(x.row(i).transpose(), x.row((i + 1) % n).transpose(), hp) ==
                  doctest::Approx(k(i, (i + 1) % n)).epsilon(1e-14));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * k.trace());
    }
}

TEST_CASE("nlml of a single observation")
{
    History h(1);
    h.append(vec({0.0}), 0.0);
    const auto hp = GpHyperparams::from_values(1.0, vec({1.0}), 0.5);
    const double a = 1.0 + 0.5 + kJitterStart;
    CHECK(nlml(hp, h) == doctest::Approx(0.5 * std::log(a) + 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-13));

    History h1(1);
    h1.append(vec({0.0}), 1.0);
    const auto exact = GpHyperparams::from_values(1.0, vec({1.0}), 0.0);
    const double v = nlml(exact, h1, 0.0);
    CHECK(v == doctest::Approx(1.418939).epsilon(1e-6));
    CHECK(std::abs(v - (0.5 + 0.5 * std::log(2.0 * std::numbers::pi))) < 1e-9);

    CHECK_THROWS_AS(nlml(hp, History(1)), std::invalid_argument);
    CHECK_THROWS_AS(nlml(GpHyperparams::from_values(1.0, vec({1.0, 1.0}), 0.1), h), std::invalid_argument);
}

TEST_CASE("nlml and gp_predict match a dense direct inverse")
{
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const RandomProblem p = random_problem(gen);
        const oracle::DenseGp ref = dense_of(p);
        CHECK(rel_close(nlml(p.hp, p.history), ref.nlml(), 1e-10));

        const GpModel model(p.hp, p.history);
        Eigen::MatrixXd q(30, p.history.dim());
        for (Eigen::Index i = 0; i < q.rows(); ++i)
            for (Eigen::Index k = 0; k < q.cols(); ++k)
                q(i, k) = 1.2 * u(gen) - 0.1;
        const GpPrediction pred = gp_predict(model, q);
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            double m = 0.0, v = 0.0;
            ref.predict(q.row(i).transpose(), m, v);
            CHECK(rel_close(pred.mean(i), m, 1e-8));
            CHECK(rel_close(pred.variance(i), std::max(v, 0.0), 1e-8));
        }
    }
}

TEST_CASE("nlml gradient of a single observation")
{
    History h(2);
    h.append(vec({0.3, 0.1}), 0.0);
    const auto hp = GpHyperparams::from_values(1.5, vec({0.5, 2.0}), 0.2);
    const Eigen::VectorXd g = nlml_gradient(hp, h);
    const double sf = 1.5 * (1.0 + kJitterStart);
    const double a = sf + 0.2;
    CHECK(g(0) == doctest::Approx(0.5 * sf / a).epsilon(1e-12));
    CHECK(g(1) == 0.0);
    CHECK(g(2) == 0.0);
    CHECK(g(3) == doctest::Approx(0.5 * 0.2 / a).epsilon(1e-12));
}

TEST_CASE("nlml gradient matches central finite differences")
{
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 30; ++rep) {
        const RandomProblem p = random_problem(gen);
        const Eigen::VectorXd g = nlml_gradient(p.hp, p.history);
        const auto f = [&](const Eigen::VectorXd& v) { return nlml(GpHyperparams::from_vector(v), p.history); };
        const Eigen::VectorXd fd = oracle::central_difference(f, p.hp.to_vector());
        for (Eigen::Index i = 0; i < g.size(); ++i)
            CHECK(std::abs(g(i) - fd(i)) <= 1e-4 * std::max(std::abs(fd(i)), 1e-2));
    }
}

TEST_CASE("gradient along an irrelevant dimension vanishes")
{
    History h(2);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 8; ++i)
        h.append(vec({u(gen), 0.25}), u(gen));
    const auto hp = GpHyperparams::from_values(1.0, vec({0.3, 0.8}), 0.01);
    CHECK(nlml_gradient(hp, h)(2) == 0.0);
}

TEST_CASE("nlml_with_gradient agrees with the separate calls")
{
    std::mt19937_64 gen(99);
    const RandomProblem p = random_problem(gen);
    Eigen::VectorXd g;
    const double v = nlml_with_gradient(p.hp, p.history, g);
    CHECK(v == nlml(p.hp, p.history));
    CHECK(g == nlml_gradient(p.hp, p.history));
}

TEST_CASE("noise floor zeroes the noise gradient")
{
    History h(1);
    h.append(vec({0.0}), 0.4);
    h.append(vec({1.0}), -0.2);
    const auto hp = GpHyperparams::from_values(1.0, vec({0.5}), 1e-12);
    CHECK(nlml_gradient(hp, h)(2) == 0.0);
    CHECK(hp.noise_variance() == kNoiseFloor);
}

TEST_CASE("gp_fit does no worse than any of its starting points")
{
    History h(1);
    h.append(vec({0.0}), 0.0);
    GpFitConfig cfg;
    Rng a(17), b(17);
    const GpModel model = gp_fit(h, cfg, a);
    for (const GpHyperparams& start : fit_starts(h, cfg, b)) {
        const double v = nlml(start, h, cfg.noise_floor);
        if (std::isfinite(v))
            CHECK(model.nlml() <= v + 1e-12);
    }
}

TEST_CASE("gp_fit recovers a small noise level")
{
    History h(1);
    std::mt19937_64 gen(3);
    std::normal_distribution<double> noise(0.0, 1e-4);
    for (int i = 0; i < 20; ++i) {
        const double x = i / 19.0;
        h.append(vec({x}), std::sin(2.0 * std::numbers::pi * x) + noise(gen));
    }
    Rng rng(1);
    const GpModel model = gp_fit(h, {}, rng);
    CHECK(model.noise_variance() < 1e-2);
    CHECK(model.hyperparams().noise_variance() >= kNoiseFloor);
}

TEST_CASE("gp_fit is deterministic in its seed")
{
    std::mt19937_64 gen(8);
    const RandomProblem p = random_problem(gen, 15, 2);
    Rng a(4), b(4);
    CHECK(gp_fit(p.history, {}, a).hyperparams() == gp_fit(p.history, {}, b).hyperparams());
}

TEST_CASE("gp_fit honours fixed noise and warm starts")
{
    std::mt19937_64 gen(12);
    const RandomProblem p = random_problem(gen, 12, 2);
    GpFitConfig cfg;
    cfg.fixed_noise_variance = 1e-3;
    Rng rng(0);
    const GpModel fixed = gp_fit(p.history, cfg, rng);
    CHECK(fixed.noise_variance() == doctest::Approx(1e-3).epsilon(1e-12));

    GpFitConfig warm;
    warm.warm_start = p.hp;
    Rng r1(0);
    CHECK(fit_starts(p.history, warm, r1).size() == 1);
    const GpModel m = gp_fit(p.history, warm, r1);
    CHECK(m.nlml() <= nlml(p.hp, p.history) + 1e-12);

    CHECK_THROWS_AS(gp_fit(History(2), {}, rng), std::invalid_argument);
}

TEST_CASE("default hyperparameters scale with the data")
{
    History h(2);
    h.append(vec({0.0, 5.0}), 2.0);
    h.append(vec({2.0, 5.0}), -2.0);
    const GpHyperparams hp = default_hyperparams(h);
    CHECK(hp.signal_variance() == doctest::Approx(4.0));
    CHECK(hp.lengthscales()(0) == doctest::Approx(1.0));
    CHECK(hp.lengthscales()(1) == doctest::Approx(1.0));
    CHECK(hp.noise_variance() == doctest::Approx(0.04));
}

TEST_CASE("prediction from the prior and at a training point")
{
    const auto hp = GpHyperparams::from_values(2.5, vec({0.3, 0.3}), 1e-4);
    const GpModel prior(hp, History(2));
    const GpPrediction p = gp_predict(prior, Eigen::MatrixXd::Random(5, 2));
    CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < 5; ++i)
        CHECK(p.variance(i) == doctest::Approx(2.5));

    History h(2);
    h.append(vec({0.2, 0.7}), 1.7);
    const GpModel one(GpHyperparams::from_values(1.0, vec({0.5, 0.5}), 0.0), h, 0.0);
    Eigen::MatrixXd q(1, 2);
    q << 0.2, 0.7;
    const GpPrediction at = gp_predict(one, q);
    CHECK(std::abs(at.mean(0) - 1.7) < 1e-9);
    CHECK(at.variance(0) <= 1e-9);
    CHECK(at.variance(0) >= 0.0);

    CHECK_THROWS_AS(gp_predict(one, Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("posterior mean interpolates well-separated data")
{
    History h(2);
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double ymax = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double y = u(gen);
            ymax = std::max(ymax, std::abs(y));
            h.append(vec({i / 3.0, j / 3.0}), y);
        }
    const GpModel m(GpHyperparams::from_values(1.0, vec({0.25, 0.25}), kNoiseFloor), h);
    const GpPrediction p = gp_predict(m, h.inputs());
    for (Eigen::Index i = 0; i < h.size(); ++i)
        CHECK(std::abs(p.mean(i) - h.reward(i)) <= 1e-3 * ymax);
}

TEST_CASE("posterior variance stays within [0, signal variance]")
{
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 20; ++rep) {
        const RandomProblem p = random_problem(gen);
        const GpModel m(p.hp, p.history);
        const GpPrediction pred = gp_predict(m, Eigen::MatrixXd::Random(40, p.history.dim()));
        CHECK(pred.variance.minCoeff() >= 0.0);
        CHECK(pred.variance.maxCoeff() <= p.hp.signal_variance());
    }
}

TEST_CASE("marginal sampling")
{
    Rng rng(5);
    GpPrediction zero{vec({0.3, -1.0}), vec({0.0, 0.0})};
    const Eigen::VectorXd s = sample_marginal(zero, rng);
    CHECK(s(0) == 0.3);
    CHECK(s(1) == -1.0);

    const int n = 100000;
    GpPrediction many{Eigen::VectorXd::Constant(n, 0.5), Eigen::VectorXd::Constant(n, 0.04)};
    const Eigen::VectorXd draws = sample_marginal(many, rng);
    const double mean = draws.mean();
    const double var = (draws.array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean - 0.5) < 4.0 * 0.2 / std::sqrt(n));
    CHECK(std::abs(var / 0.04 - 1.0) < 0.05);

    Rng a(1), b(2);
    CHECK(sample_marginal(many, a) != sample_marginal(many, b));
}

TEST_CASE("hyperparameter packing round-trips")
{
    const auto hp = GpHyperparams::from_values(0.7, vec({0.1, 2.0, 3.0}), 1e-3);
    CHECK(GpHyperparams::from_vector(hp.to_vector()) == hp);
    CHECK(hp.to_vector().size() == 5);
    CHECK(hp.noise_variance(1e-2) == 1e-2);
}
