#include "lwucb/acquisition.hpp"
#include "lwucb/errors.hpp"

#include "../support/oracles.hpp"

#include <doctest/doctest.h>

#include <cmath>
#include <limits>
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

CandidateSet grid(int n)
{
    Eigen::MatrixXd x(n * n, 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            x.row(i * n + j) << i / double(n - 1), j / double(n - 1);
    return CandidateSet(x);
}

} // namespace

TEST_CASE("acquisition names round-trip")
{
    for (auto k : {AcquisitionKind::EI, AcquisitionKind::TS, AcquisitionKind::V_UCB,
                   AcquisitionKind::GP_UCB, AcquisitionKind::LW_UCB})
        CHECK(parse_acquisition_kind(to_string(k)) == k);
    CHECK_FALSE(parse_acquisition_kind("UCB").has_value());

    AcquisitionConfig c;
    c.kind = AcquisitionKind::LW_UCB;
    c.kappa = 0.5;
    c.n_gmm = 4;
    CHECK(c.label() == "LW_UCB_k0.5_g4");
    c.n_gmm = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("n_gmm"), std::invalid_argument);
}

TEST_CASE("V-UCB")
{
    const Eigen::VectorXd mu = vec({0.5, 0.1, -0.3});
    const Eigen::VectorXd sd = vec({0.2, 0.9, 0.0});
    CHECK(score_vucb(mu, sd, 0.0) == mu);
    CHECK(score_vucb(vec({0.5}), vec({0.2}), 1.0)(0) == doctest::Approx(0.7));
    const Eigen::VectorXd flat = Eigen::VectorXd::Constant(3, 0.4);
    CHECK(select_next_arm(score_vucb(mu, flat, 2.0)) == select_next_arm(mu));
}

TEST_CASE("GP-UCB beta schedule")
{
    const double expected = 2.0 * std::log(2500.0 * std::numbers::pi * std::numbers::pi / 0.6);
    CHECK(gpucb_beta(1, 2500.0, 0.1) == expected);
    CHECK(expected == doctest::Approx(21.25).epsilon(1e-3));
    CHECK(std::sqrt(gpucb_beta(1, 2500.0, 0.1)) == doctest::Approx(4.61).epsilon(1e-3));
    for (int t = 1; t < 200; ++t)
        CHECK(gpucb_beta(t + 1, 2500.0, 0.1) > gpucb_beta(t, 2500.0, 0.1));
    CHECK(gpucb_beta(1, 1.0, 0.99) >= 0.0);

    const Eigen::VectorXd mu = vec({0.1, 0.2});
    CHECK(score_gpucb(mu, Eigen::VectorXd::Zero(2), 5, 100.0, 0.1) == mu);
}

TEST_CASE("EI closed form")
{
    const double v = score_ei(vec({1.0}), vec({1.0}), 0.0, 0.0)(0);
    const double phi = oracle::normal_pdf(1.0), cdf = oracle::normal_cdf(1.0);
    CHECK(v == doctest::Approx(cdf + phi).epsilon(1e-14));
    CHECK(v == doctest::Approx(1.08331).epsilon(1e-5));
    CHECK(score_ei(vec({0.0}), vec({1.0}), 0.0, 0.0)(0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
    CHECK(score_ei(vec({3.0}), vec({0.0}), 0.0, 0.0)(0) == 0.0);
}

TEST_CASE("EI agrees with Monte Carlo improvement")
{
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 5; ++rep) {
        const double mu = 2.0 * u(gen) - 1.0, sd = 0.2 + u(gen), best = u(gen) - 0.5, xi = 0.05 * u(gen);
        const double ei = score_ei(vec({mu}), vec({sd}), best, xi)(0);
        double acc = 0.0;
        const int n = 1000000;
        for (int i = 0; i < n; ++i)
            acc += std::max(mu + sd * n01(gen) - best - xi, 0.0);
        CHECK(std::abs(acc / n - ei) < 0.01 * ei);
    }
}

TEST_CASE("Thompson sampling draws")
{
    History h(2);
    h.append(vec({0.0, 0.0}), 1.0);
    const CandidateSet c = grid(5);
    const GpModel model(GpHyperparams::from_values(1.0, vec({0.3, 0.3}), 1e-4), h);
    Rng a(3), b(3), other(4);
    const Eigen::VectorXd sa = score_ts(model, c, a);
    CHECK(sa == score_ts(model, c, b));
    CHECK(sa != score_ts(model, c, other));

    // Zero-variance marginals collapse to the mean.
    GpPrediction fixed{vec({0.2, 0.4}), vec({0.0, 0.0})};
    Rng r(0);
    CHECK(sample_marginal(fixed, r) == fixed.mean);
}

TEST_CASE("likelihood ratio weights favour rare outputs")
{
    // 24 arms share one mean, a single arm sits far above.
    Eigen::MatrixXd x(25, 1);
    Eigen::VectorXd mu(25);
    for (int i = 0; i < 25; ++i) {
        x(i, 0) = i / 24.0;
        mu(i) = i == 24 ? 5.0 : 0.1 + 1e-3 * i;
    }
    const CandidateSet c(x);
    Rng rng(0);
    const LikelihoodRatioField f = compute_likelihood_ratio(mu, c, 2, rng);
    for (int i = 0; i < 24; ++i)
        CHECK(f.raw_weights(24) > f.raw_weights(i));

    const Eigen::VectorXd constant = Eigen::VectorXd::Constant(25, 0.3);
    Rng r2(0);
    const LikelihoodRatioField g = compute_likelihood_ratio(constant, c, 1, r2);
    CHECK(g.raw_weights.maxCoeff() == g.raw_weights.minCoeff());

    Rng r3(0);
    CHECK_THROWS_AS(compute_likelihood_ratio(constant, c, 26, r3), std::invalid_argument);
    CHECK_THROWS_AS(compute_likelihood_ratio(vec({1.0}), c, 1, r3), std::invalid_argument);
}

TEST_CASE("likelihood ratio field is a normalized density times the prior")
{
    const CandidateSet c = grid(30);
    Eigen::VectorXd mu(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
        mu(i) = std::sin(6.0 * c.contexts()(i, 0)) * c.contexts()(i, 1);
    Rng rng(2);
    const LikelihoodRatioField f = compute_likelihood_ratio(mu, c, 3, rng, 2.0);
    CHECK(f.input_prior == 2.0);
    CHECK(f.raw_weights(0) == doctest::Approx(2.0 / kde_eval(kde_fit(std::span<const double>(mu.data(), 900)), mu(0))));

    const int n = 400;
    const double lo = -3.0, hi = 4.0, h = (hi - lo) / n;
    double area = 0.0;
    Eigen::VectorXd x(2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            x << lo + (i + 0.5) * h, lo + (j + 0.5) * h;
            area += f(x);
        }
    CHECK(std::abs(area * h * h / 2.0 - 1.0) < 2e-2);

    const Eigen::VectorXd w = evaluate_field(f, c);
    for (Eigen::Index i = 0; i < c.size(); i += 37)
        CHECK(w(i) == doctest::Approx(f(c.context(i))).epsilon(1e-12));
}

TEST_CASE("LW-UCB reductions")
{
    const Eigen::VectorXd mu = vec({0.2, 0.5, 0.1});
    const Eigen::VectorXd sd = vec({0.3, 0.1, 0.6});
    const Eigen::VectorXd w = vec({2.0, 0.5, 1.0});
    CHECK(score_lwucb(mu, sd, w, 0.0) == mu);
    CHECK(score_lwucb(mu, Eigen::VectorXd::Zero(3), w, 3.0) == mu);
    CHECK(score_lwucb(mu, sd, w, 1.0)(0) == doctest::Approx(0.8));

    // A constant field c turns LW-UCB with kappa into V-UCB with kappa * c.
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd m(50), s(50);
        for (int i = 0; i < 50; ++i) {
            m(i) = u(gen);
            s(i) = u(gen);
        }
        const double c = 0.1 + 3.0 * u(gen), kappa = u(gen) * 2.0;
        CHECK(select_next_arm(score_lwucb(m, s, Eigen::VectorXd::Constant(50, c), kappa)) ==
              select_next_arm(score_vucb(m, s, kappa * c)));
    }

    // Larger weight never lowers the score.
    const Eigen::VectorXd up = score_lwucb(mu, sd, w * 2.0, 1.0);
    CHECK((up.array() >= score_lwucb(mu, sd, w, 1.0).array()).all());
    CHECK_THROWS_AS(score_lwucb(mu, sd, vec({1.0}), 1.0), std::invalid_argument);
}

TEST_CASE("argmax selection")
{
    CHECK(select_next_arm(vec({0.1, 0.9, 0.3})) == 1);
    CHECK(select_next_arm(vec({0.4, 0.4, 0.4})) == 0);
    CHECK(select_next_arm(vec({0.4, 0.9, 0.9})) == 1);
    try {
        select_next_arm(vec({0.1, std::numeric_limits<double>::quiet_NaN(), 0.3}));
        FAIL("expected SelectionError");
    } catch (const SelectionError& e) {
        CHECK(e.arm() == 1);
    }
    CHECK_THROWS_AS(select_next_arm(vec({0.1, std::numeric_limits<double>::infinity()})), SelectionError);
    CHECK_THROWS_AS(select_next_arm(Eigen::VectorXd()), std::invalid_argument);

    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd s(2500);
        for (auto& v : s)
            v = std::round(u(gen) * 10.0) / 10.0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < 2500; ++i)
            if (s(static_cast<Eigen::Index>(i)) > s(static_cast<Eigen::Index>(best)))
                best = i;
        CHECK(select_next_arm(s) == best);
        CHECK(select_next_arm(Eigen::VectorXd(s.array() + 7.0)) == best);
    }
}
