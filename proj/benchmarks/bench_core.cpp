#include "lwucb/acquisition.hpp"
#include "lwucb/density.hpp"
#include "lwucb/environments.hpp"
#include "lwucb/gp.hpp"
#include "lwucb/harness.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

using namespace lwucb;

namespace {

const Environment& michalewicz()
{
    static const Environment env = make_michalewicz();
    return env;
}

// Noisy observations at the first n arms of a scrambled order.
History observed(int n)
{
    const Environment& env = michalewicz();
    Rng rng(11);
    History h(2);
    for (int i = 0; i < n; ++i) {
        const auto arm = static_cast<std::size_t>((i * 977) % env.size());
        h.append(env.candidates().context(static_cast<Eigen::Index>(arm)), pull(env, arm, rng).reward);
    }
    return h;
}

void BM_GpFit(benchmark::State& state)
{
    const History h = observed(static_cast<int>(state.range(0)));
    GpFitConfig cfg;
    for (auto _ : state) {
        Rng rng(1);
        benchmark::DoNotOptimize(gp_fit(h, cfg, rng));
    }
}
BENCHMARK(BM_GpFit)->Arg(25)->Arg(75)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_GpPredict(benchmark::State& state)
{
    const History h = observed(static_cast<int>(state.range(0)));
    const GpModel model(GpHyperparams::from_values(1.0, Eigen::Vector2d(0.2, 0.2), 1e-4), h);
    for (auto _ : state)
        benchmark::DoNotOptimize(gp_predict(model, michalewicz().candidates()));
}
BENCHMARK(BM_GpPredict)->Arg(25)->Arg(150)->Unit(benchmark::kMillisecond);

void BM_KdeFitEval(benchmark::State& state)
{
    Rng rng(2);
    std::normal_distribution<double> n01;
    std::vector<double> y(2500);
    for (double& v : y)
        v = n01(rng);
    for (auto _ : state) {
        const Kde1d kde = kde_fit(y);
        double acc = 0.0;
        for (double v : y)
            acc += kde_eval(kde, v);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_KdeFitEval)->Unit(benchmark::kMillisecond);

void BM_GmmFit(benchmark::State& state)
{
    const Eigen::MatrixXd& x = michalewicz().candidates().contexts();
    std::vector<double> w(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = 1.0 + static_cast<double>(i % 37);
    for (auto _ : state) {
        Rng rng(3);
        benchmark::DoNotOptimize(gmm_fit_weighted(x, w, static_cast<int>(state.range(0)), rng));
    }
}
BENCHMARK(BM_GmmFit)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

// One full selection round at history size 50.
void BM_Iteration(benchmark::State& state)
{
    const History h = observed(50);
    const Environment& env = michalewicz();
    TrialConfig cfg;
    cfg.acquisition.kind = static_cast<AcquisitionKind>(state.range(0));
    cfg.acquisition.n_gmm = 4;
    cfg.normalize_contexts = false;
    AcquisitionPolicy policy(cfg, env.beta_cardinality(), 5);
    for (auto _ : state)
        benchmark::DoNotOptimize(policy.select(RoundState{10, env, env.candidates(), h}));
    state.SetLabel(std::string(to_string(cfg.acquisition.kind)));
}
BENCHMARK(BM_Iteration)
    ->Arg(static_cast<int>(AcquisitionKind::EI))
    ->Arg(static_cast<int>(AcquisitionKind::TS))
    ->Arg(static_cast<int>(AcquisitionKind::V_UCB))
    ->Arg(static_cast<int>(AcquisitionKind::GP_UCB))
    ->Arg(static_cast<int>(AcquisitionKind::LW_UCB))
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
