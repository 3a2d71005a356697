#include "lwucb/errors.hpp"
#include "lwucb/results_io.hpp"

#include <doctest/doctest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

using namespace lwucb;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("lwucb_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("format_double round-trips")
{
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(gen) * std::pow(10.0, (i % 40) - 20);
        const std::string s = format_double(v);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("config json round-trip")
{
    TrialConfig c;
    c.acquisition.kind = AcquisitionKind::GP_UCB;
    c.acquisition.delta = 0.05;
    c.acquisition.cardinality_for_beta = 46.0;
    c.horizon = 42;
    c.seed = 0xFFFFFFFFFFFFFFFFULL;
    c.fixed_noise_variance = 1e-6;
    c.fit.restarts = 5;
    const TrialConfig back = trial_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.seed == c.seed);
    CHECK(back.acquisition.cardinality_for_beta == 46.0);

    nlohmann::json bad = to_json(c.acquisition);
    bad["kind"] = "UCB1";
    CHECK_THROWS_WITH_AS(acquisition_from_json(bad), doctest::Contains("acquisition.kind"), std::invalid_argument);

    const auto hp = GpHyperparams::from_values(0.3, Eigen::Vector2d(0.1, 0.2), 1e-5);
    CHECK(hyperparams_from_json(to_json(hp)) == hp);
}

TEST_CASE("bundle round-trip")
{
    const Environment env = make_cosine(8);
    TrialConfig cfg;
    cfg.acquisition.kind = AcquisitionKind::V_UCB;
    cfg.horizon = 6;
    cfg.fit.restarts = 2;
    const std::vector<Environment> envs{env};
    const ExperimentResult res = run_experiment(envs, cfg, 3, 11);
    const AggregateCurves curves = aggregate(res.records);

    RunManifest m;
    m.experiment = {{"name", "unit"}};
    m.trial = cfg;
    m.master_seed = 11;
    m.requested_trials = 3;
    m.trial_indices = res.trial_indices;

    const fs::path dir = scratch_dir("bundle");
    persist_results(dir, m, res.records, curves);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "aggregate.csv"));
    CHECK(fs::exists(dir / "traces" / "trial_0002.csv"));

    const ResultBundle b = read_results(dir);
    CHECK(b.manifest.at("schema_version") == kManifestSchemaVersion);
    CHECK(b.manifest.at("artifact_version") == std::string(kArtifactVersion));
    CHECK(b.manifest.at("master_seed") == 11);
    CHECK(b.manifest.at("experiment").at("name") == "unit");
    REQUIRE(b.records.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const TrialRecord& a = res.records[i];
        const TrialRecord& r = b.records[i];
        CHECK(r.seed == a.seed);
        CHECK(r.arms == a.arms);
        CHECK(r.arm_ids == a.arm_ids);
        CHECK(r.rewards == a.rewards);
        CHECK(r.cumulative_regrets == a.cumulative_regrets);
        CHECK(r.seconds == a.seconds);
        CHECK(r.init_arms == a.init_arms);
        CHECK(r.final_hyperparams == a.final_hyperparams);
    }
    CHECK(b.curves.median_cumulative_regret == curves.median_cumulative_regret);
    CHECK(b.curves.mad == curves.mad);
    CHECK(b.curves.horizon() == 6);

    std::ifstream trace(dir / "traces" / "trial_0000.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "round,arm_id,reward,simple_regret,cumulative_regret,seconds");
    std::string first;
    std::getline(trace, first);
    CHECK(first.rfind("1,", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("aggregate csv layout")
{
    AggregateCurves c;
    c.median_cumulative_regret = {0.5, 1.25};
    c.mad = {0.0, 0.125};
    std::ostringstream os;
    write_aggregate_csv(os, c);
    CHECK(os.str() == "round,median_cum_regret,mad\n1,0.5,0\n2,1.25,0.125\n");
}

TEST_CASE("io failures raise IoError")
{
    const fs::path blocker = scratch_dir("blocker");
    {
        std::ofstream(blocker) << "x";
    }
    RunManifest m;
    CHECK_THROWS_AS(persist_results(blocker / "sub", m, {}, AggregateCurves{}), IoError);
    CHECK_THROWS_AS(read_results(blocker / "nowhere"), IoError);
    fs::remove(blocker);
}
