#include "lwucb/results_io.hpp"

#include "lwucb/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lwucb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

double parse_double(const std::string& s, const fs::path& file, std::size_t line)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw IoError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + p.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& p)
{
    out.flush();
    if (!out)
        throw IoError("write failed for " + p.string());
}

std::string trace_name(std::size_t trial)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial_%04zu.csv", trial);
    return buf;
}

} // namespace

json to_json(const AcquisitionConfig& acq)
{
    json j{{"kind", std::string(to_string(acq.kind))},
           {"kappa", acq.kappa},
           {"delta", acq.delta},
           {"xi", acq.xi},
           {"n_gmm", acq.n_gmm},
           {"input_prior", acq.input_prior}};
    j["cardinality_for_beta"] = acq.cardinality_for_beta ? json(*acq.cardinality_for_beta) : json(nullptr);
    return j;
}

AcquisitionConfig acquisition_from_json(const json& j)
{
    AcquisitionConfig acq;
    const auto name = j.at("kind").get<std::string>();
    const auto kind = parse_acquisition_kind(name);
    if (!kind)
        throw std::invalid_argument("acquisition.kind: unknown acquisition '" + name + "'");
    acq.kind = *kind;
    acq.kappa = j.value("kappa", acq.kappa);
    acq.delta = j.value("delta", acq.delta);
    acq.xi = j.value("xi", acq.xi);
    acq.n_gmm = j.value("n_gmm", acq.n_gmm);
    acq.input_prior = j.value("input_prior", acq.input_prior);
    if (j.contains("cardinality_for_beta") && !j.at("cardinality_for_beta").is_null())
        acq.cardinality_for_beta = j.at("cardinality_for_beta").get<double>();
    return acq;
}

json to_json(const TrialConfig& cfg)
{
    const MinimizeSettings& o = cfg.fit.optimizer;
    json j{{"acquisition", to_json(cfg.acquisition)},
           {"horizon", cfg.horizon},
           {"n_init", cfg.n_init},
           {"seed", cfg.seed},
           {"normalize_contexts", cfg.normalize_contexts},
           {"warm_start", cfg.warm_start},
           {"fit",
            {{"restarts", cfg.fit.restarts},
             {"init_spread", cfg.fit.init_spread},
             {"noise_floor", cfg.fit.noise_floor},
             {"optimizer",
              {{"max_iterations", o.max_iterations},
               {"gradient_tolerance", o.gradient_tolerance},
               {"history", o.history},
               {"armijo_c1", o.armijo_c1},
               {"shrink", o.shrink},
               {"max_backtracks", o.max_backtracks},
               {"value_tolerance", o.value_tolerance}}}}}};
    j["fixed_noise_variance"] = cfg.fixed_noise_variance ? json(*cfg.fixed_noise_variance) : json(nullptr);
    return j;
}

TrialConfig trial_config_from_json(const json& j)
{
    TrialConfig cfg;
    cfg.acquisition = acquisition_from_json(j.at("acquisition"));
    cfg.horizon = j.value("horizon", cfg.horizon);
    cfg.n_init = j.value("n_init", cfg.n_init);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.normalize_contexts = j.value("normalize_contexts", cfg.normalize_contexts);
    cfg.warm_start = j.value("warm_start", cfg.warm_start);
    if (j.contains("fixed_noise_variance") && !j.at("fixed_noise_variance").is_null())
        cfg.fixed_noise_variance = j.at("fixed_noise_variance").get<double>();
    if (j.contains("fit")) {
        const json& f = j.at("fit");
        cfg.fit.restarts = f.value("restarts", cfg.fit.restarts);
        cfg.fit.init_spread = f.value("init_spread", cfg.fit.init_spread);
        cfg.fit.noise_floor = f.value("noise_floor", cfg.fit.noise_floor);
        if (f.contains("optimizer")) {
            const json& o = f.at("optimizer");
            MinimizeSettings& s = cfg.fit.optimizer;
            s.max_iterations = o.value("max_iterations", s.max_iterations);
            s.gradient_tolerance = o.value("gradient_tolerance", s.gradient_tolerance);
            s.history = o.value("history", s.history);
            s.armijo_c1 = o.value("armijo_c1", s.armijo_c1);
            s.shrink = o.value("shrink", s.shrink);
            s.max_backtracks = o.value("max_backtracks", s.max_backtracks);
            s.value_tolerance = o.value("value_tolerance", s.value_tolerance);
        }
    }
    return cfg;
}

json to_json(const GpHyperparams& hp)
{
    return json{{"log_signal_variance", hp.log_signal_variance},
                {"log_lengthscales", std::vector<double>(hp.log_lengthscales.data(),
                                                         hp.log_lengthscales.data() + hp.log_lengthscales.size())},
                {"log_noise_variance", hp.log_noise_variance}};
}

GpHyperparams hyperparams_from_json(const json& j)
{
    GpHyperparams hp;
    hp.log_signal_variance = j.at("log_signal_variance").get<double>();
    const auto ell = j.at("log_lengthscales").get<std::vector<double>>();
    hp.log_lengthscales = Eigen::Map<const Eigen::VectorXd>(ell.data(), static_cast<Eigen::Index>(ell.size()));
    hp.log_noise_variance = j.at("log_noise_variance").get<double>();
    return hp;
}

void write_trace_csv(std::ostream& out, const TrialRecord& r)
{
    out << "round,arm_id,reward,simple_regret,cumulative_regret,seconds\n";
    for (std::size_t t = 0; t < r.horizon(); ++t) {
        out << (t + 1) << ',' << r.arm_ids[t] << ',' << format_double(r.rewards[t]) << ','
            << format_double(r.simple_regrets[t]) << ',' << format_double(r.cumulative_regrets[t]) << ','
            << format_double(r.seconds[t]) << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, const AggregateCurves& c)
{
    out << "round,median_cum_regret,mad\n";
    for (std::size_t t = 0; t < c.horizon(); ++t)
        out << (t + 1) << ',' << format_double(c.median_cumulative_regret[t]) << ',' << format_double(c.mad[t])
            << '\n';
}

void persist_results(const fs::path& dir, const RunManifest& manifest, std::span<const TrialRecord> records,
                     const AggregateCurves& curves)
{
    if (manifest.trial_indices.size() != records.size())
        throw std::invalid_argument("persist_results: one trial index per record required");
    std::error_code ec;
    fs::create_directories(dir / "traces", ec);
    if (ec)
        throw IoError("cannot create " + (dir / "traces").string() + ": " + ec.message());

    json trials = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const TrialRecord& r = records[i];
        const std::string name = trace_name(manifest.trial_indices[i]);
        json t{{"index", manifest.trial_indices[i]},
               {"seed", r.seed},
               {"environment", r.environment},
               {"trace", "traces/" + name},
               {"init_arms", r.init_arms},
               {"init_rewards", r.init_rewards},
               {"arms", r.arms}};
        t["final_hyperparams"] = r.final_hyperparams ? to_json(*r.final_hyperparams) : json(nullptr);
        trials.push_back(std::move(t));

        const fs::path p = dir / "traces" / name;
        std::ofstream out = open_out(p);
        write_trace_csv(out, r);
        finish(out, p);
    }

    json failures = json::array();
    for (const TrialFailure& f : manifest.failures)
        failures.push_back(
            json{{"index", f.trial}, {"seed", f.seed}, {"environment", f.environment}, {"message", f.message}});

    json doc{{"schema_version", kManifestSchemaVersion},
             {"artifact_version", std::string(kArtifactVersion)},
             {"experiment", manifest.experiment},
             {"trial_config", to_json(manifest.trial)},
             {"master_seed", manifest.master_seed},
             {"requested_trials", manifest.requested_trials},
             {"successful_trials", records.size()},
             {"trials", std::move(trials)},
             {"failures", std::move(failures)},
             {"aggregate", "aggregate.csv"}};

    const fs::path mp = dir / "manifest.json";
    std::ofstream mout = open_out(mp);
    mout << doc.dump(2) << '\n';
    finish(mout, mp);

    const fs::path ap = dir / "aggregate.csv";
    std::ofstream aout = open_out(ap);
    write_aggregate_csv(aout, curves);
    finish(aout, ap);
}

namespace {

std::vector<std::vector<std::string>> read_table(const fs::path& p, const std::string& header)
{
    std::ifstream in(p);
    if (!in)
        throw IoError("cannot open " + p.string());
    std::string line;
    if (!std::getline(in, line) || line != header)
        throw IoError(p.string() + ": unexpected header");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        rows.push_back(split_csv(line));
    }
    return rows;
}

} // namespace

ResultBundle read_results(const fs::path& dir)
{
    ResultBundle b;
    const fs::path mp = dir / "manifest.json";
    {
        std::ifstream in(mp);
        if (!in)
            throw IoError("cannot open " + mp.string());
        try {
            in >> b.manifest;
        } catch (const json::exception& e) {
            throw IoError(mp.string() + ": " + e.what());
        }
    }

    for (const json& t : b.manifest.at("trials")) {
        TrialRecord r;
        r.seed = t.at("seed").get<std::uint64_t>();
        r.environment = t.at("environment").get<std::string>();
        r.init_arms = t.at("init_arms").get<std::vector<std::size_t>>();
        r.init_rewards = t.at("init_rewards").get<std::vector<double>>();
        r.arms = t.at("arms").get<std::vector<std::size_t>>();
        if (!t.at("final_hyperparams").is_null())
            r.final_hyperparams = hyperparams_from_json(t.at("final_hyperparams"));

        const fs::path tp = dir / t.at("trace").get<std::string>();
        const auto rows = read_table(tp, "round,arm_id,reward,simple_regret,cumulative_regret,seconds");
        std::size_t line = 1;
        for (const auto& row : rows) {
            ++line;
            if (row.size() != 6)
                throw IoError(tp.string() + ":" + std::to_string(line) + ": expected 6 fields");
            r.arm_ids.push_back(row[1]);
            r.rewards.push_back(parse_double(row[2], tp, line));
            r.simple_regrets.push_back(parse_double(row[3], tp, line));
            r.cumulative_regrets.push_back(parse_double(row[4], tp, line));
            r.seconds.push_back(parse_double(row[5], tp, line));
        }
        if (r.arm_ids.size() != r.arms.size())
            throw IoError(tp.string() + ": trace length does not match manifest");
        b.records.push_back(std::move(r));
    }

    const fs::path ap = dir / "aggregate.csv";
    const auto rows = read_table(ap, "round,median_cum_regret,mad");
    std::size_t line = 1;
    for (const auto& row : rows) {
        ++line;
        if (row.size() != 3)
            throw IoError(ap.string() + ":" + std::to_string(line) + ": expected 3 fields");
        b.curves.median_cumulative_regret.push_back(parse_double(row[1], ap, line));
        b.curves.mad.push_back(parse_double(row[2], ap, line));
    }
    b.curves.trials = b.manifest.at("successful_trials").get<std::size_t>();
    return b;
}

} // namespace lwucb
