#include "lwucb_cli/commands.hpp"

#include "lwucb/errors.hpp"
#include "lwucb/results_io.hpp"
#include "lwucb_cli/spec.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

namespace lwucb::cli {

namespace fs = std::filesystem;

namespace {

struct Prepared {
    ExperimentSpec spec;
    std::vector<Environment> envs;
    fs::path out_dir;
    int jobs = 1;
};

std::size_t smallest_env(const std::vector<Environment>& envs)
{
    std::size_t m = envs.front().size();
    for (const Environment& e : envs)
        m = std::min(m, e.size());
    return m;
}

Prepared prepare(const fs::path& spec_path, const GlobalOptions& opts)
{
    Prepared p;
    p.spec = load_spec(spec_path);
    if (opts.seed)
        p.spec.seed = *opts.seed;
    if (opts.out)
        p.spec.output_dir = opts.out->string();
    if (opts.jobs < 1)
        throw SpecError("--jobs", "must be >= 1");
    p.jobs = opts.jobs;
    p.out_dir = p.spec.output_dir;

    p.envs = build_environments(p.spec.environment);
    if (p.envs.empty())
        throw SpecError("environment", "describes no environments");
    const std::size_t m = smallest_env(p.envs);
    if (static_cast<std::size_t>(p.spec.n_init) > m)
        throw SpecError("n_init", "exceeds the arm count " + std::to_string(m));
    for (std::size_t i = 0; i < p.spec.acquisitions.size(); ++i) {
        const AcquisitionConfig& a = p.spec.acquisitions[i];
        if (a.kind == AcquisitionKind::LW_UCB && static_cast<std::size_t>(a.n_gmm) > m)
            throw SpecError("acquisitions[" + std::to_string(i) + "].n_gmm",
                            "exceeds the arm count " + std::to_string(m));
    }
    return p;
}

struct BundleSummary {
    std::string label;
    std::size_t succeeded = 0;
    std::size_t requested = 0;
    double final_median = 0.0;
    double final_mad = 0.0;
};

BundleSummary run_bundle(const Prepared& p, const AcquisitionConfig& acq, const fs::path& dir,
                         const std::string& command, std::ostream& err)
{
    const TrialConfig cfg = p.spec.trial_config(acq);
    spdlog::info("{}: {} trials on {} environment(s), T={}", acq.label(), p.spec.trials, p.envs.size(),
                 p.spec.horizon);
    const ExperimentResult res = run_experiment(p.envs, cfg, p.spec.trials, p.spec.seed, p.jobs);

    AggregateCurves curves;
    if (!res.records.empty())
        curves = aggregate(res.records);

    RunManifest m;
    m.experiment = {{"command", command}, {"spec", to_json(p.spec)}};
    m.trial = cfg;
    m.master_seed = p.spec.seed;
    m.requested_trials = p.spec.trials;
    m.trial_indices = res.trial_indices;
    m.failures = res.failures;
    persist_results(dir, m, res.records, curves);

    for (const TrialFailure& f : res.failures)
        err << acq.label() << ": trial " << f.trial << " (seed " << f.seed << ", " << f.environment
            << ") failed: " << f.message << '\n';

    BundleSummary s{acq.label(), res.records.size(), p.spec.trials, 0.0, 0.0};
    if (curves.horizon() > 0) {
        s.final_median = curves.median_cumulative_regret.back();
        s.final_mad = curves.mad.back();
    }
    return s;
}

void print_summary(std::ostream& out, const std::string& first_column, const std::vector<BundleSummary>& rows,
                   int horizon)
{
    std::size_t w = first_column.size();
    for (const BundleSummary& r : rows)
        w = std::max(w, r.label.size());
    out << std::left << std::setw(static_cast<int>(w)) << first_column << "  " << std::right << std::setw(8)
        << "trials" << "  " << std::setw(14) << ("median R_" + std::to_string(horizon)) << "  " << std::setw(12)
        << "MAD" << '\n';
    for (const BundleSummary& r : rows) {
        out << std::left << std::setw(static_cast<int>(w)) << r.label << "  " << std::right << std::setw(8)
            << (std::to_string(r.succeeded) + "/" + std::to_string(r.requested)) << "  " << std::setw(14)
            << std::fixed << std::setprecision(4) << r.final_median << "  " << std::setw(12) << r.final_mad
            << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

int exit_for(const std::vector<BundleSummary>& rows, std::ostream& err)
{
    std::size_t failed = 0;
    for (const BundleSummary& r : rows)
        failed += r.requested - r.succeeded;
    if (failed) {
        err << failed << " trial(s) failed; bundles were written with the successful trials\n";
        return kPartialFailure;
    }
    return kOk;
}

template <typename F>
int guarded(std::ostream& err, F&& body)
{
    try {
        return body();
    } catch (const SpecError& e) {
        err << "invalid spec: " << e.what() << '\n';
        return kValidation;
    } catch (const IngestionError& e) {
        err << "invalid snapshot data: " << e.what() << '\n';
        return kValidation;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        err << "i/o error: " << e.what() << '\n';
        return kIo;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
}

} // namespace

int cmd_run(const fs::path& spec_path, const GlobalOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Prepared p = prepare(spec_path, opts);
        std::vector<BundleSummary> rows;
        for (const AcquisitionConfig& acq : p.spec.acquisitions)
            rows.push_back(run_bundle(p, acq, p.out_dir / acq.label(), "run", err));
        out << p.spec.name << " (" << p.envs.size() << " environment(s), " << p.spec.trials << " trials)\n";
        print_summary(out, "acquisition", rows, p.spec.horizon);
        return exit_for(rows, err);
    });
}

int cmd_bench_runtime(const fs::path& spec_path, const GlobalOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Prepared p = prepare(spec_path, opts);
        const TrialConfig base = p.spec.trial_config(p.spec.acquisitions.front());
        const std::vector<RuntimeRow> rows =
            time_iterations(p.envs.front(), base, p.spec.acquisitions, p.spec.runtime_experiments, p.spec.seed);

        std::error_code ec;
        fs::create_directories(p.out_dir, ec);
        if (ec)
            throw IoError("cannot create " + p.out_dir.string() + ": " + ec.message());
        const fs::path csv_path = p.out_dir / "runtime.csv";
        std::ofstream csv(csv_path);
        if (!csv)
            throw IoError("cannot open " + csv_path.string() + " for writing");
        csv << "label,kind,mean_seconds,iterations,failures\n";

        std::size_t w = 11;
        for (const RuntimeRow& r : rows)
            w = std::max(w, r.label.size());
        out << "single-iteration runtime on " << p.envs.front().name() << " (" << p.spec.runtime_experiments
            << " experiments, T=" << p.spec.horizon << ")\n";
        out << std::left << std::setw(static_cast<int>(w)) << "acquisition" << "  " << std::setw(8) << "kind"
            << "  " << std::right << std::setw(24) << "mean seconds" << "  " << std::setw(10) << "iterations"
            << '\n';
        std::size_t failures = 0;
        for (const RuntimeRow& r : rows) {
            const std::string secs = format_double(r.mean_seconds);
            csv << r.label << ',' << to_string(r.kind) << ',' << secs << ',' << r.iterations << ',' << r.failures
                << '\n';
            out << std::left << std::setw(static_cast<int>(w)) << r.label << "  " << std::setw(8)
                << to_string(r.kind) << "  " << std::right << std::setw(24) << secs << "  " << std::setw(10)
                << r.iterations << '\n';
            failures += r.failures;
        }
        csv.close();
        if (!csv)
            throw IoError("write failed for " + csv_path.string());
        if (failures) {
            err << failures << " timing trial(s) failed\n";
            return static_cast<int>(kPartialFailure);
        }
        return static_cast<int>(kOk);
    });
}

int cmd_sweep_gmm(const fs::path& spec_path, const std::vector<int>& values, const GlobalOptions& opts,
                  std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const Prepared p = prepare(spec_path, opts);
        const auto lw = std::find_if(p.spec.acquisitions.begin(), p.spec.acquisitions.end(),
                                     [](const AcquisitionConfig& a) { return a.kind == AcquisitionKind::LW_UCB; });
        if (lw == p.spec.acquisitions.end())
            throw SpecError("acquisitions", "sweep-gmm needs an LW_UCB entry");
        if (values.empty())
            throw SpecError("--values", "needs at least one n_gmm value");
        const std::size_t m = smallest_env(p.envs);
        for (int k : values) {
            if (k < 1)
                throw SpecError("--values", "n_gmm must be >= 1, got " + std::to_string(k));
            if (static_cast<std::size_t>(k) > m)
                throw SpecError("--values", "n_gmm " + std::to_string(k) + " exceeds the arm count " + std::to_string(m));
        }

        std::vector<BundleSummary> rows;
        for (int k : values) {
            AcquisitionConfig acq = *lw;
            acq.n_gmm = k;
            BundleSummary s =
                run_bundle(p, acq, p.out_dir / "sweep_gmm" / ("ngmm_" + std::to_string(k)), "sweep-gmm", err);
            s.label = std::to_string(k);
            rows.push_back(std::move(s));
        }
        out << p.spec.name << ": LW-UCB n_gmm sweep (kappa " << lw->kappa << ", " << p.spec.trials << " trials)\n";
        print_summary(out, "n_gmm", rows, p.spec.horizon);
        return exit_for(rows, err);
    });
}

} // namespace lwucb::cli
