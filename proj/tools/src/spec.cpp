#include "lwucb_cli/spec.hpp"

#include "lwucb/errors.hpp"
#include "lwucb/results_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace lwucb::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!j.is_object())
        throw SpecError(where.empty() ? "spec" : where, "must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw SpecError(where.empty() ? key : where + "." + key, "unknown field");
    }
}

std::string path_of(const std::string& where, const char* key)
{
    return where.empty() ? key : where + "." + key;
}

template <typename T>
T get(const json& j, const std::string& where, const char* key, T fallback)
{
    if (!j.contains(key))
        return fallback;
    const json& v = j.at(key);
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean())
                throw SpecError(path_of(where, key), "expected true or false");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer())
                throw SpecError(path_of(where, key), "expected an integer");
            if (std::is_unsigned_v<T> && !v.is_number_unsigned())
                throw SpecError(path_of(where, key), "expected a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number())
                throw SpecError(path_of(where, key), "expected a number");
        } else {
            if (!v.is_string())
                throw SpecError(path_of(where, key), "expected a string");
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw SpecError(path_of(where, key), e.what());
    }
}

AcquisitionConfig parse_acquisition(const json& j, const std::string& where)
{
    AcquisitionConfig a;
    const json obj = j.is_string() ? json{{"kind", j}} : j;
    check_keys(obj, where, {"kind", "kappa", "delta", "xi", "n_gmm", "input_prior", "cardinality_for_beta"});
    if (!obj.contains("kind"))
        throw SpecError(where + ".kind", "missing");
    const std::string kind = get<std::string>(obj, where, "kind", "");
    const auto parsed = parse_acquisition_kind(kind);
    if (!parsed)
        throw SpecError(where + ".kind", "unknown acquisition '" + kind + "' (expected EI, TS, V_UCB, GP_UCB or LW_UCB)");
    a.kind = *parsed;
    a.kappa = get(obj, where, "kappa", a.kappa);
    a.delta = get(obj, where, "delta", a.delta);
    a.xi = get(obj, where, "xi", a.xi);
    a.n_gmm = get(obj, where, "n_gmm", a.n_gmm);
    a.input_prior = get(obj, where, "input_prior", a.input_prior);
    if (obj.contains("cardinality_for_beta") && !obj.at("cardinality_for_beta").is_null())
        a.cardinality_for_beta = get(obj, where, "cardinality_for_beta", 0.0);
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        // validate() reports "acquisition.<field>: why".
        std::string msg = e.what();
        const auto dot = msg.find('.');
        const auto colon = msg.find(": ");
        throw SpecError(where + "." + msg.substr(dot + 1, colon - dot - 1), msg.substr(colon + 2));
    }
    return a;
}

EnvironmentSpec parse_environment(const json& j, const std::filesystem::path& base_dir)
{
    const std::string w = "environment";
    if (!j.is_object())
        throw SpecError(w, "must be an object");
    if (!j.contains("type"))
        throw SpecError(w + ".type", "missing");
    EnvironmentSpec e;
    e.type = get<std::string>(j, w, "type", "");
    if (e.type == "cosine" || e.type == "michalewicz" || e.type == "modified_michalewicz") {
        check_keys(j, w, {"type", "grid_n", "noise_std"});
        e.grid_n = get(j, w, "grid_n", 50);
        e.noise_std = get(j, w, "noise_std", 1e-4);
    } else if (e.type == "wheel") {
        check_keys(j, w, {"type", "grid_n", "noise_std", "rho"});
        e.grid_n = get(j, w, "grid_n", 70);
        e.noise_std = get(j, w, "noise_std", 1e-3);
        if (!j.contains("rho"))
            throw SpecError(w + ".rho", "missing");
        e.rho = get(j, w, "rho", 0.5);
        if (!(e.rho > 0.0 && e.rho < 1.0))
            throw SpecError(w + ".rho", "must lie in (0, 1)");
    } else if (e.type == "sensor") {
        check_keys(j, w, {"type", "snapshot_file", "dims", "context", "noise_std", "snapshots"});
        if (!j.contains("snapshot_file"))
            throw SpecError(w + ".snapshot_file", "missing");
        e.snapshot_file = get<std::string>(j, w, "snapshot_file", "");
        const std::filesystem::path p(e.snapshot_file);
        e.snapshot_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        e.dims = get(j, w, "dims", 2);
        if (e.dims != 2 && e.dims != 3)
            throw SpecError(w + ".dims", "must be 2 or 3");
        const std::string ctx = get<std::string>(j, w, "context", "full");
        if (ctx == "full")
            e.context = ContextMode::Full;
        else if (ctx == "partial")
            e.context = ContextMode::Partial;
        else
            throw SpecError(w + ".context", "expected 'full' or 'partial'");
        e.noise_std = get(j, w, "noise_std", 1e-4);
        if (j.contains("snapshots")) {
            if (!j.at("snapshots").is_array())
                throw SpecError(w + ".snapshots", "expected a list of snapshot indices");
            for (const json& v : j.at("snapshots")) {
                if (!v.is_number_unsigned())
                    throw SpecError(w + ".snapshots", "expected non-negative integers");
                e.snapshots.push_back(v.get<std::size_t>());
            }
        }
    } else {
        throw SpecError(w + ".type", "unknown environment '" + e.type
                                         + "' (expected cosine, michalewicz, modified_michalewicz, wheel or sensor)");
    }
    if (e.type != "sensor" && e.grid_n < 2)
        throw SpecError(w + ".grid_n", "must be >= 2");
    if (!(e.noise_std >= 0.0) || !std::isfinite(e.noise_std))
        throw SpecError(w + ".noise_std", "must be finite and >= 0");
    return e;
}

const char* context_name(ContextMode m)
{
    return m == ContextMode::Full ? "full" : "partial";
}

} // namespace

TrialConfig ExperimentSpec::trial_config(const AcquisitionConfig& acquisition) const
{
    TrialConfig c;
    c.acquisition = acquisition;
    c.horizon = horizon;
    c.n_init = n_init;
    c.seed = seed;
    c.normalize_contexts = normalize_contexts;
    c.fixed_noise_variance = fixed_noise_variance;
    c.warm_start = warm_start;
    c.fit.restarts = restarts;
    return c;
}

ExperimentSpec parse_spec(const json& j, const std::filesystem::path& base_dir)
{
    check_keys(j, "", {"name", "environment", "acquisitions", "horizon", "trials", "n_init", "seed", "output_dir",
                       "normalize_contexts", "fixed_noise_variance", "warm_start", "restarts",
                       "runtime_experiments"});
    ExperimentSpec s;
    if (!j.contains("environment"))
        throw SpecError("environment", "missing");
    s.environment = parse_environment(j.at("environment"), base_dir);
    s.name = get<std::string>(j, "", "name", s.environment.type);

    if (!j.contains("acquisitions"))
        throw SpecError("acquisitions", "missing");
    const json& acqs = j.at("acquisitions");
    if (!acqs.is_array() || acqs.empty())
        throw SpecError("acquisitions", "expected a non-empty list");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < acqs.size(); ++i) {
        const std::string where = "acquisitions[" + std::to_string(i) + "]";
        s.acquisitions.push_back(parse_acquisition(acqs.at(i), where));
        if (!labels.insert(s.acquisitions.back().label()).second)
            throw SpecError(where, "duplicates " + s.acquisitions.back().label());
    }

    s.horizon = get(j, "", "horizon", s.horizon);
    s.trials = get(j, "", "trials", s.trials);
    s.n_init = get(j, "", "n_init", s.n_init);
    s.seed = get(j, "", "seed", s.seed);
    s.output_dir = get(j, "", "output_dir", s.output_dir);
    s.normalize_contexts = get(j, "", "normalize_contexts", s.normalize_contexts);
    if (j.contains("fixed_noise_variance") && !j.at("fixed_noise_variance").is_null())
        s.fixed_noise_variance = get(j, "", "fixed_noise_variance", 0.0);
    s.warm_start = get(j, "", "warm_start", s.warm_start);
    s.restarts = get(j, "", "restarts", s.restarts);
    s.runtime_experiments = get(j, "", "runtime_experiments", s.runtime_experiments);

    if (s.horizon < 1)
        throw SpecError("horizon", "must be >= 1");
    if (s.trials < 1)
        throw SpecError("trials", "must be >= 1");
    if (s.n_init < 1)
        throw SpecError("n_init", "must be >= 1");
    if (s.restarts < 1)
        throw SpecError("restarts", "must be >= 1");
    if (s.runtime_experiments < 1)
        throw SpecError("runtime_experiments", "must be >= 1");
    if (s.fixed_noise_variance && !(*s.fixed_noise_variance > 0.0))
        throw SpecError("fixed_noise_variance", "must be positive");
    if (s.output_dir.empty())
        throw SpecError("output_dir", "must not be empty");
    return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open spec " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw SpecError("spec", std::string("not valid JSON: ") + e.what());
    }
    return parse_spec(j, path.parent_path());
}

json to_json(const ExperimentSpec& s)
{
    json env{{"type", s.environment.type}, {"noise_std", s.environment.noise_std}};
    if (s.environment.type == "sensor") {
        env["snapshot_file"] = s.environment.snapshot_file;
        env["dims"] = s.environment.dims;
        env["context"] = context_name(s.environment.context);
        if (!s.environment.snapshots.empty())
            env["snapshots"] = s.environment.snapshots;
    } else {
        env["grid_n"] = s.environment.grid_n;
        if (s.environment.type == "wheel")
            env["rho"] = s.environment.rho;
    }

    json acqs = json::array();
    for (const AcquisitionConfig& a : s.acquisitions)
        acqs.push_back(lwucb::to_json(a));

    json j{{"name", s.name},
           {"environment", env},
           {"acquisitions", acqs},
           {"horizon", s.horizon},
           {"trials", s.trials},
           {"n_init", s.n_init},
           {"seed", s.seed},
           {"output_dir", s.output_dir},
           {"normalize_contexts", s.normalize_contexts},
           {"warm_start", s.warm_start},
           {"restarts", s.restarts},
           {"runtime_experiments", s.runtime_experiments}};
    j["fixed_noise_variance"] = s.fixed_noise_variance ? json(*s.fixed_noise_variance) : json(nullptr);
    return j;
}

std::vector<Environment> build_environments(const EnvironmentSpec& e)
{
    if (e.type == "cosine")
        return {make_cosine(e.grid_n, e.noise_std)};
    if (e.type == "michalewicz")
        return {make_michalewicz(e.grid_n, e.noise_std)};
    if (e.type == "modified_michalewicz")
        return {make_modified_michalewicz(e.grid_n, e.noise_std)};
    if (e.type == "wheel")
        return {make_wheel(e.rho, e.grid_n, e.noise_std)};
    if (e.type == "sensor") {
        if (!std::filesystem::exists(e.snapshot_path))
            throw IoError("snapshot file not found: " + e.snapshot_path.string());
        const SnapshotDataset ds = load_snapshot_csv(e.snapshot_path, e.dims);
        std::vector<std::size_t> idx = e.snapshots;
        if (idx.empty())
            for (std::size_t i = 0; i < ds.snapshots.size(); ++i)
                idx.push_back(i);
        std::vector<Environment> envs;
        for (std::size_t i : idx) {
            if (i >= ds.snapshots.size())
                throw SpecError("environment.snapshots", "index " + std::to_string(i) + " out of range ("
                                                             + std::to_string(ds.snapshots.size()) + " snapshots)");
            envs.push_back(make_sensor_env(ds, i, e.context, e.noise_std));
        }
        return envs;
    }
    throw SpecError("environment.type", "unknown environment '" + e.type + "'");
}

} // namespace lwucb::cli
