#include "lwucb/environments.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lwucb {

namespace {
constexpr double kPi = std::numbers::pi;
}

Environment::Environment(std::string name, EnvironmentKind kind, CandidateSet candidates,
                         Eigen::VectorXd true_values, double noise_std)
    : name_(std::move(name)),
      kind_(kind),
      candidates_(std::move(candidates)),
      true_values_(std::move(true_values)),
      noise_std_(noise_std)
{
    if (true_values_.size() != candidates_.size())
        throw std::invalid_argument("Environment: one true value per arm required");
    if (!true_values_.allFinite())
        throw std::invalid_argument("Environment: non-finite true value");
    if (!(noise_std_ >= 0.0) || !std::isfinite(noise_std_))
        throw std::invalid_argument("Environment: noise_std must be finite and >= 0");
    Eigen::Index best = 0;
    optimum_ = true_values_.maxCoeff(&best);
    best_arm_ = static_cast<std::size_t>(best);
}

double Environment::simple_regret(std::size_t arm) const
{
    if (arm >= size())
        throw std::out_of_range("Environment: unknown arm " + std::to_string(arm));
    return optimum_ - true_values_(static_cast<Eigen::Index>(arm));
}

double Environment::beta_cardinality() const noexcept
{
    if (kind_ == EnvironmentKind::Sensor)
        return static_cast<double>(candidates_.dim());
    return static_cast<double>(candidates_.size());
}

PullResult pull(const Environment& env, std::size_t arm, Rng& rng)
{
    const double regret = env.simple_regret(arm);
    const double f = env.true_values()(static_cast<Eigen::Index>(arm));
    if (env.noise_std() == 0.0)
        return {f, regret};
    std::normal_distribution<double> noise(0.0, env.noise_std());
    return {f + noise(rng), regret};
}

double cosine_value(double x1, double x2)
{
    const double u = 1.6 * x1 - 0.5;
    const double v = 1.6 * x2 - 0.5;
    return 1.0 - (u * u + v * v - 0.3 * std::cos(3.0 * kPi * u) - 0.3 * std::cos(3.0 * kPi * v));
}

double michalewicz_value(double x1, double x2)
{
    return std::sin(kPi * x1) * std::pow(std::sin(kPi * x1 * x1), 20)
         + std::sin(kPi * x2) * std::pow(std::sin(2.0 * kPi * x2 * x2), 20);
}

double modified_michalewicz_value(double x1, double x2)
{
    return std::sin(kPi * x1) * std::pow(std::sin(2.0 * kPi * x1 * x1), 20)
         + std::sin(kPi * x2) * std::pow(std::sin(3.0 * kPi * x2 * x2), 20);
}

double wheel_value(double x, double y, double rho)
{
    if (x * x + y * y <= rho * rho)
        return 0.2;
    if (y >= 0.0)
        return x >= 0.0 ? 1.0 : 0.05;
    return x >= 0.0 ? 0.1 : 0.0;
}

Eigen::MatrixXd unit_grid(int grid_n)
{
    if (grid_n < 2)
        throw std::invalid_argument("unit_grid: grid_n must be >= 2");
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(grid_n, 0.0, 1.0);
    Eigen::MatrixXd pts(grid_n * grid_n, 2);
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < grid_n; ++j) {
            pts(i * grid_n + j, 0) = axis(i);
            pts(i * grid_n + j, 1) = axis(j);
        }
    }
    return pts;
}

namespace {

template <typename F>
Environment make_grid_env(const std::string& name, int grid_n, double noise_std, F f)
{
    Eigen::MatrixXd pts = unit_grid(grid_n);
    Eigen::VectorXd values(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        values(i) = f(pts(i, 0), pts(i, 1));
    return Environment(name, EnvironmentKind::Synthetic, CandidateSet(std::move(pts)), std::move(values),
                       noise_std);
}

} // namespace

Environment make_cosine(int grid_n, double noise_std)
{
    return make_grid_env("cosine", grid_n, noise_std, cosine_value);
}

Environment make_michalewicz(int grid_n, double noise_std)
{
    return make_grid_env("michalewicz", grid_n, noise_std, michalewicz_value);
}

Environment make_modified_michalewicz(int grid_n, double noise_std)
{
    return make_grid_env("modified_michalewicz", grid_n, noise_std, modified_michalewicz_value);
}

Environment make_wheel(double rho, int grid_n, double noise_std)
{
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("make_wheel: rho must lie in (0, 1)");
    if (grid_n < 2)
        throw std::invalid_argument("make_wheel: grid_n must be >= 2");
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(grid_n, -1.0, 1.0);
    std::vector<double> xs, ys;
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < grid_n; ++j) {
            const double x = axis(i), y = axis(j);
            if (x * x + y * y <= 1.0 + 1e-12) {
                xs.push_back(x);
                ys.push_back(y);
            }
        }
    }
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()), 2);
    Eigen::VectorXd values(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = xs[static_cast<std::size_t>(i)];
        pts(i, 1) = ys[static_cast<std::size_t>(i)];
        values(i) = wheel_value(pts(i, 0), pts(i, 1), rho);
    }
    std::ostringstream name;
    name << "wheel_rho" << rho;
    return Environment(name.str(), EnvironmentKind::Wheel, CandidateSet(std::move(pts)), std::move(values),
                       noise_std);
}

Environment make_sensor_env(const SnapshotDataset& dataset, std::size_t snapshot_index, ContextMode mode,
                            double noise_std)
{
    if (snapshot_index >= dataset.snapshots.size())
        throw std::out_of_range("make_sensor_env: snapshot index " + std::to_string(snapshot_index)
                                + " out of range (" + std::to_string(dataset.snapshots.size()) + " snapshots)");
    const auto& snap = dataset.snapshots[snapshot_index];
    if (snap.sensors.empty())
        throw std::invalid_argument("make_sensor_env: snapshot has no readings");
    const Eigen::Index d = mode == ContextMode::Partial ? 2 : dataset.contexts.cols();

    Eigen::MatrixXd ctx(static_cast<Eigen::Index>(snap.sensors.size()), d);
    std::vector<std::string> ids;
    ids.reserve(snap.sensors.size());
    for (std::size_t r = 0; r < snap.sensors.size(); ++r) {
        ctx.row(static_cast<Eigen::Index>(r)) = dataset.contexts.row(static_cast<Eigen::Index>(snap.sensors[r])).head(d);
        ids.push_back(dataset.sensor_ids[snap.sensors[r]]);
    }
    return Environment("sensor:" + snap.label, EnvironmentKind::Sensor, CandidateSet(std::move(ctx), std::move(ids)),
                       snap.values, noise_std);
}

} // namespace lwucb
