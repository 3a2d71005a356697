#include "lwucb/numopt.hpp"

#include "lwucb/errors.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace lwucb {

namespace {

constexpr double kRoundingNoise = 1e-14;

bool finite(double v, const Eigen::VectorXd& g) { return std::isfinite(v) && g.allFinite(); }

struct Correction {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
    double rho;
};

// Two-loop recursion: returns -H g for the implicit inverse Hessian H.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::deque<Correction>& memory)
{
    Eigen::VectorXd q = g;
    std::vector<double> a(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
        a[i] = memory[i].rho * memory[i].s.dot(q);
        q -= a[i] * memory[i].y;
    }
    const Correction& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
    for (std::size_t i = 0; i < memory.size(); ++i) {
        const double b = memory[i].rho * memory[i].y.dot(q);
        q += (a[i] - b) * memory[i].s;
    }
    return -q;
}

} // namespace

MinimizeResult minimize(const MinimizeProblem& problem)
{
    const MinimizeSettings& cfg = problem.settings;
    const Eigen::Index n = problem.initial_point.size();

    Eigen::VectorXd x = problem.initial_point;
    Eigen::VectorXd g(n);
    double f = problem.objective(x, g);
    if (!finite(f, g))
        throw OptimizationError("minimize: objective is not finite at the initial point");

    const double f_start = f;
    MinimizeResult result{x, f, false, 0};
    std::deque<Correction> memory;
    Eigen::VectorXd x_new(n), g_new(n);

    for (int iter = 0;; ++iter) {
        result.iterations = iter;
        if (g.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance) {
            result.converged = true;
            break;
        }
        if (iter >= cfg.max_iterations)
            break;

        Eigen::VectorXd d;
        if (memory.empty()) {
            d = -g / std::max(1.0, g.norm());
        } else {
            d = lbfgs_direction(g, memory);
        }
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            memory.clear();
            d = -g / std::max(1.0, g.norm());
            slope = g.dot(d);
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int k = 0; k <= cfg.max_backtracks; ++k) {
            x_new = x + step * d;
            f_new = problem.objective(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + cfg.armijo_c1 * step * slope) {
                accepted = true;
                break;
            }
            // Near a minimum the decrease drowns in rounding. There the trapezoidal
            // estimate of the decrease stands in for f, as long as f moved by no
            // more than rounding noise.
            if (std::isfinite(f_new) && f_new <= f + kRoundingNoise * std::abs(f) && g_new.allFinite()
                && 0.5 * (slope + g_new.dot(d)) <= cfg.armijo_c1 * slope) {
                accepted = true;
                break;
            }
            step *= cfg.shrink;
        }
        if (!accepted)
            break;
        if (!g_new.allFinite()) {
            // Value decreased but the gradient is unusable: keep the point, stop.
            result.argmin = x_new;
            result.min_value = f_new;
            result.iterations = iter + 1;
            return result;
        }

        Correction c{x_new - x, g_new - g, 0.0};
        const double sy = c.s.dot(c.y);
        if (sy > 1e-12 * c.y.squaredNorm() && sy > 0.0) {
            c.rho = 1.0 / sy;
            memory.push_back(std::move(c));
            if (static_cast<int>(memory.size()) > cfg.history)
                memory.pop_front();
        }

        const double improvement = f - f_new;
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        result.argmin = x;
        result.min_value = f;

        if (cfg.value_tolerance > 0.0
            && improvement <= cfg.value_tolerance * std::max(1.0, std::abs(f))) {
            result.iterations = iter + 1;
            result.converged = g.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance;
            break;
        }
    }
    if (result.min_value > f_start) {
        // Only possible through rounding-level steps; never report worse than the start.
        result.argmin = problem.initial_point;
        result.min_value = f_start;
    }
    return result;
}

MinimizeResult multistart_minimize(const Objective& objective,
                                   std::span<const Eigen::VectorXd> starts,
                                   const MinimizeSettings& settings)
{
    if (starts.empty())
        throw std::invalid_argument("multistart_minimize: no starting points");

    bool have_best = false;
    MinimizeResult best;
    for (const Eigen::VectorXd& start : starts) {
        MinimizeResult run;
        try {
            run = minimize(MinimizeProblem{objective, start, settings});
        } catch (const OptimizationError&) {
            continue;
        }
        if (!std::isfinite(run.min_value))
            continue;
        if (!have_best || run.min_value < best.min_value) {
            best = std::move(run);
            have_best = true;
        }
    }
    if (!have_best)
        throw OptimizationError("multistart_minimize: every start failed");
    return best;
}

} // namespace lwucb
