#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>

namespace lwucb {

/// Objective returning f(x) and writing its gradient into `grad` (pre-sized to x.size()).
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct MinimizeSettings {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;
    int history = 10;
    double armijo_c1 = 1e-4;
    double shrink = 0.5;
    int max_backtracks = 50;
    /// Stop (without claiming convergence) once an accepted step improves the
    /// objective by less than value_tolerance * max(1, |f|). Zero disables.
    double value_tolerance = 0.0;
};

struct MinimizeProblem {
    Objective objective;
    Eigen::VectorXd initial_point;
    MinimizeSettings settings{};
};

struct MinimizeResult {
    Eigen::VectorXd argmin;
    double min_value = 0.0;
    /// True iff the gradient infinity-norm fell to the tolerance.
    bool converged = false;
    int iterations = 0;
};

/// Limited-memory BFGS with a backtracking Armijo line search.
///
/// Only steps with sufficient decrease are accepted, so min_value never
/// exceeds the value at the initial point. Non-finite trial points are
/// treated as failed backtracks; a non-finite gradient at an accepted point
/// ends the run with converged = false.
///
/// Throws OptimizationError if the objective is not finite at the initial point.
MinimizeResult minimize(const MinimizeProblem& problem);

/// Runs minimize from every start and returns the lowest finite result.
/// Starts whose initial objective is not finite are skipped.
/// Throws OptimizationError when no start survives, std::invalid_argument when `starts` is empty.
MinimizeResult multistart_minimize(const Objective& objective,
                                   std::span<const Eigen::VectorXd> starts,
                                   const MinimizeSettings& settings = {});

} // namespace lwucb
