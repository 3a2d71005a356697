#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lwucb {

// Dimension mismatches, empty inputs and out-of-range parameters are reported
// with std::invalid_argument. Everything below is specific to this library.

/// Cholesky factorization failed even after jitter escalation.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every optimizer start produced a non-finite objective.
class OptimizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No restart of the hyperparameter search produced a finite NLML.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A non-finite acquisition score reached arm selection.
class SelectionError : public std::runtime_error {
public:
    SelectionError(const std::string& what, std::size_t arm)
        : std::runtime_error(what), arm_(arm) {}

    std::size_t arm() const noexcept { return arm_; }

private:
    std::size_t arm_;
};

/// Snapshot CSV could not be parsed. line() is 1-based, 0 when not tied to a line.
class IngestionError : public std::runtime_error {
public:
    IngestionError(const std::string& what, std::size_t line)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Filesystem failure while persisting or reading result bundles.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace lwucb
