#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lwucb {

/// Context vector attached to an arm.
using Context = Eigen::VectorXd;

/// Append-only sequence of (context, reward) observations of fixed dimension.
class History {
public:
    explicit History(Eigen::Index dim);

    /// Throws std::invalid_argument on dimension mismatch or non-finite values.
    void append(const Context& x, double reward);

    Eigen::Index dim() const noexcept { return dim_; }
    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(rewards_.size()); }
    bool empty() const noexcept { return rewards_.empty(); }

    /// N x d matrix of contexts, row i is the i-th observation.
    Eigen::MatrixXd inputs() const;
    Eigen::VectorXd rewards() const;

    Context context(Eigen::Index i) const;
    double reward(Eigen::Index i) const { return rewards_.at(static_cast<std::size_t>(i)); }

private:
    Eigen::Index dim_;
    std::vector<double> coords_;
    std::vector<double> rewards_;
};

/// Finite collection of M arms, each with a d-dimensional context and a unique id.
class CandidateSet {
public:
    /// Ids default to "0", "1", ... "M-1".
    explicit CandidateSet(Eigen::MatrixXd contexts);
    CandidateSet(Eigen::MatrixXd contexts, std::vector<std::string> ids);

    Eigen::Index size() const noexcept { return contexts_.rows(); }
    Eigen::Index dim() const noexcept { return contexts_.cols(); }

    const Eigen::MatrixXd& contexts() const noexcept { return contexts_; }
    Context context(Eigen::Index i) const { return contexts_.row(i).transpose(); }

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    const std::string& id(Eigen::Index i) const { return ids_.at(static_cast<std::size_t>(i)); }
    std::optional<Eigen::Index> index_of(const std::string& id) const;

    /// Same arms with every context dimension mapped affinely onto [0, 1]
    /// using the bounding box of the set. Constant dimensions map to 0.
    CandidateSet normalized() const;

private:
    Eigen::MatrixXd contexts_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, Eigen::Index> lookup_;
};

} // namespace lwucb
