#include "lwucb/types.hpp"

#include <cmath>
#include <stdexcept>

namespace lwucb {

History::History(Eigen::Index dim) : dim_(dim)
{
    if (dim < 1)
        throw std::invalid_argument("History: context dimension must be >= 1");
}

void History::append(const Context& x, double reward)
{
    if (x.size() != dim_)
        throw std::invalid_argument("History: context dimension " + std::to_string(x.size())
                                    + " does not match " + std::to_string(dim_));
    if (!x.allFinite() || !std::isfinite(reward))
        throw std::invalid_argument("History: non-finite observation");
    coords_.insert(coords_.end(), x.data(), x.data() + x.size());
    rewards_.push_back(reward);
}

Eigen::MatrixXd History::inputs() const
{
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajor>(coords_.data(), size(), dim_);
}

Eigen::VectorXd History::rewards() const
{
    return Eigen::Map<const Eigen::VectorXd>(rewards_.data(), size());
}

Context History::context(Eigen::Index i) const
{
    if (i < 0 || i >= size())
        throw std::out_of_range("History: index out of range");
    return Eigen::Map<const Eigen::VectorXd>(coords_.data() + i * dim_, dim_);
}

namespace {

std::vector<std::string> default_ids(Eigen::Index m)
{
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        ids.push_back(std::to_string(i));
    return ids;
}

} // namespace

CandidateSet::CandidateSet(Eigen::MatrixXd contexts)
    : CandidateSet(contexts, default_ids(contexts.rows()))
{
}

CandidateSet::CandidateSet(Eigen::MatrixXd contexts, std::vector<std::string> ids)
    : contexts_(std::move(contexts)), ids_(std::move(ids))
{
    if (contexts_.rows() < 1 || contexts_.cols() < 1)
        throw std::invalid_argument("CandidateSet: need at least one arm of dimension >= 1");
    if (static_cast<Eigen::Index>(ids_.size()) != contexts_.rows())
        throw std::invalid_argument("CandidateSet: id count does not match context count");
    if (!contexts_.allFinite())
        throw std::invalid_argument("CandidateSet: non-finite context coordinate");
    lookup_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!lookup_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second)
            throw std::invalid_argument("CandidateSet: duplicate arm id '" + ids_[i] + "'");
    }
}

std::optional<Eigen::Index> CandidateSet::index_of(const std::string& id) const
{
    auto it = lookup_.find(id);
    if (it == lookup_.end())
        return std::nullopt;
    return it->second;
}

CandidateSet CandidateSet::normalized() const
{
    Eigen::RowVectorXd lo = contexts_.colwise().minCoeff();
    Eigen::RowVectorXd span = contexts_.colwise().maxCoeff() - lo;
    Eigen::MatrixXd out = contexts_.rowwise() - lo;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        if (span(j) > 0.0)
            out.col(j) /= span(j);
        else
            out.col(j).setZero();
    }
    return CandidateSet(std::move(out), ids_);
}

} // namespace lwucb
