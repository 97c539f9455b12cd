#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgl {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Seed = std::uint64_t;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input to an operation (shape mismatch, out-of-range parameter).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A rejection-sampling generator exhausted its attempt budget.
class GenerationError : public Error {
public:
    using Error::Error;
};

/// Two-means edge classification found a single cluster.
class NoSeparation : public Error {
public:
    using Error::Error;
};

class InsufficientSamples : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

} // namespace detail

/// Hypotheses are indexed 0..count-1. Ratio columns enumerate every state
/// except the reference, in ascending order.
struct HypothesisSet {
    int count = 2;
    int reference = 0;

    HypothesisSet() = default;
    HypothesisSet(int n, int ref = 0) : count(n), reference(ref) {
        detail::require(n >= 2, "hypothesis set needs at least two states");
        detail::require(ref >= 0 && ref < n, "reference state out of range");
    }

    int ratio_columns() const { return count - 1; }

    /// State index of ratio column j.
    int state_of_column(int j) const { return j < reference ? j : j + 1; }

    std::vector<int> ratio_states() const {
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(count - 1));
        for (int j = 0; j < count - 1; ++j) out.push_back(state_of_column(j));
        return out;
    }
};

enum class RatioKind { belief, likelihood, mean_likelihood };

/// N x (|states| - 1) log-ratio matrix, column j against the reference state.
struct LogRatioMatrix {
    Matrix values;
    RatioKind kind = RatioKind::belief;

    Index agents() const { return values.rows(); }
    Index columns() const { return values.cols(); }
};

/// Per-agent categorical likelihoods. beta[k](z, theta) is the probability
/// that agent k observes signal z under state theta.
class LikelihoodModel {
public:
    LikelihoodModel() = default;

    LikelihoodModel(std::vector<Matrix> beta, double floor) : beta_(std::move(beta)), floor_(floor) {
        detail::require(!beta_.empty(), "likelihood model needs at least one agent");
        detail::require(floor_ > 0.0, "likelihood floor must be positive");
        const Index states = beta_.front().cols();
        detail::require(states >= 2, "likelihood model needs at least two states");
        log_beta_.reserve(beta_.size());
        for (const auto& b : beta_) {
            detail::require(b.cols() == states, "all agents must share the hypothesis set");
            detail::require(b.rows() >= 1, "empty signal space");
            for (Index t = 0; t < states; ++t) {
                detail::require(std::abs(b.col(t).sum() - 1.0) <= 1e-12,
                                "likelihood column does not sum to one");
                detail::require(b.col(t).minCoeff() >= floor_ * (1.0 - 1e-12),
                                "likelihood entry below floor");
            }
            log_beta_.push_back(b.array().log().matrix());
        }
    }

    Index agents() const { return static_cast<Index>(beta_.size()); }
    int states() const { return static_cast<int>(beta_.front().cols()); }
    Index signals(Index k) const { return beta_[static_cast<std::size_t>(k)].rows(); }
    double floor() const { return floor_; }

    const Matrix& beta(Index k) const { return beta_[static_cast<std::size_t>(k)]; }
    const Matrix& log_beta(Index k) const { return log_beta_[static_cast<std::size_t>(k)]; }
    const std::vector<Matrix>& tables() const { return beta_; }

    /// Bound on |log beta/beta'| implied by the floor for agent k.
    double log_ratio_bound(Index k) const {
        const double n = static_cast<double>(signals(k));
        return std::log((1.0 - (n - 1.0) * floor_) / floor_);
    }

private:
    std::vector<Matrix> beta_;
    std::vector<Matrix> log_beta_;
    double floor_ = 0.0;
};

bool strongly_connected(const Mask& adjacency);

/// Left-stochastic weights: entry (l, k) is the weight agent k gives to l,
/// every column sums to one.
class CombinationMatrix {
public:
    CombinationMatrix() = default;

    explicit CombinationMatrix(Matrix weights) : weights_(std::move(weights)) {
        const Index n = weights_.rows();
        detail::require(n >= 1 && weights_.cols() == n, "combination matrix must be square");
        detail::require(weights_.allFinite() && weights_.minCoeff() >= 0.0,
                        "combination weights must be finite and nonnegative");
        for (Index k = 0; k < n; ++k)
            detail::require(std::abs(weights_.col(k).sum() - 1.0) <= 1e-12,
                            "combination matrix column does not sum to one");
        adjacency_ = (weights_.array() > 0.0).matrix();
        detail::require(adjacency_.diagonal().any(), "combination matrix needs a self-loop");
        detail::require(strongly_connected(adjacency_), "combination graph is not strongly connected");
    }

    Index agents() const { return weights_.rows(); }
    const Matrix& weights() const { return weights_; }
    const Mask& adjacency() const { return adjacency_; }

private:
    Matrix weights_;
    Mask adjacency_;
};

namespace detail {

inline std::vector<bool> reachable(const Mask& adj, Index start, bool forward) {
    const Index n = adj.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Index> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (Index v = 0; v < n; ++v) {
            const bool arc = forward ? adj(u, v) : adj(v, u);
            if (arc && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

} // namespace detail

/// Every node reaches and is reached from node 0 along arcs l -> k where
/// adjacency(l, k) holds.
inline bool strongly_connected(const Mask& adjacency) {
    if (adjacency.rows() != adjacency.cols() || adjacency.rows() == 0) return false;
    for (bool forward : {true, false}) {
        const auto seen = detail::reachable(adjacency, 0, forward);
        for (bool s : seen)
            if (!s) return false;
    }
    return true;
}

} // namespace sgl
