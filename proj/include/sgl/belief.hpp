#pragma once

#include "sgl/likelihood.hpp"
#include "sgl/types.hpp"

#include <span>

namespace sgl {

enum class BeliefKind { posterior, intermediate };

/// Agent beliefs stored as log-probabilities, one row per agent.
struct BeliefMatrix {
    Matrix log_values;
    BeliefKind kind = BeliefKind::posterior;

    Index agents() const { return log_values.rows(); }
    int states() const { return static_cast<int>(log_values.cols()); }
    Matrix probabilities() const { return log_values.array().exp().matrix(); }
};

namespace detail {

/// Subtract the row-wise log-sum-exp in place.
inline void normalize_log_rows(Matrix& m) {
    for (Index k = 0; k < m.rows(); ++k) {
        const double peak = m.row(k).maxCoeff();
        const double lse = peak + std::log((m.row(k).array() - peak).exp().sum());
        m.row(k).array() -= lse;
    }
}

} // namespace detail

inline BeliefMatrix uniform_beliefs(Index agents, int states) {
    detail::require(agents >= 1 && states >= 2, "uniform_beliefs: bad dimensions");
    return {Matrix::Constant(agents, states, -std::log(static_cast<double>(states))), BeliefKind::posterior};
}

/// Adapt stage: log psi_k = delta * log L_k(z_k | .) + (1 - delta) * log mu_k, renormalized.
inline BeliefMatrix adapt_step(const BeliefMatrix& prior, std::span<const Index> observations,
                               const LikelihoodModel& model, double delta) {
    detail::require(delta > 0.0 && delta <= 1.0, "adapt_step: delta must lie in (0, 1]");
    detail::require(prior.agents() == model.agents() && prior.states() == model.states(),
                    "adapt_step: belief/model dimension mismatch");
    detail::require(static_cast<Index>(observations.size()) == model.agents(), "adapt_step: one observation per agent");
    BeliefMatrix psi{Matrix(prior.agents(), prior.states()), BeliefKind::intermediate};
    for (Index k = 0; k < prior.agents(); ++k) {
        const Index z = observations[static_cast<std::size_t>(k)];
        detail::require(z >= 0 && z < model.signals(k), "adapt_step: observation outside signal space");
        psi.log_values.row(k) = delta * model.log_beta(k).row(z) + (1.0 - delta) * prior.log_values.row(k);
    }
    detail::normalize_log_rows(psi.log_values);
    return psi;
}

/// Combine stage: log mu_k = sum_l a_lk log psi_l, renormalized. A weighted
/// geometric mean of the neighbours' intermediate beliefs.
inline BeliefMatrix combine_step(const BeliefMatrix& psi, const CombinationMatrix& combination) {
    detail::require(psi.agents() == combination.agents(), "combine_step: dimension mismatch");
    BeliefMatrix mu{combination.weights().transpose() * psi.log_values, BeliefKind::posterior};
    detail::normalize_log_rows(mu.log_values);
    return mu;
}

/// Argmax over states; ties go to the lowest index.
inline int estimate_state(const Eigen::Ref<const Eigen::RowVectorXd>& log_belief_row) {
    int best = 0;
    for (Index t = 1; t < log_belief_row.size(); ++t)
        if (log_belief_row[t] > log_belief_row[best]) best = static_cast<int>(t);
    return best;
}

} // namespace sgl
