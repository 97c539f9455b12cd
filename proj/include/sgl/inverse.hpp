#pragma once

#include "sgl/belief.hpp"
#include "sgl/likelihood.hpp"
#include "sgl/types.hpp"

#include <map>
#include <optional>

namespace sgl {

/// Public log-belief ratios: entry (k, j) = log psi_k(reference) - log psi_k(theta_j).
inline LogRatioMatrix compute_lambda(const BeliefMatrix& psi, int reference = 0) {
    const HypothesisSet hyp(psi.states(), reference);
    LogRatioMatrix out{Matrix(psi.agents(), hyp.ratio_columns()), RatioKind::belief};
    for (int j = 0; j < hyp.ratio_columns(); ++j)
        out.values.col(j) = psi.log_values.col(reference) - psi.log_values.col(hyp.state_of_column(j));
    return out;
}

/// Network-level state estimate: each agent votes for its argmax, the modal
/// state wins; both ties go to the lowest index.
inline int majority_vote(const BeliefMatrix& psi) {
    std::vector<int> votes(static_cast<std::size_t>(psi.states()), 0);
    for (Index k = 0; k < psi.agents(); ++k) ++votes[static_cast<std::size_t>(estimate_state(psi.log_values.row(k)))];
    int best = 0;
    for (int t = 1; t < psi.states(); ++t)
        if (votes[static_cast<std::size_t>(t)] > votes[static_cast<std::size_t>(best)]) best = t;
    return best;
}

enum class StateMode { known, estimated };

/// Running estimate of the combination matrix. The estimate is
/// unconstrained (no projection onto stochastic matrices).
struct OglState {
    Matrix estimate;     // N x N
    Matrix prev_lambda;  // N x (|states| - 1)
    double mu = 0.01;
    double delta = 0.05;
    StateMode mode = StateMode::known;

    /// Zero estimate; the previous ratio matrix is that of the uniform prior.
    static OglState initial(Index agents, int states, double mu, double delta, StateMode mode = StateMode::known) {
        detail::require(agents >= 1 && states >= 2, "OglState: bad dimensions");
        detail::require(mu >= 0.0, "OglState: learning rate must be nonnegative");
        detail::require(delta > 0.0 && delta < 1.0, "OglState: delta must lie in (0, 1)");
        return {Matrix::Zero(agents, agents), Matrix::Zero(agents, states - 1), mu, delta, mode};
    }
};

/// Residual Lambda_i - (1 - delta) A^T Lambda_{i-1} - delta * Lbar.
inline Matrix ogl_residual(const Matrix& estimate, const Matrix& lambda, const Matrix& prev_lambda,
                           const Matrix& lbar, double delta) {
    detail::require(estimate.rows() == estimate.cols() && estimate.rows() == lambda.rows(),
                    "ogl: estimate/lambda dimension mismatch");
    detail::require(lambda.rows() == prev_lambda.rows() && lambda.cols() == prev_lambda.cols() &&
                        lambda.rows() == lbar.rows() && lambda.cols() == lbar.cols(),
                    "ogl: ratio matrix dimension mismatch");
    return lambda - (1.0 - delta) * (estimate.transpose() * prev_lambda) - delta * lbar;
}

/// Instantaneous loss 0.5 * ||residual||_F^2.
inline double ogl_loss(const Matrix& estimate, const Matrix& lambda, const Matrix& prev_lambda, const Matrix& lbar,
                       double delta) {
    return 0.5 * ogl_residual(estimate, lambda, prev_lambda, lbar, delta).squaredNorm();
}

/// One stochastic-gradient step:
///   A_i^T = A_{i-1}^T + mu (1 - delta) R Lambda_{i-1}^T,
/// then Lambda_i becomes the stored previous ratio matrix.
inline void ogl_update_in_place(OglState& state, const LogRatioMatrix& lambda, const LogRatioMatrix& lbar) {
    const Matrix residual = ogl_residual(state.estimate, lambda.values, state.prev_lambda, lbar.values, state.delta);
    state.estimate.noalias() += (state.mu * (1.0 - state.delta)) * (state.prev_lambda * residual.transpose());
    state.prev_lambda = lambda.values;
}

inline OglState ogl_update(OglState state, const LogRatioMatrix& lambda, const LogRatioMatrix& lbar) {
    ogl_update_in_place(state, lambda, lbar);
    return state;
}

/// Squared Frobenius deviation ||A_true - A_est||_F^2.
inline double msd(const Matrix& estimate, const Matrix& truth) {
    detail::require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols(), "msd: dimension mismatch");
    return (truth - estimate).squaredNorm();
}

/// Observer pipeline: public snapshots in, graph estimate out. In known mode
/// the caller supplies the true state; in estimated mode it comes from the
/// majority vote over the same snapshot.
class OnlineGraphLearner {
public:
    OnlineGraphLearner(const LikelihoodModel& model, double mu, double delta, StateMode mode, int reference = 0)
        : model_(&model),
          reference_(reference),
          state_(OglState::initial(model.agents(), model.states(), mu, delta, mode)) {}

    /// Returns the state whose mean likelihood matrix was used.
    int observe(const BeliefMatrix& psi, std::optional<int> known_state = std::nullopt) {
        int used = 0;
        if (state_.mode == StateMode::known) {
            detail::require(known_state.has_value(), "known-state mode requires the true state");
            used = *known_state;
        } else {
            used = majority_vote(psi);
        }
        ogl_update_in_place(state_, compute_lambda(psi, reference_), mean_likelihood(used));
        return used;
    }

    const OglState& state() const { return state_; }
    const Matrix& estimate() const { return state_.estimate; }

    const LogRatioMatrix& mean_likelihood(int s) {
        auto it = cache_.find(s);
        if (it == cache_.end()) it = cache_.emplace(s, mean_likelihood_matrix(*model_, s, reference_)).first;
        return it->second;
    }

private:
    const LikelihoodModel* model_;
    int reference_ = 0;
    OglState state_;
    std::map<int, LogRatioMatrix> cache_;
};

} // namespace sgl
