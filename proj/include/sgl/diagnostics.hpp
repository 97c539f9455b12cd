#pragma once

#include "sgl/types.hpp"

#include <Eigen/Eigenvalues>
#include <limits>

namespace sgl {

/// Second-moment sums for the steady-state bound. Merging is plain
/// addition, so accumulators from independent runs combine in any order.
class MomentAccumulator {
public:
    explicit MomentAccumulator(Index agents = 0)
        : lambda_sum_(Matrix::Zero(agents, agents)), deviation_sum_(Matrix::Zero(agents, agents)) {}

    /// Lambda_i sample; callers skip the burn-in themselves.
    void add_lambda(const Matrix& lambda) {
        check(lambda);
        lambda_sum_.noalias() += lambda * lambda.transpose();
        ++lambda_count_;
    }

    /// Private ratio sample together with its mean under the generating state.
    void add_likelihood(const Matrix& ratios, const Matrix& mean) {
        check(ratios);
        const Matrix d = ratios - mean;
        deviation_sum_.noalias() += d * d.transpose();
        ++deviation_count_;
    }

    MomentAccumulator& merge(const MomentAccumulator& other) {
        detail::require(other.agents() == agents(), "MomentAccumulator: dimension mismatch");
        lambda_sum_ += other.lambda_sum_;
        deviation_sum_ += other.deviation_sum_;
        lambda_count_ += other.lambda_count_;
        deviation_count_ += other.deviation_count_;
        return *this;
    }

    Index agents() const { return lambda_sum_.rows(); }
    long lambda_samples() const { return lambda_count_; }
    long likelihood_samples() const { return deviation_count_; }

    Matrix lambda_moment() const { return lambda_sum_ / static_cast<double>(lambda_count_); }
    Matrix likelihood_covariance() const { return deviation_sum_ / static_cast<double>(deviation_count_); }

private:
    void check(const Matrix& m) const {
        detail::require(m.rows() == agents(), "MomentAccumulator: sample has wrong agent count");
    }

    Matrix lambda_sum_;
    Matrix deviation_sum_;
    long lambda_count_ = 0;
    long deviation_count_ = 0;
};

struct TheoremDiagnostics {
    double alpha = 0.0;
    double gamma = 0.0;
    double nu = 0.0;
    double kappa = 0.0;
    Matrix r_likelihood;
    Matrix r_lambda;
    double bound = 0.0;
    bool divergent = false;
    /// mu * kappa < 2; beyond this the recursion is not mean-square stable
    /// along the dominant direction of Lambda.
    bool step_stable = true;
};

/// Steady-state MSD bound mu^2 gamma / (1 - alpha) with the O(mu^2) term of
/// alpha dropped:
///   nu = (1-delta)^2 lambda_min(R_Lambda), kappa = (1-delta)^2 lambda_max(R_Lambda),
///   alpha = 1 - 2 mu nu, gamma = delta^2 kappa N lambda_max(R_L).
inline TheoremDiagnostics theorem_diagnostics(const MomentAccumulator& moments, double delta, double mu,
                                              long min_samples = 1000) {
    detail::require(delta > 0.0 && delta < 1.0, "diagnostics: delta must lie in (0, 1)");
    detail::require(mu > 0.0, "diagnostics: mu must be positive");
    if (moments.lambda_samples() < min_samples || moments.likelihood_samples() < min_samples)
        throw InsufficientSamples("diagnostics need at least " + std::to_string(min_samples) +
                                  " samples after burn-in (have " + std::to_string(moments.lambda_samples()) + "/" +
                                  std::to_string(moments.likelihood_samples()) + ")");

    TheoremDiagnostics d;
    d.r_lambda = moments.lambda_moment();
    d.r_likelihood = moments.likelihood_covariance();
    const Eigen::SelfAdjointEigenSolver<Matrix> lambda_eig(d.r_lambda, Eigen::EigenvaluesOnly);
    const Eigen::SelfAdjointEigenSolver<Matrix> lik_eig(d.r_likelihood, Eigen::EigenvaluesOnly);
    const double scale = (1.0 - delta) * (1.0 - delta);
    d.nu = scale * lambda_eig.eigenvalues().minCoeff();
    d.kappa = scale * lambda_eig.eigenvalues().maxCoeff();
    d.alpha = 1.0 - 2.0 * mu * d.nu;
    d.gamma = delta * delta * d.kappa * static_cast<double>(moments.agents()) * lik_eig.eigenvalues().maxCoeff();
    d.step_stable = mu * d.kappa < 2.0;
    d.divergent = !(d.alpha < 1.0);
    d.bound = d.divergent ? std::numeric_limits<double>::infinity() : mu * mu * d.gamma / (1.0 - d.alpha);
    return d;
}

} // namespace sgl
