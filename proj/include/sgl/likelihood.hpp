#pragma once

#include "sgl/random.hpp"
#include "sgl/types.hpp"

#include <functional>
#include <span>
#include <utility>

namespace sgl {

/// KL(p || q) in nats. Both inputs must be strictly positive distributions.
inline double kl_divergence(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q) {
    detail::require(p.size() == q.size(), "kl_divergence: length mismatch");
    detail::require(p.size() > 0, "kl_divergence: empty distribution");
    double total = 0.0;
    for (Index z = 0; z < p.size(); ++z) {
        detail::require(p[z] > 0.0 && q[z] > 0.0, "kl_divergence: nonpositive entry");
        total += p[z] * (std::log(p[z]) - std::log(q[z]));
    }
    return total < 0.0 ? 0.0 : total;
}

/// Ordered state pairs (theta, theta') that no agent distinguishes by more
/// than kl_min.
inline std::vector<std::pair<int, int>> unidentifiable_pairs(const LikelihoodModel& model, double kl_min) {
    std::vector<std::pair<int, int>> out;
    const int states = model.states();
    for (int a = 0; a < states; ++a) {
        for (int b = 0; b < states; ++b) {
            if (a == b) continue;
            bool separated = false;
            for (Index k = 0; k < model.agents() && !separated; ++k)
                separated = kl_divergence(model.beta(k).col(a), model.beta(k).col(b)) > kl_min;
            if (!separated) out.emplace_back(a, b);
        }
    }
    return out;
}

/// Draws one categorical column of the given size, before flooring.
using ColumnSampler = std::function<Vector(Rng&, Index)>;

/// Normalized independent uniforms.
inline Vector normalized_uniform_column(Rng& rng, Index size) {
    Vector v(size);
    for (Index z = 0; z < size; ++z) v[z] = rng.uniform_open();
    return v / v.sum();
}

struct LikelihoodOptions {
    double floor = 0.01;
    double kl_min = 1e-3;
    int max_attempts = 1000;
};

namespace detail {

/// Mixes a distribution with the uniform floor so that every entry is at
/// least `floor` and the column still sums to one.
inline Vector apply_floor(const Vector& q, double floor) {
    const double n = static_cast<double>(q.size());
    Vector out = (q / q.sum()) * (1.0 - n * floor);
    out.array() += floor;
    return out / out.sum();
}

inline Matrix draw_agent_table(Rng& rng, const ColumnSampler& sampler, Index signals, int states, double floor) {
    Matrix table(signals, states);
    for (int t = 0; t < states; ++t) table.col(t) = apply_floor(sampler(rng, signals), floor);
    return table;
}

} // namespace detail

/// Random likelihood tables satisfying the floor and identifiability
/// constraints. Agents are redrawn one at a time while some state pair stays
/// indistinguishable.
inline LikelihoodModel gen_likelihoods(int states, std::span<const Index> signal_sizes, Seed seed,
                                       const LikelihoodOptions& options = {},
                                       const ColumnSampler& sampler = normalized_uniform_column) {
    detail::require(states >= 2, "need at least two states");
    detail::require(!signal_sizes.empty(), "need at least one agent");
    detail::require(options.floor > 0.0, "floor must be positive");
    detail::require(options.max_attempts >= 1, "max_attempts must be positive");
    for (Index s : signal_sizes) {
        detail::require(s >= 2, "every agent needs at least two signals");
        detail::require(options.floor * static_cast<double>(s) < 1.0, "floor too large for signal space");
    }

    Rng rng(seed);
    const Index n = static_cast<Index>(signal_sizes.size());
    std::vector<Matrix> tables;
    tables.reserve(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k)
        tables.push_back(detail::draw_agent_table(rng, sampler, signal_sizes[static_cast<std::size_t>(k)], states,
                                                  options.floor));

    for (int attempt = 1;; ++attempt) {
        LikelihoodModel model(tables, options.floor);
        if (unidentifiable_pairs(model, options.kl_min).empty()) return model;
        if (attempt >= options.max_attempts)
            throw GenerationError("likelihood model not identifiable after " + std::to_string(attempt) +
                                  " attempts (kl_min too large?)");
        const Index k = rng.below(n);
        tables[static_cast<std::size_t>(k)] = detail::draw_agent_table(
            rng, sampler, signal_sizes[static_cast<std::size_t>(k)], states, options.floor);
    }
}

inline LikelihoodModel gen_likelihoods(Index agents, int states, Index signals, Seed seed,
                                       const LikelihoodOptions& options = {}) {
    const std::vector<Index> sizes(static_cast<std::size_t>(agents), signals);
    return gen_likelihoods(states, sizes, seed, options);
}

/// Private log-likelihood ratios for one round of signals:
/// entry (k, j) = log L_k(z_k | reference) - log L_k(z_k | theta_j).
inline LogRatioMatrix log_likelihood_ratio_matrix(const LikelihoodModel& model, std::span<const Index> observations,
                                                  int reference = 0) {
    const HypothesisSet hyp(model.states(), reference);
    detail::require(static_cast<Index>(observations.size()) == model.agents(), "one observation per agent required");
    LogRatioMatrix out{Matrix(model.agents(), hyp.ratio_columns()), RatioKind::likelihood};
    for (Index k = 0; k < model.agents(); ++k) {
        const Index z = observations[static_cast<std::size_t>(k)];
        if (z < 0 || z >= model.signals(k))
            throw InvalidArgument("observation outside signal space of agent " + std::to_string(k));
        const auto& lb = model.log_beta(k);
        for (int j = 0; j < hyp.ratio_columns(); ++j)
            out.values(k, j) = lb(z, reference) - lb(z, hyp.state_of_column(j));
    }
    return out;
}

/// Expected log-likelihood ratios when signals are generated under `state`:
/// entry (k, j) = KL(L_k(state) || L_k(theta_j)) - KL(L_k(state) || L_k(reference)).
inline LogRatioMatrix mean_likelihood_matrix(const LikelihoodModel& model, int state, int reference = 0) {
    const HypothesisSet hyp(model.states(), reference);
    detail::require(state >= 0 && state < hyp.count, "state out of range");
    LogRatioMatrix out{Matrix(model.agents(), hyp.ratio_columns()), RatioKind::mean_likelihood};
    for (Index k = 0; k < model.agents(); ++k) {
        const auto& b = model.beta(k);
        const double to_reference = kl_divergence(b.col(state), b.col(reference));
        for (int j = 0; j < hyp.ratio_columns(); ++j)
            out.values(k, j) = kl_divergence(b.col(state), b.col(hyp.state_of_column(j))) - to_reference;
    }
    return out;
}

} // namespace sgl
