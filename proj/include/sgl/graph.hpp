#pragma once

#include "sgl/random.hpp"
#include "sgl/types.hpp"

namespace sgl {

struct ErdosRenyiDraw {
    Mask adjacency;
    int attempts = 0;
};

/// Directed Erdos-Renyi mask with every self-loop set, conditioned on strong
/// connectivity by redrawing from the same stream.
inline ErdosRenyiDraw gen_erdos_renyi(Index n, double p, Seed seed, int max_attempts = 1000) {
    detail::require(n >= 1, "need at least one agent");
    detail::require(p > 0.0 && p <= 1.0, "edge probability must lie in (0, 1]");
    detail::require(max_attempts >= 1, "max_attempts must be positive");

    Rng rng(seed);
    Mask mask(n, n);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        for (Index l = 0; l < n; ++l) {
            for (Index k = 0; k < n; ++k) {
                if (l == k) {
                    mask(l, k) = true;
                } else {
                    mask(l, k) = rng.uniform() < p;
                }
            }
        }
        if (strongly_connected(mask)) return {mask, attempt};
    }
    throw GenerationError("no strongly connected Erdos-Renyi graph after " + std::to_string(max_attempts) +
                          " attempts (edge probability too small for n=" + std::to_string(n) + ")");
}

/// Uniform(0,1) weight on every arc of the mask, each column normalized.
inline CombinationMatrix random_combination_weights(const Mask& adjacency, Seed seed) {
    const Index n = adjacency.rows();
    detail::require(n >= 1 && adjacency.cols() == n, "adjacency must be square");
    Rng rng(seed);
    Matrix w = Matrix::Zero(n, n);
    for (Index k = 0; k < n; ++k) {
        for (Index l = 0; l < n; ++l)
            if (adjacency(l, k)) w(l, k) = rng.uniform_open();
        const double total = w.col(k).sum();
        if (total <= 0.0) throw InvalidArgument("agent " + std::to_string(k) + " has no neighbours");
        w.col(k) /= total;
    }
    return CombinationMatrix(std::move(w));
}

/// Erdos-Renyi graph plus random weights; the two draws use separate seeds.
inline CombinationMatrix random_combination_matrix(Index n, double p, Seed graph_seed, Seed weight_seed,
                                                   int max_attempts = 1000) {
    return random_combination_weights(gen_erdos_renyi(n, p, graph_seed, max_attempts).adjacency, weight_seed);
}

} // namespace sgl
