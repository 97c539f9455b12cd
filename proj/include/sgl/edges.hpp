#pragma once

#include "sgl/types.hpp"

#include <variant>

namespace sgl {

struct Threshold {
    double tau = 0.0;
};

/// One-dimensional 2-means over all entries, seeded at the extremes.
struct TwoMeans {
    int max_iterations = 100;
};

using EdgeMethod = std::variant<Threshold, TwoMeans>;

struct TwoMeansSplit {
    double lower_center = 0.0;
    double upper_center = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

/// Lloyd iterations on scalars; x goes to the upper cluster when it is
/// strictly closer to the upper center.
inline TwoMeansSplit two_means(const Matrix& values, int max_iterations, Mask& upper) {
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (!(hi > lo)) throw NoSeparation("all entries equal; two-means has nothing to separate");

    TwoMeansSplit split{lo, hi, 0, false};
    upper = Mask::Constant(values.rows(), values.cols(), false);
    for (int it = 1; it <= max_iterations; ++it) {
        Mask next(values.rows(), values.cols());
        double sum_lo = 0.0, sum_hi = 0.0;
        Index n_lo = 0, n_hi = 0;
        for (Index i = 0; i < values.size(); ++i) {
            const double x = values.data()[i];
            const bool up = std::abs(x - split.upper_center) < std::abs(x - split.lower_center);
            next.data()[i] = up;
            if (up) {
                sum_hi += x;
                ++n_hi;
            } else {
                sum_lo += x;
                ++n_lo;
            }
        }
        split.iterations = it;
        const bool unchanged = it > 1 && next == upper;
        upper = std::move(next);
        if (n_lo == 0 || n_hi == 0) throw NoSeparation("two-means collapsed to a single cluster");
        split.lower_center = sum_lo / static_cast<double>(n_lo);
        split.upper_center = sum_hi / static_cast<double>(n_hi);
        if (unchanged) {
            split.converged = true;
            break;
        }
    }
    return split;
}

} // namespace detail

/// Recovers an adjacency mask from an estimated weight matrix.
inline Mask classify_edges(const Matrix& estimate, const EdgeMethod& method) {
    detail::require(estimate.size() > 0 && estimate.allFinite(), "classify_edges: estimate must be finite");
    if (const auto* t = std::get_if<Threshold>(&method)) return (estimate.array() > t->tau).matrix();
    Mask upper;
    detail::two_means(estimate, std::get<TwoMeans>(method).max_iterations, upper);
    return upper;
}

/// Fraction of entries where the two masks agree.
inline double edge_accuracy(const Mask& estimate, const Mask& truth) {
    detail::require(estimate.rows() == truth.rows() && estimate.cols() == truth.cols(),
                    "edge_accuracy: dimension mismatch");
    Index agree = 0;
    for (Index i = 0; i < truth.size(); ++i) agree += estimate.data()[i] == truth.data()[i];
    return static_cast<double>(agree) / static_cast<double>(truth.size());
}

} // namespace sgl
