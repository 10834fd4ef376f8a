#pragma once

#include "drutil/types.hpp"

namespace drutil {

inline constexpr double kDistanceFloor = 1e-12;

struct KnnRatioResult {
    Index k = 1;
    // r(x_i) = (m / (n - 1)) * (B_syn / B_obs)^d for each observed row.
    Vector values;
    // log of `values`; stays finite where `values` would overflow.
    Vector log_values;
    double kl = 0.0;
    // Neighbor distances that were raised to the floor (duplicate rows).
    Index floored = 0;
};

// k-th nearest neighbor distances of each observed row within the other
// observed rows (`obs`) and within the synthetic rows (`syn`).
struct KnnDistances {
    Vector obs;
    Vector syn;
};

KnnDistances knn_distances(const Matrix& observed, const Matrix& synthetic, Index k);

KnnRatioResult knn_density_ratio(const Matrix& observed, const Matrix& synthetic, Index k);

// Mean of log r over the observed rows.
double kl_divergence_knn(const Matrix& observed, const Matrix& synthetic, Index k);

// The ratio at arbitrary query points (not members of either sample):
// (m / n) * (B_syn / B_obs)^d with both k-th neighbor distances taken in full.
Vector knn_ratio_at(const Matrix& observed, const Matrix& synthetic, const Matrix& queries, Index k);

// round(sqrt(n)), at least 1.
Index default_k(Index n);

}  // namespace drutil
