#pragma once

#include "drutil/random.hpp"
#include "drutil/types.hpp"

#include <cstdint>
#include <vector>

namespace drutil {

// Gaussian kernel basis: width `sigma` around each row of `centers`.
struct KernelConfig {
    Matrix centers;
    double sigma = 1.0;
};

// Cross-validation grid. Sigmas ascend, lambdas descend.
struct Grid {
    std::vector<double> sigmas;
    std::vector<double> lambdas;
};

// Entry (i, j) is the squared Euclidean distance between A.row(i) and B.row(j).
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);

// exp(-D / (2 sigma^2)), entrywise.
Matrix gaussian_kernel(const Matrix& sq_dist, double sigma);

// Sample quantile with linear interpolation between order statistics
// (the "type 7" definition). `values` is taken by value and reordered.
double quantile(std::vector<double> values, double level);

inline constexpr int kSigmaGridSize = 10;
inline constexpr int kLambdaGridSize = 20;

// Ten widths sqrt(q/2) from the 0.05, 0.15, ..., 0.95 quantiles of the
// positive squared distances. Ties are separated by a 1e-6 relative bump so
// the grid is strictly increasing.
std::vector<double> sigma_grid(const Matrix& sq_dist);

// 20 log-spaced values from 1e3 down to 1e-3.
std::vector<double> lambda_grid();

// `count` distinct rows drawn uniformly without replacement.
Matrix sample_centers(const Matrix& data, Index count, std::uint64_t seed);
Matrix sample_centers(const Matrix& data, Index count, Rng& rng);

// Design matrix [1, K(x, c_1), ..., K(x, c_b)] for the ratio model.
Matrix kernel_basis(const Matrix& x, const KernelConfig& kernel);
Matrix kernel_basis_from_distances(const Matrix& sq_dist, double sigma);

}  // namespace drutil
