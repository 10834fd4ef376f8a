#include "drutil/kernels.hpp"

#include "drutil/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drutil {

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw InputError("pairwise_sq_distances: column counts differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()) + ")");
    Matrix d(a.rows(), b.rows());
    // column-major: fill one column (one row of B) at a time
    for (Index j = 0; j < b.rows(); ++j) {
        d.col(j) = (a.rowwise() - b.row(j)).rowwise().squaredNorm();
    }
    return d;
}

Matrix gaussian_kernel(const Matrix& sq_dist, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw UsageError("gaussian_kernel: sigma must be positive");
    const double scale = -1.0 / (2.0 * sigma * sigma);
    return (sq_dist.array() * scale).exp().matrix();
}

double quantile(std::vector<double> values, double level) {
    if (values.empty()) throw InputError("quantile of an empty set");
    const double h = (static_cast<double>(values.size()) - 1.0) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double x_lo = values[lo];
    if (lo + 1 >= values.size() || frac == 0.0) return x_lo;
    const double x_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return x_lo + frac * (x_hi - x_lo);
}

std::vector<double> sigma_grid(const Matrix& sq_dist) {
    std::vector<double> positive;
    positive.reserve(static_cast<std::size_t>(sq_dist.size()));
    for (Index i = 0; i < sq_dist.size(); ++i) {
        const double v = sq_dist.data()[i];
        if (v > 0.0) positive.push_back(v);
    }
    if (positive.empty()) throw InputError("sigma_grid: all distances are zero");

    std::vector<double> grid(kSigmaGridSize);
    for (int k = 0; k < kSigmaGridSize; ++k) {
        const double level = 0.05 + 0.1 * k;
        grid[static_cast<std::size_t>(k)] = std::sqrt(quantile(positive, level) / 2.0);
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (grid[k] <= grid[k - 1]) grid[k] = grid[k - 1] * (1.0 + 1e-6);
    }
    return grid;
}

std::vector<double> lambda_grid() {
    std::vector<double> grid(kLambdaGridSize);
    for (int k = 0; k < kLambdaGridSize; ++k) {
        grid[static_cast<std::size_t>(k)] = std::pow(10.0, 3.0 - 6.0 * k / (kLambdaGridSize - 1));
    }
    return grid;
}

Matrix sample_centers(const Matrix& data, Index count, Rng& rng) {
    if (count < 1 || count > data.rows())
        throw UsageError("sample_centers: need 1 <= b <= n (b=" + std::to_string(count) +
                         ", n=" + std::to_string(data.rows()) + ")");
    std::vector<Index> idx(static_cast<std::size_t>(data.rows()));
    std::iota(idx.begin(), idx.end(), Index{0});
    // partial Fisher-Yates: first `count` slots hold the sample
    for (Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<Index> pick(i, data.rows() - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    Matrix out(count, data.cols());
    for (Index i = 0; i < count; ++i) out.row(i) = data.row(idx[static_cast<std::size_t>(i)]);
    return out;
}

Matrix sample_centers(const Matrix& data, Index count, std::uint64_t seed) {
    Rng rng(seed);
    return sample_centers(data, count, rng);
}

Matrix kernel_basis_from_distances(const Matrix& sq_dist, double sigma) {
    Matrix phi(sq_dist.rows(), sq_dist.cols() + 1);
    phi.col(0).setOnes();
    phi.rightCols(sq_dist.cols()) = gaussian_kernel(sq_dist, sigma);
    return phi;
}

Matrix kernel_basis(const Matrix& x, const KernelConfig& kernel) {
    return kernel_basis_from_distances(pairwise_sq_distances(x, kernel.centers), kernel.sigma);
}

}  // namespace drutil
