#include "drutil/knn.hpp"

#include "drutil/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace drutil {

namespace {

void check_inputs(const Matrix& observed, const Matrix& synthetic, Index k) {
    if (observed.cols() != synthetic.cols()) throw InputError("knn: column counts differ");
    if (observed.cols() < 1) throw InputError("knn: need at least one column");
    if (observed.rows() < 2) throw InputError("knn: need at least two observed rows");
    if (k < 1 || k >= observed.rows() || k > synthetic.rows())
        throw UsageError("knn: k=" + std::to_string(k) + " outside [1, min(n-1, m)]");
}

// k-th smallest squared distance from `point` to the rows of `set`, skipping
// row `skip` (or none when skip < 0).
double kth_sq_distance(const Matrix& set, const Eigen::RowVectorXd& point, Index k, Index skip,
                       std::vector<double>& scratch) {
    scratch.clear();
    for (Index j = 0; j < set.rows(); ++j) {
        if (j == skip) continue;
        scratch.push_back((set.row(j) - point).squaredNorm());
    }
    auto kth = scratch.begin() + (k - 1);
    std::nth_element(scratch.begin(), kth, scratch.end());
    return *kth;
}

}  // namespace

Index default_k(Index n) { return std::max<Index>(1, static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))))); }

KnnDistances knn_distances(const Matrix& observed, const Matrix& synthetic, Index k) {
    check_inputs(observed, synthetic, k);
    const Index n = observed.rows();
    KnnDistances out{Vector(n), Vector(n)};
#pragma omp parallel
    {
        std::vector<double> scratch;
        scratch.reserve(static_cast<std::size_t>(std::max(n, synthetic.rows())));
#pragma omp for
        for (Index i = 0; i < n; ++i) {
            const Eigen::RowVectorXd x = observed.row(i);
            out.obs(i) = std::sqrt(kth_sq_distance(observed, x, k, i, scratch));
            out.syn(i) = std::sqrt(kth_sq_distance(synthetic, x, k, -1, scratch));
        }
    }
    return out;
}

KnnRatioResult knn_density_ratio(const Matrix& observed, const Matrix& synthetic, Index k) {
    const KnnDistances dist = knn_distances(observed, synthetic, k);
    const Index n = observed.rows();
    const auto d = static_cast<double>(observed.cols());
    const double log_const = std::log(static_cast<double>(synthetic.rows()) / static_cast<double>(n - 1));

    KnnRatioResult res;
    res.k = k;
    res.values.resize(n);
    res.log_values.resize(n);
    for (Index i = 0; i < n; ++i) {
        double b_obs = dist.obs(i);
        double b_syn = dist.syn(i);
        if (b_obs < kDistanceFloor) {
            b_obs = kDistanceFloor;
            ++res.floored;
        }
        if (b_syn < kDistanceFloor) {
            b_syn = kDistanceFloor;
            ++res.floored;
        }
        res.log_values(i) = log_const + d * (std::log(b_syn) - std::log(b_obs));
        res.values(i) = std::exp(res.log_values(i));
    }
    res.kl = res.log_values.mean();
    return res;
}

double kl_divergence_knn(const Matrix& observed, const Matrix& synthetic, Index k) {
    return knn_density_ratio(observed, synthetic, k).kl;
}

Vector knn_ratio_at(const Matrix& observed, const Matrix& synthetic, const Matrix& queries, Index k) {
    if (queries.cols() != observed.cols()) throw InputError("knn_ratio_at: query column count differs");
    if (observed.cols() != synthetic.cols()) throw InputError("knn: column counts differ");
    if (k < 1 || k > observed.rows() || k > synthetic.rows())
        throw UsageError("knn_ratio_at: k=" + std::to_string(k) + " outside [1, min(n, m)]");
    const auto d = static_cast<double>(observed.cols());
    const double log_const = std::log(static_cast<double>(synthetic.rows()) / static_cast<double>(observed.rows()));
    Vector out(queries.rows());
    std::vector<double> scratch;
    for (Index i = 0; i < queries.rows(); ++i) {
        const Eigen::RowVectorXd x = queries.row(i);
        const double b_obs = std::max(std::sqrt(kth_sq_distance(observed, x, k, -1, scratch)), kDistanceFloor);
        const double b_syn = std::max(std::sqrt(kth_sq_distance(synthetic, x, k, -1, scratch)), kDistanceFloor);
        out(i) = std::exp(log_const + d * (std::log(b_syn) - std::log(b_obs)));
    }
    return out;
}

}  // namespace drutil
