#include "drutil/inference.hpp"

#include "drutil/error.hpp"
#include "drutil/random.hpp"

#include <algorithm>
#include <numeric>

namespace drutil {

double permutation_p_value(double statistic, const std::vector<double>& null_values) {
    const auto exceed = std::count_if(null_values.begin(), null_values.end(),
                                      [statistic](double v) { return v >= statistic; });
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(null_values.size()) + 1.0);
}

namespace {

Matrix gather_rows(const Matrix& m, const Index* rows, Index count) {
    Matrix out(count, m.cols());
    for (Index i = 0; i < count; ++i) out.row(i) = m.row(rows[i]);
    return out;
}

}  // namespace

PermutationTestResult permutation_test(const Matrix& numerator, const Matrix& denominator,
                                       const PermutationOptions& options) {
    if (options.permutations < 19) throw UsageError("permutation_test: need at least 19 permutations");

    PermutationTestResult res;
    res.permutations = options.permutations;
    res.seed = options.seed;
    res.reselect = options.reselect;
    res.fit = fit_ulsif(numerator, denominator, options.fit);
    res.statistic = pearson_divergence(res.fit, numerator, denominator);

    const Index n_num = numerator.rows();
    const Index n_den = denominator.rows();
    Matrix pooled(n_num + n_den, numerator.cols());
    pooled << numerator, denominator;
    // basis of every pooled row is fixed when hyperparameters are frozen
    const Matrix phi = options.reselect ? Matrix() : kernel_basis(pooled, res.fit.kernel());

    res.null_values.assign(static_cast<std::size_t>(options.permutations), 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < options.permutations; ++r) {
        Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(r) + 1);
        std::vector<Index> order(static_cast<std::size_t>(n_num + n_den));
        std::iota(order.begin(), order.end(), Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        double pe = 0.0;
        if (options.reselect) {
            const Matrix num = gather_rows(pooled, order.data(), n_num);
            const Matrix den = gather_rows(pooled, order.data() + n_num, n_den);
            UlsifConfig cfg = options.fit;
            cfg.seed = options.fit.seed + 7919u * (static_cast<std::uint64_t>(r) + 1);
            const UlsifFit f = fit_ulsif(num, den, cfg);
            pe = pearson_divergence(f, num, den);
        } else {
            const Matrix phi_num = gather_rows(phi, order.data(), n_num);
            const Matrix phi_den = gather_rows(phi, order.data() + n_num, n_den);
            const Vector theta = solve_ridge(build_system(phi_num, phi_den), res.fit.lambda);
            pe = pearson_divergence(phi_num * theta, phi_den * theta);
        }
        res.null_values[static_cast<std::size_t>(r)] = pe;
    }
    res.p_value = permutation_p_value(res.statistic, res.null_values);
    return res;
}

PermutationTestResult permutation_test(const FeatureMatrix& numerator, const FeatureMatrix& denominator,
                                       const PermutationOptions& options) {
    PermutationTestResult res = permutation_test(numerator.data, denominator.data, options);
    res.fit.scaling = numerator.scaling;
    return res;
}

}  // namespace drutil
