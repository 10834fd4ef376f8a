#pragma once

#include "drutil/dataset.hpp"
#include "drutil/ulsif.hpp"

#include <cstdint>
#include <vector>

namespace drutil {

struct PermutationOptions {
    int permutations = 199;
    std::uint64_t seed = 1;
    // Re-run hyperparameter selection inside every permutation instead of
    // reusing the (centers, sigma, lambda) chosen for the observed split.
    bool reselect = false;
    UlsifConfig fit;
};

struct PermutationTestResult {
    double statistic = 0.0;
    std::vector<double> null_values;
    double p_value = 1.0;
    int permutations = 0;
    std::uint64_t seed = 0;
    bool reselect = false;
    UlsifFit fit;
};

// (1 + #{null >= statistic}) / (B + 1)
double permutation_p_value(double statistic, const std::vector<double>& null_values);

PermutationTestResult permutation_test(const Matrix& numerator, const Matrix& denominator,
                                       const PermutationOptions& options = {});
PermutationTestResult permutation_test(const FeatureMatrix& numerator, const FeatureMatrix& denominator,
                                       const PermutationOptions& options = {});

}  // namespace drutil
