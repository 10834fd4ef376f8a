#pragma once

#include "drutil/dataset.hpp"
#include "drutil/ulsif.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drutil {

struct WeightVector {
    Vector weights;
    bool normalized = false;
};

struct WeightOptions {
    bool normalize = true;
    // Cap applied to the truncated ratios before normalization.
    std::optional<double> max_weight;
};

// Truncated ratio predictions at the synthetic rows, optionally capped and
// rescaled to mean 1.
WeightVector importance_weights(const UlsifFit& fit, const Matrix& synthetic, const WeightOptions& options = {});
WeightVector importance_weights(const UlsifFit& fit, const FeatureMatrix& synthetic,
                                const WeightOptions& options = {});

struct RegressionResult {
    std::vector<std::string> names;
    Vector coefficients;
    // sum w_i e_i^2 / (n - p)
    double residual_variance = 0.0;
    bool weighted = false;
};

// argmin_beta sum w_i (y_i - x_i beta)^2 through the weighted normal
// equations. `x` must already contain the intercept column if one is wanted.
RegressionResult weighted_least_squares(const Matrix& x, const Vector& y, const Vector& w,
                                        std::vector<std::string> names = {});
RegressionResult ordinary_least_squares(const Matrix& x, const Vector& y, std::vector<std::string> names = {});

}  // namespace drutil
