#include "drutil/reweight.hpp"

#include "drutil/error.hpp"

#include <cmath>

namespace drutil {

WeightVector importance_weights(const UlsifFit& fit, const Matrix& synthetic, const WeightOptions& options) {
    WeightVector out;
    out.weights = predict_ratio(fit, synthetic, true).values;
    if (options.max_weight) {
        if (!(*options.max_weight > 0.0)) throw UsageError("importance_weights: max weight must be positive");
        out.weights = out.weights.cwiseMin(*options.max_weight);
    }
    const double total = out.weights.sum();
    if (!(total > 0.0)) throw NumericError("importance_weights: every weight is zero after truncation");
    if (options.normalize) {
        out.weights *= static_cast<double>(out.weights.size()) / total;
        out.normalized = true;
    }
    return out;
}

WeightVector importance_weights(const UlsifFit& fit, const FeatureMatrix& synthetic, const WeightOptions& options) {
    return importance_weights(fit, synthetic.data, options);
}

RegressionResult weighted_least_squares(const Matrix& x, const Vector& y, const Vector& w,
                                        std::vector<std::string> names) {
    if (x.rows() != y.size() || x.rows() != w.size()) throw InputError("weighted_least_squares: row counts differ");
    if ((w.array() < 0.0).any() || !w.allFinite()) throw InputError("weighted_least_squares: weights must be >= 0");
    if (!names.empty() && static_cast<Index>(names.size()) != x.cols())
        throw InputError("weighted_least_squares: name count does not match columns");

    const Matrix xw = w.cwiseSqrt().asDiagonal() * x;
    Eigen::ColPivHouseholderQR<Matrix> qr(xw);
    if (qr.rank() < x.cols()) throw NumericError("weighted_least_squares: design is rank deficient");

    const Matrix gram = x.transpose() * w.asDiagonal() * x;
    const Vector rhs = x.transpose() * w.cwiseProduct(y);
    RegressionResult res;
    res.coefficients = gram.ldlt().solve(rhs);
    // one refinement step keeps the normal-equation residual tight
    res.coefficients += gram.ldlt().solve(rhs - gram * res.coefficients);
    const double rel = (gram * res.coefficients - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (!(rel < 1e-10)) throw NumericError("weighted_least_squares: normal equations are ill-conditioned");

    const Vector resid = y - x * res.coefficients;
    const double dof = static_cast<double>(x.rows() - x.cols());
    res.residual_variance = dof > 0 ? w.dot(resid.cwiseAbs2()) / dof : 0.0;
    res.names = std::move(names);
    res.weighted = true;
    return res;
}

RegressionResult ordinary_least_squares(const Matrix& x, const Vector& y, std::vector<std::string> names) {
    RegressionResult res = weighted_least_squares(x, y, Vector::Ones(x.rows()), std::move(names));
    res.weighted = false;
    return res;
}

}  // namespace drutil
