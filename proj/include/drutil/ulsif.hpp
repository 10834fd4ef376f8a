#pragma once

#include "drutil/dataset.hpp"
#include "drutil/kernels.hpp"
#include "drutil/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drutil {

enum class CvMethod { kfold, loocv, none };

std::string to_string(CvMethod m);
CvMethod cv_method_from_string(const std::string& s);

// Rows that kernel centers are drawn from.
enum class CenterSource { pooled, numerator };

std::string to_string(CenterSource s);
CenterSource center_source_from_string(const std::string& s);

inline constexpr Index kDefaultCenters = 200;

struct UlsifConfig {
    // Explicit centers win over sampling. Otherwise `num_centers` rows are
    // drawn from `center_source`; unset means min(200, rows available), and
    // a value >= the available row count uses all of them.
    std::optional<Matrix> centers;
    std::optional<Index> num_centers;
    CenterSource center_source = CenterSource::pooled;
    // Empty grids are filled with sigma_grid() / lambda_grid().
    std::vector<double> sigmas;
    std::vector<double> lambdas;
    CvMethod cv = CvMethod::kfold;
    int folds = 5;
    std::uint64_t seed = 1;
};

struct CvCell {
    double sigma = 0.0;
    double lambda = 0.0;
    double score = 0.0;
};

// Fitted ratio model r(x) = [1, K(x, c_1), ..., K(x, c_b)] . theta.
// The intercept is penalized along with the kernel weights.
struct UlsifFit {
    Matrix centers;
    double sigma = 1.0;
    double lambda = 1.0;
    Vector theta;
    std::vector<CvCell> cv_table;
    CvMethod cv_method = CvMethod::none;
    int folds = 0;
    // Scaling of the feature space the model was fitted in, if any.
    std::optional<Scaling> scaling;

    KernelConfig kernel() const { return {centers, sigma}; }
    Index num_centers() const { return centers.rows(); }
    Index dims() const { return centers.cols(); }
};

struct RatioVector {
    Vector values;
    bool truncated = false;
};

// Ridge-regularized least-squares system of the ratio model:
// H = Phi_den' Phi_den / n_den, h = Phi_num' 1 / n_num.
struct RidgeSystem {
    Matrix H;
    Vector h;
};

RidgeSystem build_system(const Matrix& phi_num, const Matrix& phi_den);

// Solves (H + lambda I) theta = h by Cholesky.
Vector solve_ridge(const RidgeSystem& sys, double lambda);

// ||(H + lambda I) theta - h|| / ||h||
double ridge_residual(const RidgeSystem& sys, double lambda, const Vector& theta);

UlsifFit fit_ulsif(const Matrix& numerator, const Matrix& denominator, const UlsifConfig& config = {});
UlsifFit fit_ulsif(const FeatureMatrix& numerator, const FeatureMatrix& denominator, const UlsifConfig& config = {});

// Refit theta with the kernel (centers, sigma) and lambda frozen.
UlsifFit refit_theta(const UlsifFit& frozen, const Matrix& numerator, const Matrix& denominator);

RatioVector predict_ratio(const UlsifFit& fit, const Matrix& x, bool truncate);
RatioVector predict_ratio(const UlsifFit& fit, const FeatureMatrix& x, bool truncate);

// Plug-in Pearson divergence mean_num[r] - mean_den[r^2] / 2 - 1/2 from
// untruncated ratios evaluated on both samples.
double pearson_divergence(const Vector& ratio_num, const Vector& ratio_den);
double pearson_divergence(const UlsifFit& fit, const Matrix& numerator, const Matrix& denominator);
double pearson_divergence(const UlsifFit& fit, const FeatureMatrix& numerator, const FeatureMatrix& denominator);

}  // namespace drutil
