#include "drutil/ulsif.hpp"

#include "drutil/error.hpp"
#include "drutil/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace drutil {

std::string to_string(CvMethod m) {
    switch (m) {
    case CvMethod::kfold: return "kfold";
    case CvMethod::loocv: return "loocv";
    case CvMethod::none: return "none";
    }
    return "none";
}

CvMethod cv_method_from_string(const std::string& s) {
    if (s == "kfold") return CvMethod::kfold;
    if (s == "loocv") return CvMethod::loocv;
    if (s == "none") return CvMethod::none;
    throw UsageError("unknown cross-validation method '" + s + "'");
}

std::string to_string(CenterSource s) { return s == CenterSource::pooled ? "pooled" : "numerator"; }

CenterSource center_source_from_string(const std::string& s) {
    if (s == "pooled") return CenterSource::pooled;
    if (s == "numerator") return CenterSource::numerator;
    throw UsageError("unknown center source '" + s + "' (expected pooled or numerator)");
}

RidgeSystem build_system(const Matrix& phi_num, const Matrix& phi_den) {
    RidgeSystem sys;
    sys.H.noalias() = phi_den.transpose() * phi_den;
    sys.H /= static_cast<double>(phi_den.rows());
    sys.h = phi_num.colwise().mean().transpose();
    return sys;
}

Vector solve_ridge(const RidgeSystem& sys, double lambda) {
    Matrix a = sys.H;
    a.diagonal().array() += lambda;
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
    return llt.solve(sys.h);
}

double ridge_residual(const RidgeSystem& sys, double lambda, const Vector& theta) {
    const Vector r = sys.H * theta + lambda * theta - sys.h;
    const double hn = sys.h.norm();
    return hn > 0.0 ? r.norm() / hn : r.norm();
}

namespace {

constexpr double kResidualLimit = 1e-8;

// Lower score wins; ties go to the larger lambda, then the larger sigma.
bool better(const CvCell& a, const CvCell& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.lambda != b.lambda) return a.lambda > b.lambda;
    return a.sigma > b.sigma;
}

Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
}

std::vector<std::vector<Index>> make_folds(Index n, int k, Rng& rng) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < order.size(); ++i) folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
    return folds;
}

// k-fold held-out LSIF criterion J = mean_den[r^2]/2 - mean_num[r] for one sigma
// and every lambda. Uses the eigendecomposition of each training H so that
// all lambdas share one factorization.
std::vector<double> kfold_scores(const Matrix& phi_num, const Matrix& phi_den,
                                 const std::vector<std::vector<Index>>& num_folds,
                                 const std::vector<std::vector<Index>>& den_folds,
                                 const std::vector<double>& lambdas) {
    const Index b = phi_num.cols();
    const std::size_t k = num_folds.size();
    std::vector<Matrix> g_fold(k);
    std::vector<Vector> s_fold(k);
    Matrix g_all = Matrix::Zero(b, b);
    Vector s_all = Vector::Zero(b);
    for (std::size_t f = 0; f < k; ++f) {
        const Matrix pd = gather_rows(phi_den, den_folds[f]);
        g_fold[f].noalias() = pd.transpose() * pd;
        s_fold[f] = gather_rows(phi_num, num_folds[f]).colwise().sum().transpose();
        g_all += g_fold[f];
        s_all += s_fold[f];
    }

    const auto n_num = static_cast<double>(phi_num.rows());
    const auto n_den = static_cast<double>(phi_den.rows());
    std::vector<double> scores(lambdas.size(), 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig;
    for (std::size_t f = 0; f < k; ++f) {
        const auto hold_num = static_cast<double>(num_folds[f].size());
        const auto hold_den = static_cast<double>(den_folds[f].size());
        const Matrix h_train = (g_all - g_fold[f]) / (n_den - hold_den);
        const Vector v_train = (s_all - s_fold[f]) / (n_num - hold_num);
        eig.compute(h_train);
        const Matrix& vecs = eig.eigenvectors();
        // clamp tiny negative eigenvalues from rounding; H is PSD
        const Vector vals = eig.eigenvalues().cwiseMax(0.0);
        const Vector proj = vecs.transpose() * v_train;
        for (std::size_t l = 0; l < lambdas.size(); ++l) {
            const Vector theta = vecs * (proj.array() / (vals.array() + lambdas[l])).matrix();
            const double quad = theta.dot(g_fold[f] * theta) / hold_den;
            const double lin = s_fold[f].dot(theta) / hold_num;
            scores[l] += 0.5 * quad - lin;
        }
    }
    for (auto& s : scores) s /= static_cast<double>(k);
    return scores;
}

// Closed-form leave-one-out score of uLSIF over the first min(n_num, n_den)
// pairs of rows, one sigma, every lambda.
std::vector<double> loocv_scores(const Matrix& phi_num, const Matrix& phi_den, const std::vector<double>& lambdas) {
    const Index n_nu = phi_num.rows();
    const Index n_de = phi_den.rows();
    const Index n = std::min(n_nu, n_de);
    const RidgeSystem sys = build_system(phi_num, phi_den);
    const Matrix x_de = phi_den.topRows(n).transpose();  // b x n
    const Matrix x_nu = phi_num.topRows(n).transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> eig(sys.H);
    const Matrix& vecs = eig.eigenvectors();
    const Vector vals = eig.eigenvalues().cwiseMax(0.0);
    const Matrix vt_de = vecs.transpose() * x_de;
    const Matrix vt_nu = vecs.transpose() * x_nu;
    const Vector vt_h = vecs.transpose() * sys.h;

    const double dn_de = static_cast<double>(n_de);
    const double dn_nu = static_cast<double>(n_nu);
    std::vector<double> scores(lambdas.size());
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
        const double shift = lambdas[l] * (dn_de - 1.0) / dn_de;
        const Vector inv = (vals.array() + shift).inverse().matrix();
        const Matrix binv_x = vecs * (inv.asDiagonal() * vt_de);
        const Matrix binv_nu = vecs * (inv.asDiagonal() * vt_nu);
        const Vector binv_h = vecs * inv.cwiseProduct(vt_h);

        const Eigen::RowVectorXd denom =
            (Eigen::RowVectorXd::Constant(n, dn_de) - x_de.cwiseProduct(binv_x).colwise().sum());
        const Eigen::RowVectorXd c0 = (sys.h.transpose() * binv_x).cwiseQuotient(denom);
        const Eigen::RowVectorXd c1 = x_nu.cwiseProduct(binv_x).colwise().sum().cwiseQuotient(denom);

        Matrix b0 = binv_x * c0.asDiagonal();
        b0.colwise() += binv_h;
        const Matrix b1 = binv_nu + binv_x * c1.asDiagonal();
        const Matrix b2 = (((dn_de - 1.0) / (dn_de * (dn_nu - 1.0))) * (dn_nu * b0 - b1)).cwiseMax(0.0);

        const Eigen::RowVectorXd r_de = x_de.cwiseProduct(b2).colwise().sum();
        const Eigen::RowVectorXd r_nu = x_nu.cwiseProduct(b2).colwise().sum();
        scores[l] = r_de.squaredNorm() / (2.0 * static_cast<double>(n)) - r_nu.sum() / static_cast<double>(n);
    }
    return scores;
}

}  // namespace

UlsifFit fit_ulsif(const Matrix& numerator, const Matrix& denominator, const UlsifConfig& config) {
    if (numerator.rows() == 0 || denominator.rows() == 0) throw InputError("fit_ulsif: empty input");
    if (numerator.cols() != denominator.cols())
        throw InputError("fit_ulsif: numerator has " + std::to_string(numerator.cols()) +
                         " columns, denominator has " + std::to_string(denominator.cols()));
    if (numerator.rows() < 2 || denominator.rows() < 2)
        throw InputError("fit_ulsif: need at least two rows in each sample");
    if (numerator.cols() == 0) throw InputError("fit_ulsif: no feature columns");

    Rng rng = make_stream(config.seed, 0);

    UlsifFit fit;
    if (config.centers) {
        if (config.centers->cols() != numerator.cols())
            throw InputError("fit_ulsif: centers have the wrong column count");
        if (config.centers->rows() < 1) throw InputError("fit_ulsif: no centers");
        fit.centers = *config.centers;
    } else {
        Matrix source;
        if (config.center_source == CenterSource::pooled) {
            source.resize(numerator.rows() + denominator.rows(), numerator.cols());
            source << numerator, denominator;
        } else {
            source = numerator;
        }
        const Index n = source.rows();
        const Index b = std::min(config.num_centers.value_or(kDefaultCenters), n);
        if (b < 1) throw UsageError("fit_ulsif: center count must be positive");
        fit.centers = b == n ? source : sample_centers(source, b, rng);
    }

    const Matrix d_num = pairwise_sq_distances(numerator, fit.centers);
    const Matrix d_den = pairwise_sq_distances(denominator, fit.centers);

    std::vector<double> sigmas = config.sigmas;
    if (sigmas.empty()) {
        Matrix pooled(d_num.rows() + d_den.rows(), d_num.cols());
        pooled << d_num, d_den;
        sigmas = sigma_grid(pooled);
    }
    std::vector<double> lambdas = config.lambdas.empty() ? lambda_grid() : config.lambdas;
    for (double s : sigmas)
        if (!(s > 0.0) || !std::isfinite(s)) throw UsageError("fit_ulsif: sigma values must be positive");
    for (double l : lambdas)
        if (!(l > 0.0) || !std::isfinite(l)) throw UsageError("fit_ulsif: lambda values must be positive");

    CvMethod method = config.cv;
    if (sigmas.size() * lambdas.size() == 1) method = CvMethod::none;
    int folds = 0;
    std::vector<std::vector<Index>> num_folds, den_folds;
    if (method == CvMethod::kfold) {
        if (config.folds < 2) throw UsageError("fit_ulsif: need at least 2 folds");
        folds = static_cast<int>(std::min<Index>({config.folds, numerator.rows(), denominator.rows()}));
        num_folds = make_folds(numerator.rows(), folds, rng);
        den_folds = make_folds(denominator.rows(), folds, rng);
    }

    fit.cv_table.resize(sigmas.size() * lambdas.size());
    if (method == CvMethod::none) {
        fit.cv_table[0] = {sigmas[0], lambdas[0], std::numeric_limits<double>::quiet_NaN()};
    } else {
#pragma omp parallel for schedule(dynamic)
        for (std::size_t s = 0; s < sigmas.size(); ++s) {
            const Matrix phi_num = kernel_basis_from_distances(d_num, sigmas[s]);
            const Matrix phi_den = kernel_basis_from_distances(d_den, sigmas[s]);
            const std::vector<double> scores = method == CvMethod::kfold
                                                   ? kfold_scores(phi_num, phi_den, num_folds, den_folds, lambdas)
                                                   : loocv_scores(phi_num, phi_den, lambdas);
            for (std::size_t l = 0; l < lambdas.size(); ++l)
                fit.cv_table[s * lambdas.size() + l] = {sigmas[s], lambdas[l], scores[l]};
        }
    }

    CvCell best = fit.cv_table.front();
    if (method != CvMethod::none) {
        bool found = false;
        for (const auto& cell : fit.cv_table) {
            if (!std::isfinite(cell.score)) continue;
            if (!found || better(cell, best)) best = cell;
            found = true;
        }
        if (!found) throw NumericError("fit_ulsif: cross-validation produced no finite score");
    }

    fit.sigma = best.sigma;
    fit.lambda = best.lambda;
    fit.cv_method = method;
    fit.folds = folds;

    const RidgeSystem sys = build_system(kernel_basis_from_distances(d_num, fit.sigma),
                                         kernel_basis_from_distances(d_den, fit.sigma));
    fit.theta = solve_ridge(sys, fit.lambda);
    const double res = ridge_residual(sys, fit.lambda, fit.theta);
    if (!(res < kResidualLimit))
        throw NumericError("fit_ulsif: ridge solve residual " + std::to_string(res) + " exceeds tolerance");
    return fit;
}

UlsifFit fit_ulsif(const FeatureMatrix& numerator, const FeatureMatrix& denominator, const UlsifConfig& config) {
    UlsifFit fit = fit_ulsif(numerator.data, denominator.data, config);
    fit.scaling = numerator.scaling;
    return fit;
}

UlsifFit refit_theta(const UlsifFit& frozen, const Matrix& numerator, const Matrix& denominator) {
    if (numerator.cols() != frozen.dims() || denominator.cols() != frozen.dims())
        throw InputError("refit_theta: dimension mismatch");
    UlsifFit fit = frozen;
    const RidgeSystem sys =
        build_system(kernel_basis(numerator, frozen.kernel()), kernel_basis(denominator, frozen.kernel()));
    fit.theta = solve_ridge(sys, fit.lambda);
    return fit;
}

RatioVector predict_ratio(const UlsifFit& fit, const Matrix& x, bool truncate) {
    if (x.cols() != fit.dims())
        throw InputError("predict_ratio: data has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(fit.dims()));
    RatioVector out;
    out.values = kernel_basis(x, fit.kernel()) * fit.theta;
    if (truncate) out.values = out.values.cwiseMax(0.0);
    out.truncated = truncate;
    return out;
}

RatioVector predict_ratio(const UlsifFit& fit, const FeatureMatrix& x, bool truncate) {
    return predict_ratio(fit, x.data, truncate);
}

double pearson_divergence(const Vector& ratio_num, const Vector& ratio_den) {
    if (ratio_num.size() == 0 || ratio_den.size() == 0) throw InputError("pearson_divergence: empty sample");
    return ratio_num.mean() - 0.5 * ratio_den.squaredNorm() / static_cast<double>(ratio_den.size()) - 0.5;
}

double pearson_divergence(const UlsifFit& fit, const Matrix& numerator, const Matrix& denominator) {
    return pearson_divergence(predict_ratio(fit, numerator, false).values,
                              predict_ratio(fit, denominator, false).values);
}

double pearson_divergence(const UlsifFit& fit, const FeatureMatrix& numerator, const FeatureMatrix& denominator) {
    return pearson_divergence(fit, numerator.data, denominator.data);
}

}  // namespace drutil
