#include "drutil/error.hpp"
#include "drutil/ulsif.hpp"
#include "oracles/bfgs.hpp"
#include "oracles/brute.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace drutil;

namespace {

Matrix normal_sample(Index n, double mean, double sd, std::uint64_t seed) {
    Rng rng = make_stream(seed, 1234);
    std::normal_distribution<double> z(mean, sd);
    Matrix m(n, 1);
    for (Index i = 0; i < n; ++i) m(i, 0) = z(rng);
    return m;
}

Matrix basis(const Matrix& x, const Matrix& centers, double sigma) {
    const Matrix d = oracle::naive_sq_distances(x, centers);
    Matrix phi(x.rows(), centers.rows() + 1);
    phi.col(0).setOnes();
    phi.rightCols(centers.rows()) = (-d.array() / (2.0 * sigma * sigma)).exp().matrix();
    return phi;
}

// mean((u - 1) u - (u - 1)^2 / 2) over the denominator, minus mean(v - 1)
// over the numerator, plus a ridge term; u and v are model predictions.
oracle::Objective lsif_loss(const Matrix& phi_num, const Matrix& phi_den, double lambda) {
    return [=](const Eigen::VectorXd& a, Eigen::VectorXd* grad) {
        const Eigen::VectorXd u = phi_den * a;
        const Eigen::VectorXd v = phi_num * a;
        const double loss = ((u.array() - 1.0) * u.array() - (u.array() - 1.0).square() / 2.0).mean() -
                            (v.array() - 1.0).mean() + lambda / 2.0 * a.squaredNorm();
        if (grad)
            *grad = phi_den.transpose() * u / static_cast<double>(u.size()) -
                    phi_num.colwise().mean().transpose() + lambda * a;
        return loss;
    };
}

}  // namespace

TEST_SUITE("ulsif") {

TEST_CASE("closed form agrees with generic minimization of the loss") {
    const Matrix x = normal_sample(60, 0.0, 1.0, 1);
    const Matrix y = normal_sample(60, 1.0, std::sqrt(2.0), 2);
    UlsifConfig cfg;
    cfg.centers = x;
    cfg.sigmas = {1.0};
    cfg.lambdas = {0.5};
    const UlsifFit fit = fit_ulsif(x, y, cfg);
    CHECK(fit.cv_method == CvMethod::none);
    REQUIRE(fit.theta.size() == 61);

    const auto opt = oracle::bfgs(lsif_loss(basis(x, x, 1.0), basis(y, x, 1.0), 0.5), Eigen::VectorXd::Zero(61), 10000, 1e-12);
    CHECK((opt.x - fit.theta).squaredNorm() <= 1e-8);
    const Vector pred = predict_ratio(fit, x, false).values;
    CHECK((basis(x, x, 1.0) * opt.x - pred).squaredNorm() <= 1e-6);
}

TEST_CASE("self ratio concentrates near one") {
    const Matrix x = normal_sample(100, 0.0, 1.0, 3);
    const UlsifFit fit = fit_ulsif(x, x);
    const double mean = predict_ratio(fit, x, false).values.mean();
    CHECK(mean >= 0.8);
    CHECK(mean <= 1.2);
}

TEST_CASE("ratio tracks a shifted, wider numerator") {
    const Matrix num = normal_sample(200, 1.0, std::sqrt(2.0), 4);
    const Matrix den = normal_sample(200, 0.0, 1.0, 5);
    const UlsifFit fit = fit_ulsif(num, den);
    Matrix q(2, 1);
    q << 1.0, -2.0;
    const Vector r = predict_ratio(fit, q, false).values;
    CHECK(r(0) > r(1));
}

TEST_CASE("selected cell minimizes the CV table and theta solves the ridge system") {
    const Matrix num = normal_sample(80, 0.5, 1.0, 6);
    const Matrix den = normal_sample(90, 0.0, 1.0, 7);
    for (CvMethod m : {CvMethod::kfold, CvMethod::loocv}) {
        UlsifConfig cfg;
        cfg.cv = m;
        const UlsifFit fit = fit_ulsif(num, den, cfg);
        CHECK(fit.cv_method == m);
        REQUIRE(fit.cv_table.size() == 200);
        double best = INFINITY;
        for (const auto& c : fit.cv_table) best = std::min(best, c.score);
        bool hit = false;
        for (const auto& c : fit.cv_table)
            if (c.sigma == fit.sigma && c.lambda == fit.lambda) hit = c.score == best;
        CHECK(hit);
        const RidgeSystem sys = build_system(kernel_basis(num, fit.kernel()), kernel_basis(den, fit.kernel()));
        CHECK(ridge_residual(sys, fit.lambda, fit.theta) < 1e-8);
    }
}

TEST_CASE("every grid cell solves its ridge system") {
    const Matrix num = normal_sample(40, 0.0, 1.0, 8);
    const Matrix den = normal_sample(40, 0.3, 1.2, 9);
    const Matrix centers = num.topRows(15);
    for (double sigma : {0.1, 0.5, 2.0})
        for (double lambda : lambda_grid()) {
            const RidgeSystem sys = build_system(basis(num, centers, sigma), basis(den, centers, sigma));
            CHECK(ridge_residual(sys, lambda, solve_ridge(sys, lambda)) < 1e-8);
        }
}

TEST_CASE("analytic leave-one-out matches explicit refits") {
    const Index n = 30;
    const Matrix num = normal_sample(n, 0.0, 1.0, 10);
    const Matrix den = normal_sample(n, 0.5, 1.3, 11);
    const Matrix centers = num.topRows(10);
    UlsifConfig cfg;
    cfg.centers = centers;
    cfg.cv = CvMethod::loocv;
    cfg.sigmas = {0.4, 1.1};
    cfg.lambdas = {1.0, 0.1, 0.01};
    const UlsifFit fit = fit_ulsif(num, den, cfg);
    for (const auto& cell : fit.cv_table) {
        const Matrix pn = basis(num, centers, cell.sigma);
        const Matrix pd = basis(den, centers, cell.sigma);
        double score = 0.0;
        for (Index i = 0; i < n; ++i) {
            Matrix pn_i(n - 1, pn.cols()), pd_i(n - 1, pd.cols());
            for (Index r = 0, k = 0; r < n; ++r)
                if (r != i) {
                    pn_i.row(k) = pn.row(r);
                    pd_i.row(k++) = pd.row(r);
                }
            Matrix a = pd_i.transpose() * pd_i / static_cast<double>(n - 1);
            a.diagonal().array() += cell.lambda;
            const Vector h = pn_i.colwise().mean().transpose();
            const Vector theta = a.fullPivLu().solve(h).cwiseMax(0.0);
            const double rd = pd.row(i).dot(theta);
            const double rn = pn.row(i).dot(theta);
            score += 0.5 * rd * rd - rn;
        }
        score /= static_cast<double>(n);
        CHECK(cell.score == doctest::Approx(score).epsilon(1e-9));
    }
}

TEST_CASE("larger lambda shrinks theta") {
    const Matrix num = normal_sample(50, 0.0, 1.0, 12);
    const Matrix den = normal_sample(50, 1.0, 1.0, 13);
    const RidgeSystem sys = build_system(basis(num, num, 0.8), basis(den, num, 0.8));
    const auto grid = lambda_grid();  // descending
    for (std::size_t k = 1; k < grid.size(); ++k)
        CHECK(solve_ridge(sys, grid[k]).norm() >= solve_ridge(sys, grid[k - 1]).norm());
}

TEST_CASE("row order does not change theta") {
    const Matrix num = normal_sample(40, 0.0, 1.0, 14);
    const Matrix den = normal_sample(45, 0.5, 1.0, 15);
    UlsifConfig cfg;
    cfg.centers = num.topRows(12);
    cfg.sigmas = {0.9};
    cfg.lambdas = {0.05};
    const UlsifFit a = fit_ulsif(num, den, cfg);
    const Matrix num_rev = num.colwise().reverse();
    const Matrix den_rev = den.colwise().reverse();
    const UlsifFit b = fit_ulsif(num_rev, den_rev, cfg);
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cross-validation is deterministic per seed") {
    const Matrix num = normal_sample(70, 0.0, 1.0, 16);
    const Matrix den = normal_sample(70, 0.4, 1.0, 17);
    UlsifConfig cfg;
    cfg.seed = 42;
    const UlsifFit a = fit_ulsif(num, den, cfg);
    const UlsifFit b = fit_ulsif(num, den, cfg);
    CHECK(a.sigma == b.sigma);
    CHECK(a.lambda == b.lambda);
    CHECK(a.theta == b.theta);
    CHECK(a.centers == b.centers);
}

TEST_CASE("center options") {
    const Matrix num = normal_sample(30, 0.0, 1.0, 18);
    const Matrix den = normal_sample(40, 0.0, 1.0, 19);
    UlsifConfig cfg;
    cfg.sigmas = {1.0};
    cfg.lambdas = {0.1};
    CHECK(fit_ulsif(num, den, cfg).num_centers() == 70);
    cfg.num_centers = 10;
    CHECK(fit_ulsif(num, den, cfg).num_centers() == 10);
    cfg.center_source = CenterSource::numerator;
    cfg.num_centers = kDefaultCenters;
    const UlsifFit f = fit_ulsif(num, den, cfg);
    CHECK(f.num_centers() == 30);
    CHECK(f.centers == num);
    CHECK(center_source_from_string("pooled") == CenterSource::pooled);
    CHECK_THROWS_AS(center_source_from_string("both"), UsageError);
}

TEST_CASE("predictions and truncation") {
    UlsifFit fit;
    fit.centers = Matrix::Zero(3, 1);
    fit.sigma = 1.0;
    fit.theta = Vector::Zero(4);
    Matrix x(3, 1);
    x << -1, 0, 2;
    CHECK(predict_ratio(fit, x, false).values.isZero(0.0));
    fit.theta(0) = 1.0;
    CHECK(predict_ratio(fit, x, false).values.isOnes(0.0));
    fit.theta << 0.2, -1.0, 0.5, 0.1;
    const RatioVector raw = predict_ratio(fit, x, false);
    const RatioVector cut = predict_ratio(fit, x, true);
    CHECK(cut.truncated);
    CHECK(cut.values == raw.values.cwiseMax(0.0));
    CHECK(raw.values.minCoeff() < 0.0);
    CHECK_THROWS_AS(predict_ratio(fit, Matrix::Zero(2, 2), false), InputError);
}

TEST_CASE("Pearson divergence arithmetic") {
    CHECK(pearson_divergence(Vector::Ones(5), Vector::Ones(7)) == 0.0);
    CHECK(pearson_divergence(Vector::Constant(5, 2.0), Vector::Constant(7, 2.0)) == -0.5);
}

TEST_CASE("Pearson divergence is near zero for equal laws") {
    double total = 0.0;
    const int reps = 20;
    for (int r = 0; r < reps; ++r) {
        const Matrix a = normal_sample(300, 0.0, 1.0, 100 + 2 * r);
        const Matrix b = normal_sample(300, 0.0, 1.0, 101 + 2 * r);
        UlsifConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(r);
        total += pearson_divergence(fit_ulsif(a, b, cfg), a, b);
    }
    CHECK(std::abs(total / reps) < 0.05);
}

TEST_CASE("input validation") {
    const Matrix a = normal_sample(10, 0, 1, 20);
    CHECK_THROWS_AS(fit_ulsif(a, Matrix(0, 1)), InputError);
    CHECK_THROWS_AS(fit_ulsif(a, Matrix::Zero(10, 2)), InputError);
    CHECK_THROWS_AS(fit_ulsif(a.topRows(1), a), InputError);
    UlsifConfig cfg;
    cfg.sigmas = {-1.0};
    CHECK_THROWS_AS(fit_ulsif(a, a, cfg), UsageError);
    CHECK(to_string(cv_method_from_string("loocv")) == "loocv");
    CHECK_THROWS_AS(cv_method_from_string("bogus"), UsageError);
}

}  // TEST_SUITE
