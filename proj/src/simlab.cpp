#include "drutil/simlab.hpp"

#include "drutil/error.hpp"
#include "drutil/knn.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>

namespace drutil::simlab {

namespace {

const double kLogMean = std::log(1.0 / std::sqrt(3.0));
const double kLogSd = std::sqrt(std::log(3.0));
constexpr double kTDof = 4.0;

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
    case Scenario::laplace: return "laplace";
    case Scenario::lognormal: return "lognormal";
    case Scenario::t_ls: return "t_ls";
    case Scenario::normal: return "normal";
    }
    return "normal";
}

Scenario scenario_from_string(const std::string& s) {
    for (auto sc : kScenarios)
        if (to_string(sc) == s) return sc;
    throw UsageError("unknown scenario '" + s + "' (expected laplace, lognormal, t_ls or normal)");
}

UnivariateSample gen_univariate(Scenario scenario, Index n, Rng& rng) {
    if (n < 2) throw UsageError("gen_univariate: n must be at least 2");
    UnivariateSample out{Vector(n), Vector(n)};
    std::normal_distribution<double> syn(1.0, std::sqrt(2.0));
    switch (scenario) {
    case Scenario::laplace: {
        std::exponential_distribution<double> e(1.0);
        for (Index i = 0; i < n; ++i) out.observed(i) = 1.0 + e(rng) - e(rng);
        break;
    }
    case Scenario::lognormal: {
        std::lognormal_distribution<double> ln(kLogMean, kLogSd);
        for (Index i = 0; i < n; ++i) out.observed(i) = ln(rng);
        break;
    }
    case Scenario::t_ls: {
        std::student_t_distribution<double> t(kTDof);
        for (Index i = 0; i < n; ++i) out.observed(i) = 1.0 + t(rng);
        break;
    }
    case Scenario::normal:
        for (Index i = 0; i < n; ++i) out.observed(i) = syn(rng);
        break;
    }
    for (Index i = 0; i < n; ++i) out.synthetic(i) = syn(rng);
    return out;
}

UnivariateSample gen_univariate(Scenario scenario, Index n, std::uint64_t seed) {
    Rng rng = make_stream(seed, 0);
    return gen_univariate(scenario, n, rng);
}

double synthetic_density(double x) {
    const double z = x - 1.0;
    return std::exp(-z * z / 4.0) / std::sqrt(4.0 * std::numbers::pi);
}

double observed_density(Scenario scenario, double x) {
    switch (scenario) {
    case Scenario::laplace: return 0.5 * std::exp(-std::abs(x - 1.0));
    case Scenario::lognormal: {
        if (x <= 0.0) return 0.0;
        const double z = (std::log(x) - kLogMean) / kLogSd;
        return std::exp(-0.5 * z * z) / (x * kLogSd * std::sqrt(2.0 * std::numbers::pi));
    }
    case Scenario::t_ls: {
        const double z = x - 1.0;
        const double c = std::exp(std::lgamma((kTDof + 1.0) / 2.0) - std::lgamma(kTDof / 2.0)) /
                         std::sqrt(kTDof * std::numbers::pi);
        return c * std::pow(1.0 + z * z / kTDof, -(kTDof + 1.0) / 2.0);
    }
    case Scenario::normal: return synthetic_density(x);
    }
    return 0.0;
}

double true_ratio(Scenario scenario, double x) { return observed_density(scenario, x) / synthetic_density(x); }

void validate(const MultivariateConfig& config) {
    if (config.dims < 5) throw UsageError("multivariate design needs D >= 5");
    if (config.dims > 5 && config.dims < 10) throw UsageError("multivariate design needs D = 5 or D >= 10");
    if (config.n < 2) throw UsageError("multivariate design needs n >= 2");
    if (!(config.correlation > -1.0 / (linear_block(config.dims) - 1) && config.correlation < 1.0))
        throw UsageError("correlation does not give a positive definite covariance");
}

int linear_block(int dims) { return dims <= 5 ? dims - 1 : dims - 5; }

namespace {

std::vector<std::string> column_names(int dims) {
    std::vector<std::string> names;
    for (int j = 1; j <= dims; ++j) names.push_back("X" + std::to_string(j));
    return names;
}

Matrix standard_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix m(rows, cols);
    // row-major fill so a row's draws stay adjacent in the stream
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = z(rng);
    return m;
}

double sample_variance(const Vector& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

// Lower Cholesky factor; inflates the diagonal by 1e-8 (growing) if the
// estimate is not positive definite.
Matrix robust_cholesky(Matrix cov) {
    Eigen::LLT<Matrix> llt(cov);
    double bump = 1e-8;
    bool warned = false;
    while (llt.info() != Eigen::Success) {
        if (!warned) {
            std::clog << "warning: estimated covariance is singular; adding " << bump << " to the diagonal\n";
            warned = true;
        }
        cov.diagonal().array() += bump;
        bump *= 10.0;
        llt.compute(cov);
        if (bump > 1e3) throw NumericError("covariance repair failed");
    }
    return llt.matrixL();
}

Matrix mvn(const Vector& mean, const Matrix& chol_lower, Index n, Rng& rng) {
    Matrix z = standard_normal(n, mean.size(), rng);
    Matrix x = z * chol_lower.transpose();
    x.rowwise() += mean.transpose();
    return x;
}

Matrix sample_covariance(const Matrix& x) {
    const Matrix centered = x.rowwise() - x.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(x.rows() - 1);
}

}  // namespace

Dataset gen_multivariate(const MultivariateConfig& config, Rng& rng) {
    validate(config);
    const int d = config.dims;
    const int lin = linear_block(d);
    Matrix sigma = Matrix::Constant(lin, lin, config.correlation);
    sigma.diagonal().setOnes();
    const Matrix chol = robust_cholesky(sigma);

    Matrix x(config.n, d);
    x.leftCols(lin) = mvn(Vector::Zero(lin), chol, config.n, rng);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int j = 1; j <= d - lin; ++j) {
        const Vector mean = x.col(j - 1).array().pow(static_cast<double>(j + 1)).matrix();
        const double sd = std::sqrt(sample_variance(mean));
        for (Index i = 0; i < config.n; ++i) x(i, lin + j - 1) = mean(i) + sd * z(rng);
    }
    return Dataset::from_matrix(x, column_names(d), Provenance::observed);
}

Dataset gen_multivariate(const MultivariateConfig& config) {
    Rng rng = make_stream(config.seed, 0);
    return gen_multivariate(config, rng);
}

Dataset synthesize(int model, const Dataset& data, Rng& rng) {
    if (model < 1 || model > 3) throw UsageError("synthesis model must be 1, 2 or 3");
    const Matrix real = data.numeric_matrix();
    const Index n = real.rows();
    const auto d = static_cast<int>(real.cols());
    if (n < 3) throw InputError("synthesize: need at least 3 rows");
    const Vector mean = real.colwise().mean().transpose();

    std::vector<std::string> names;
    for (const auto& c : data.columns()) names.push_back(c.name);

    Matrix out(n, d);
    if (model == 1) {
        std::normal_distribution<double> z(0.0, 1.0);
        Vector sd(d);
        for (int j = 0; j < d; ++j) sd(j) = std::sqrt(sample_variance(real.col(j)));
        for (Index i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) out(i, j) = mean(j) + sd(j) * z(rng);
    } else if (model == 2) {
        out = mvn(mean, robust_cholesky(sample_covariance(real)), n, rng);
    } else {
        if (d < 5) throw InputError("synthesis model 3 needs the D >= 5 design");
        const int lin = linear_block(d);
        const Matrix block = real.leftCols(lin);
        out.leftCols(lin) = mvn(mean.head(lin), robust_cholesky(sample_covariance(block)), n, rng);
        std::normal_distribution<double> z(0.0, 1.0);
        for (int j = 1; j <= d - lin; ++j) {
            const double power = j + 1;
            const Vector pred = real.col(j - 1).array().pow(power).matrix();
            const Vector resp = real.col(lin + j - 1);
            const double pm = pred.mean();
            const double rm = resp.mean();
            const double sxx = (pred.array() - pm).square().sum();
            const double sxy = ((pred.array() - pm) * (resp.array() - rm)).sum();
            const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
            const double intercept = rm - slope * pm;
            const Vector fitted = (intercept + slope * pred.array()).matrix();
            const double resid_sd = std::sqrt((resp - fitted).squaredNorm() / static_cast<double>(n - 2));
            for (Index i = 0; i < n; ++i)
                out(i, lin + j - 1) = intercept + slope * std::pow(out(i, j - 1), power) + resid_sd * z(rng);
        }
    }
    return Dataset::from_matrix(out, names, Provenance::synthetic);
}

Dataset synthesize(int model, const Dataset& data, std::uint64_t seed) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(model));
    return synthesize(model, data, rng);
}

std::string to_string(Measure m) {
    switch (m) {
    case Measure::pe: return "PE";
    case Measure::kl_1: return "KL_1";
    case Measure::kl_sqrt_n: return "KL_sqrt_n";
    case Measure::pmse_cart: return "pMSE_cart";
    case Measure::pmse_logit: return "pMSE_logit";
    }
    return "PE";
}

Measure measure_from_string(const std::string& s) {
    for (auto m : {Measure::pe, Measure::kl_1, Measure::kl_sqrt_n, Measure::pmse_cart, Measure::pmse_logit})
        if (to_string(m) == s) return m;
    throw UsageError("unknown measure '" + s + "' (expected PE, KL_1, KL_sqrt_n, pMSE_cart or pMSE_logit)");
}

bool ordering_correct(const ModelScores& s) { return s[0] > s[1] && s[1] > s[2]; }

std::vector<double> ExperimentResult::proportions() const {
    std::vector<double> out(measures.size(), 0.0);
    if (scores.empty()) return out;
    for (const auto& rep : scores)
        for (std::size_t m = 0; m < measures.size(); ++m) out[m] += ordering_correct(rep[m]) ? 1.0 : 0.0;
    for (auto& v : out) v /= static_cast<double>(scores.size());
    return out;
}

double score_pair(Measure measure, const Dataset& observed, const Dataset& synthetic,
                  const ExperimentOptions& options, std::uint64_t seed) {
    switch (measure) {
    case Measure::pe: {
        const EncodedPair enc = encode_pair(observed, synthetic, options.standardize);
        UlsifConfig cfg = options.ulsif;
        cfg.seed = seed;
        const UlsifFit fit = fit_ulsif(enc.observed, enc.synthetic, cfg);
        return pearson_divergence(fit, enc.observed, enc.synthetic);
    }
    case Measure::kl_1:
        return kl_divergence_knn(observed.numeric_matrix(), synthetic.numeric_matrix(), 1);
    case Measure::kl_sqrt_n: {
        const Matrix obs = observed.numeric_matrix();
        return kl_divergence_knn(obs, synthetic.numeric_matrix(), default_k(obs.rows()));
    }
    case Measure::pmse_cart:
    case Measure::pmse_logit: {
        const StackedSample s = stack_samples(observed.numeric_matrix(), synthetic.numeric_matrix());
        PmseOptions po = options.pmse;
        po.seed = seed;
        try {
            return pmse_ratio(s, measure == Measure::pmse_cart ? PropensityModel::cart : PropensityModel::logit, po)
                .ratio;
        } catch (const NumericError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

ExperimentResult run_ranking_experiment(const MultivariateConfig& config, const std::vector<Measure>& measures,
                                        int replications, const ExperimentOptions& options) {
    validate(config);
    if (replications < 1) throw UsageError("need at least one replication");
    if (measures.empty()) throw UsageError("no measures requested");
    ExperimentResult res;
    res.config = config;
    res.measures = measures;
    res.replications = replications;
    res.scores.assign(static_cast<std::size_t>(replications),
                      std::vector<ModelScores>(measures.size(), ModelScores{}));

#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < replications; ++r) {
        Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(r));
        const Dataset real = gen_multivariate(config, rng);
        std::array<Dataset, kNumModels> syn;
        for (int m = 0; m < kNumModels; ++m) syn[static_cast<std::size_t>(m)] = synthesize(m + 1, real, rng);
        const std::uint64_t fit_seed = rng();
        auto& row = res.scores[static_cast<std::size_t>(r)];
        for (std::size_t k = 0; k < measures.size(); ++k)
            for (int m = 0; m < kNumModels; ++m)
                row[k][static_cast<std::size_t>(m)] =
                    score_pair(measures[k], real, syn[static_cast<std::size_t>(m)], options, fit_seed);
    }
    return res;
}

Vector UnivariateStudyResult::pointwise_variance(const Matrix& m) {
    if (m.rows() < 2) return Vector::Zero(m.cols());
    const Eigen::RowVectorXd mean = m.colwise().mean();
    return ((m.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(m.rows() - 1))
        .transpose()
        .matrix();
}

std::vector<double> linspace(double from, double to, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = count == 1 ? from : from + (to - from) * i / (count - 1);
    return out;
}

UnivariateStudyResult run_univariate_study(Scenario scenario, const UnivariateStudyOptions& options) {
    if (options.replications < 1) throw UsageError("need at least one replication");
    const std::vector<double> grid = options.grid.empty() ? linspace(-1.0, 3.0, 81) : options.grid;
    const auto g = static_cast<Index>(grid.size());

    UnivariateStudyResult res;
    res.scenario = scenario;
    res.grid = Eigen::Map<const Vector>(grid.data(), g);
    res.truth = res.grid.unaryExpr([scenario](double x) { return true_ratio(scenario, x); });
    res.ulsif.resize(options.replications, g);
    if (options.with_knn) res.knn.resize(options.replications, g);
    res.pearson.assign(static_cast<std::size_t>(options.replications), 0.0);
    const Matrix query = res.grid;

#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < options.replications; ++r) {
        Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(r));
        const UnivariateSample s = gen_univariate(scenario, options.n, rng);
        const Matrix obs = s.observed;
        const Matrix syn = s.synthetic;
        UlsifConfig cfg = options.ulsif;
        cfg.seed = rng();
        const UlsifFit fit = fit_ulsif(obs, syn, cfg);
        res.ulsif.row(r) = predict_ratio(fit, query, false).values.transpose();
        res.pearson[static_cast<std::size_t>(r)] = pearson_divergence(fit, obs, syn);
        if (options.with_knn) res.knn.row(r) = knn_ratio_at(obs, syn, query, options.knn_k).transpose();
    }
    return res;
}

}  // namespace drutil::simlab
