#pragma once

#include "drutil/dataset.hpp"
#include "drutil/pmse.hpp"
#include "drutil/random.hpp"
#include "drutil/ulsif.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace drutil::simlab {

// Observed-data laws of the univariate study. All have mean 1 and
// variance 2; the synthetic law is always N(1, 2).
enum class Scenario { laplace, lognormal, t_ls, normal };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);
inline constexpr std::array<Scenario, 4> kScenarios{Scenario::laplace, Scenario::lognormal, Scenario::t_ls,
                                                    Scenario::normal};

struct UnivariateSample {
    Vector observed;
    Vector synthetic;
};

UnivariateSample gen_univariate(Scenario scenario, Index n, Rng& rng);
UnivariateSample gen_univariate(Scenario scenario, Index n, std::uint64_t seed);

double observed_density(Scenario scenario, double x);
double synthetic_density(double x);
// observed_density / synthetic_density
double true_ratio(Scenario scenario, double x);

struct MultivariateConfig {
    int dims = 5;
    Index n = 1000;
    double correlation = 0.5;
    std::uint64_t seed = 1;
};

void validate(const MultivariateConfig& config);

// Number of leading multivariate-normal columns: D - 1 for D = 5, D - 5 otherwise.
int linear_block(int dims);

Dataset gen_multivariate(const MultivariateConfig& config, Rng& rng);
Dataset gen_multivariate(const MultivariateConfig& config);

// Synthesis models of increasing fidelity:
//   1: independent normals (means and variances only)
//   2: multivariate normal (adds covariances)
//   3: multivariate normal linear block plus regression-generated
//      non-linear columns (correctly specified)
Dataset synthesize(int model, const Dataset& data, Rng& rng);
Dataset synthesize(int model, const Dataset& data, std::uint64_t seed);

enum class Measure { pe, kl_1, kl_sqrt_n, pmse_cart, pmse_logit };
inline constexpr int kNumModels = 3;

std::string to_string(Measure m);
Measure measure_from_string(const std::string& s);

struct ExperimentOptions {
    UlsifConfig ulsif;
    PmseOptions pmse;
    bool standardize = true;
};

// Divergence-type scores for models 1..3, in that order.
using ModelScores = std::array<double, kNumModels>;

// Strict score1 > score2 > score3; NaN counts as incorrect.
bool ordering_correct(const ModelScores& scores);

struct ExperimentResult {
    MultivariateConfig config;
    std::vector<Measure> measures;
    int replications = 0;
    // scores[rep][measure]
    std::vector<std::vector<ModelScores>> scores;

    std::vector<double> proportions() const;
};

ExperimentResult run_ranking_experiment(const MultivariateConfig& config, const std::vector<Measure>& measures,
                                        int replications, const ExperimentOptions& options = {});

// Score one observed/synthetic pair with one measure.
double score_pair(Measure measure, const Dataset& observed, const Dataset& synthetic,
                  const ExperimentOptions& options, std::uint64_t seed);

struct UnivariateStudyOptions {
    Index n = 250;
    int replications = 100;
    std::vector<double> grid;  // empty: 81 points on [-1, 3]
    Index knn_k = 15;
    bool with_knn = true;
    UlsifConfig ulsif;
    std::uint64_t seed = 1;
};

struct UnivariateStudyResult {
    Scenario scenario = Scenario::normal;
    Vector grid;
    Vector truth;
    Matrix ulsif;  // replications x grid
    Matrix knn;    // replications x grid (empty without k-NN)
    std::vector<double> pearson;

    Vector ulsif_mean() const { return ulsif.colwise().mean().transpose(); }
    Vector knn_mean() const { return knn.colwise().mean().transpose(); }
    // Per-grid-point variance across replications (denominator R - 1).
    static Vector pointwise_variance(const Matrix& m);
};

std::vector<double> linspace(double from, double to, int count);

UnivariateStudyResult run_univariate_study(Scenario scenario, const UnivariateStudyOptions& options);

}  // namespace drutil::simlab
