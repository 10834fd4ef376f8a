#pragma once

#include "drutil/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace drutil {

// Observed rows followed by synthetic rows; label 1 marks a synthetic row.
struct StackedSample {
    Matrix x;
    Eigen::VectorXi labels;
    Index n_obs = 0;
    Index n_syn = 0;

    Index size() const { return n_obs + n_syn; }
};

StackedSample stack_samples(const Matrix& observed, const Matrix& synthetic);

struct LogitResult {
    Vector coefficients;  // intercept first
    Vector probabilities;
    int iterations = 0;
    bool converged = false;
    // Some fitted probability is numerically 0 or 1 (complete or
    // quasi-complete separation).
    bool separated = false;
};

// Main-effects logistic regression by iteratively reweighted least squares.
// Stops when ||gradient|| / N < tol or after max_iter Newton steps.
LogitResult fit_logit(const StackedSample& sample, int max_iter = 50, double tol = 1e-10);

struct CartOptions {
    Index min_node = 5;
    int max_depth = 30;
    double cp = 1e-4;
};

struct CartSplit {
    int depth = 0;
    Index column = -1;
    double threshold = 0.0;
    double improvement = 0.0;
};

struct CartResult {
    Vector probabilities;
    // Accepted splits in depth-first (left before right) order.
    std::vector<CartSplit> splits;
    Index leaves = 0;
};

// Classification tree grown by Gini impurity on single-column thresholds.
// Rows with x <= threshold go left.
CartResult fit_cart(const StackedSample& sample, const CartOptions& options = {});

// (1/N) sum (pi_i - n_syn/N)^2
double pmse(const Vector& probabilities, Index n_syn, Index n_total);

// Null expectation for a logistic model with k parameters (intercept included).
double expected_pmse_logit(Index k, Index n_obs, Index n_syn);

enum class PropensityModel { logit, cart };
enum class NullMethod { closed_form, permutation };

std::string to_string(PropensityModel m);
PropensityModel propensity_model_from_string(const std::string& s);
std::string to_string(NullMethod m);

struct PmseReport {
    double pmse = 0.0;
    double expected = 0.0;
    double ratio = 0.0;
    PropensityModel model = PropensityModel::logit;
    NullMethod null_method = NullMethod::closed_form;
    bool converged = true;
};

struct PmseOptions {
    int resamples = 100;
    std::uint64_t seed = 1;
    CartOptions cart;
};

PmseReport pmse_ratio(const StackedSample& sample, PropensityModel model, const PmseOptions& options = {});

}  // namespace drutil
