#include "drutil/pmse.hpp"

#include "drutil/error.hpp"
#include "drutil/random.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace drutil {

StackedSample stack_samples(const Matrix& observed, const Matrix& synthetic) {
    if (observed.cols() != synthetic.cols()) throw InputError("stack_samples: column counts differ");
    StackedSample s;
    s.n_obs = observed.rows();
    s.n_syn = synthetic.rows();
    s.x.resize(s.n_obs + s.n_syn, observed.cols());
    s.x << observed, synthetic;
    s.labels = Eigen::VectorXi::Zero(s.n_obs + s.n_syn);
    s.labels.tail(s.n_syn).setOnes();
    return s;
}

namespace {

Vector logistic(const Vector& eta) {
    return eta.unaryExpr([](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
    });
}

Matrix with_intercept(const Matrix& x) {
    Matrix d(x.rows(), x.cols() + 1);
    d.col(0).setOnes();
    d.rightCols(x.cols()) = x;
    return d;
}

}  // namespace

LogitResult fit_logit(const StackedSample& sample, int max_iter, double tol) {
    const Matrix design = with_intercept(sample.x);
    const Index n = design.rows();
    const Index p = design.cols();
    if (n <= p) throw InputError("fit_logit: need more rows than parameters");
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < p) throw InputError("fit_logit: rank-deficient design");

    const Vector y = sample.labels.cast<double>();
    LogitResult res;
    res.coefficients = Vector::Zero(p);
    Vector prob = Vector::Constant(n, 0.5);
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        const Vector grad = design.transpose() * (y - prob);
        if (grad.norm() / static_cast<double>(n) < tol) {
            res.converged = true;
            break;
        }
        const Vector w = (prob.array() * (1.0 - prob.array())).max(1e-12).matrix();
        const Matrix hess = design.transpose() * w.asDiagonal() * design;
        const Vector step = hess.ldlt().solve(grad);
        if (!step.allFinite()) break;
        res.coefficients += step;
        prob = logistic(design * res.coefficients);
    }
    res.probabilities = prob;
    constexpr double eps = 1e-10;
    res.separated = (prob.array() < eps).any() || (prob.array() > 1.0 - eps).any();
    if (res.separated) res.converged = false;
    return res;
}

namespace {

// Total impurity of a node relative to the full sample: (n / N) * gini.
double weighted_gini(double n, double s, double total) {
    if (n <= 0.0) return 0.0;
    return 2.0 * s * (n - s) / (n * total);
}

class CartBuilder {
public:
    CartBuilder(const StackedSample& sample, const Eigen::VectorXi& labels, const CartOptions& opt)
        : x_(sample.x), y_(labels), opt_(opt), total_(static_cast<double>(sample.size())) {
        probs_ = Vector::Zero(sample.size());
        const double s = labels.sum();
        root_ = weighted_gini(total_, s, total_);
    }

    CartResult run() {
        std::vector<Index> idx(static_cast<std::size_t>(x_.rows()));
        std::iota(idx.begin(), idx.end(), Index{0});
        grow(idx, 0);
        return {probs_, splits_, leaves_};
    }

private:
    void grow(std::vector<Index>& idx, int depth) {
        const auto n = static_cast<Index>(idx.size());
        Index s = 0;
        for (Index i : idx) s += y_(i);

        if (n >= 2 * opt_.min_node && depth < opt_.max_depth && s > 0 && s < n) {
            CartSplit best;
            double best_left_max = 0.0;
            std::vector<Index> order(idx);
            const double parent = weighted_gini(static_cast<double>(n), static_cast<double>(s), total_);
            for (Index j = 0; j < x_.cols(); ++j) {
                std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return x_(a, j) < x_(b, j); });
                Index left_syn = 0;
                for (Index i = 1; i < n; ++i) {
                    left_syn += y_(order[static_cast<std::size_t>(i - 1)]);
                    if (i < opt_.min_node || n - i < opt_.min_node) continue;
                    const double lo = x_(order[static_cast<std::size_t>(i - 1)], j);
                    const double hi = x_(order[static_cast<std::size_t>(i)], j);
                    if (!(lo < hi)) continue;
                    const double gain = parent -
                                        weighted_gini(static_cast<double>(i), static_cast<double>(left_syn), total_) -
                                        weighted_gini(static_cast<double>(n - i),
                                                      static_cast<double>(s - left_syn), total_);
                    if (gain > best.improvement) {
                        best = {depth, j, lo + 0.5 * (hi - lo), gain};
                        best_left_max = lo;
                    }
                }
            }
            if (best.column >= 0 && best.improvement >= opt_.cp * root_) {
                splits_.push_back(best);
                std::vector<Index> left, right;
                for (Index i : idx) (x_(i, best.column) <= best_left_max ? left : right).push_back(i);
                idx.clear();
                idx.shrink_to_fit();
                grow(left, depth + 1);
                grow(right, depth + 1);
                return;
            }
        }
        const double p = static_cast<double>(s) / static_cast<double>(n);
        for (Index i : idx) probs_(i) = p;
        ++leaves_;
    }

    const Matrix& x_;
    const Eigen::VectorXi& y_;
    CartOptions opt_;
    double total_;
    double root_ = 0.0;
    Vector probs_;
    std::vector<CartSplit> splits_;
    Index leaves_ = 0;
};

}  // namespace

CartResult fit_cart(const StackedSample& sample, const CartOptions& options) {
    if (options.min_node < 1) throw UsageError("fit_cart: min_node must be >= 1");
    if (sample.size() == 0) throw InputError("fit_cart: empty sample");
    return CartBuilder(sample, sample.labels, options).run();
}

double pmse(const Vector& probabilities, Index n_syn, Index n_total) {
    if (probabilities.size() == 0) throw InputError("pmse: empty probability vector");
    if (n_total <= 0) throw InputError("pmse: N must be positive");
    if ((probabilities.array() < 0.0).any() || (probabilities.array() > 1.0).any())
        throw InputError("pmse: probabilities must lie in [0, 1]");
    const double c = static_cast<double>(n_syn) / static_cast<double>(n_total);
    return (probabilities.array() - c).square().sum() / static_cast<double>(n_total);
}

double expected_pmse_logit(Index k, Index n_obs, Index n_syn) {
    if (k < 2) throw UsageError("expected_pmse_logit: need k >= 2 (at least one predictor)");
    if (n_obs <= 0 || n_syn <= 0) throw UsageError("expected_pmse_logit: sample sizes must be positive");
    const double total = static_cast<double>(n_obs + n_syn);
    const double a = static_cast<double>(n_obs) / total;
    const double b = static_cast<double>(n_syn) / total;
    return (static_cast<double>(k - 1) / total) * a * a * b;
}

std::string to_string(PropensityModel m) { return m == PropensityModel::logit ? "logit" : "cart"; }

PropensityModel propensity_model_from_string(const std::string& s) {
    if (s == "logit") return PropensityModel::logit;
    if (s == "cart") return PropensityModel::cart;
    throw UsageError("unknown propensity model '" + s + "' (expected logit or cart)");
}

std::string to_string(NullMethod m) { return m == NullMethod::closed_form ? "closed_form" : "permutation"; }

PmseReport pmse_ratio(const StackedSample& sample, PropensityModel model, const PmseOptions& options) {
    PmseReport rep;
    rep.model = model;
    const Index total = sample.size();
    if (model == PropensityModel::logit) {
        const LogitResult fit = fit_logit(sample);
        rep.converged = fit.converged;
        if (!fit.converged)
            std::clog << "warning: logistic propensity model did not converge"
                      << (fit.separated ? " (separation)" : "") << "; using the last iterate\n";
        rep.pmse = pmse(fit.probabilities, sample.n_syn, total);
        rep.expected = expected_pmse_logit(sample.x.cols() + 1, sample.n_obs, sample.n_syn);
        rep.null_method = NullMethod::closed_form;
    } else {
        if (options.resamples < 20) throw UsageError("pmse_ratio: cart null needs at least 20 resamples");
        rep.pmse = pmse(fit_cart(sample, options.cart).probabilities, sample.n_syn, total);
        std::vector<double> null(static_cast<std::size_t>(options.resamples));
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < options.resamples; ++r) {
            Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(r));
            StackedSample perm = sample;
            std::shuffle(perm.labels.data(), perm.labels.data() + perm.labels.size(), rng);
            null[static_cast<std::size_t>(r)] = pmse(fit_cart(perm, options.cart).probabilities, sample.n_syn, total);
        }
        rep.expected = std::accumulate(null.begin(), null.end(), 0.0) / static_cast<double>(null.size());
        rep.null_method = NullMethod::permutation;
    }
    if (!(rep.expected > 0.0)) throw NumericError("pmse_ratio: null expectation is zero (degenerate model)");
    rep.ratio = rep.pmse / rep.expected;
    return rep;
}

}  // namespace drutil
