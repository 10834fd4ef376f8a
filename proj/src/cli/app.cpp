#include "drutil/cli.hpp"

#include "drutil/dataset.hpp"
#include "drutil/error.hpp"
#include "drutil/formula.hpp"
#include "drutil/inference.hpp"
#include "drutil/knn.hpp"
#include "drutil/pmse.hpp"
#include "drutil/reweight.hpp"
#include "drutil/serialize.hpp"
#include "drutil/simlab.hpp"
#include "drutil/ulsif.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

namespace drutil::cli {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Estimator flags shared by every subcommand that fits a ratio model.
struct FitFlags {
    std::string centers = "200";
    std::string center_source = "pooled";
    std::vector<double> sigma_grid;
    std::vector<double> lambda_grid;
    std::string cv = "kfold";
    int folds = 5;
    bool no_standardize = false;
};

void add_fit_flags(CLI::App* sub, FitFlags& f, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "Master seed for every random choice")->capture_default_str();
    sub->add_option("--centers", f.centers, "Kernel center count, or 'all'")->capture_default_str();
    sub->add_option("--center-source", f.center_source, "Rows centers are drawn from: pooled or numerator")
        ->capture_default_str();
    sub->add_option("--sigma-grid", f.sigma_grid, "Comma-separated kernel widths (default: distance quantiles)")
        ->delimiter(',');
    sub->add_option("--lambda-grid", f.lambda_grid, "Comma-separated ridge strengths (default: 1e3 .. 1e-3)")
        ->delimiter(',');
    sub->add_option("--cv", f.cv, "Hyperparameter selection: kfold, loocv or none")->capture_default_str();
    sub->add_option("--folds", f.folds, "Folds for kfold selection")->capture_default_str();
    sub->add_flag("--no-standardize", f.no_standardize, "Skip pooled standardization of the features");
}

UlsifConfig make_config(const FitFlags& f, std::uint64_t seed) {
    UlsifConfig cfg;
    if (f.centers == "all") {
        cfg.num_centers = std::numeric_limits<Index>::max();
    } else {
        std::size_t used = 0;
        long long b = 0;
        try {
            b = std::stoll(f.centers, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != f.centers.size() || b < 1) throw UsageError("--centers expects a positive count or 'all'");
        cfg.num_centers = static_cast<Index>(b);
    }
    cfg.center_source = center_source_from_string(f.center_source);
    cfg.sigmas = f.sigma_grid;
    cfg.lambdas = f.lambda_grid;
    cfg.cv = cv_method_from_string(f.cv);
    cfg.folds = f.folds;
    cfg.seed = seed;
    return cfg;
}

struct DataPair {
    Dataset observed;
    Dataset synthetic;
};

TypeHints hints_from(const Dataset& data) {
    TypeHints hints;
    for (const auto& c : data.columns()) hints[c.name] = c.kind;
    return hints;
}

// The synthetic file is read with the observed column kinds so both sides
// share one schema.
DataPair load_pair(const std::string& observed, const std::string& synthetic) {
    DataPair p;
    p.observed = load_csv(observed);
    p.observed.set_provenance(Provenance::observed);
    p.synthetic = load_csv(synthetic, hints_from(p.observed));
    p.synthetic.set_provenance(Provenance::synthetic);
    return p;
}

json fit_summary(const UlsifFit& fit, const std::vector<std::string>& features, const std::vector<std::string>& dropped) {
    return {{"sigma", fit.sigma},     {"lambda", fit.lambda},     {"num_centers", fit.num_centers()},
            {"cv_method", to_string(fit.cv_method)}, {"folds", fit.folds}, {"features", features},
            {"dropped", dropped}};
}

// Writes `text` to `path`, or to `out` when no path is given.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
    if (!f) throw InputError("failed writing '" + path + "'");
}

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream s;
    for (std::size_t j = 0; j < header.size(); ++j) s << (j ? "," : "") << header[j];
    s << '\n';
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) s << (j ? "," : "") << r[j];
        s << '\n';
    }
    return s.str();
}

std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\n\r") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void check_format(const std::string& format) {
    if (format != "csv" && format != "json") throw UsageError("--format expects csv or json");
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string observed, synthetic;
    FitFlags fit;
    std::uint64_t seed = 1;
    int test = 0;
    bool reselect = false;
    std::string knn;
    std::string pmse;
    int pmse_resamples = 100;
    std::string ratios_path;
    std::string json_path;
    bool truncate = true;
    bool embed_ratios = false;
};

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    const DataPair data = load_pair(a.observed, a.synthetic);
    const EncodedPair enc = encode_pair(data.observed, data.synthetic, !a.fit.no_standardize);
    const UlsifConfig cfg = make_config(a.fit, a.seed);

    json report;
    UlsifFit fit;
    if (a.test > 0) {
        PermutationOptions po;
        po.permutations = a.test;
        po.seed = a.seed;
        po.reselect = a.reselect;
        po.fit = cfg;
        const PermutationTestResult t = permutation_test(enc.observed, enc.synthetic, po);
        fit = t.fit;
        report["pearson_divergence"] = t.statistic;
        report["test"] = {{"p_value", t.p_value},
                          {"permutations", t.permutations},
                          {"statistic", t.statistic},
                          {"reselect", t.reselect},
                          {"null_mean", std::accumulate(t.null_values.begin(), t.null_values.end(), 0.0) /
                                            static_cast<double>(t.null_values.size())}};
        report["p_value"] = t.p_value;
    } else {
        fit = fit_ulsif(enc.observed, enc.synthetic, cfg);
        report["pearson_divergence"] = pearson_divergence(fit, enc.observed, enc.synthetic);
        report["test"] = nullptr;
        report["p_value"] = nullptr;
    }

    if (!a.knn.empty()) {
        Index k = 0;
        if (a.knn == "sqrt") {
            k = default_k(enc.observed.rows());
        } else {
            try {
                k = static_cast<Index>(std::stoll(a.knn));
            } catch (const std::exception&) {
                throw UsageError("--knn expects a neighbor count or 'sqrt'");
            }
        }
        const KnnRatioResult r = knn_density_ratio(enc.observed.data, enc.synthetic.data, k);
        report["kl_knn"] = {{"k", r.k}, {"value", r.kl}, {"floored", r.floored}};
    } else {
        report["kl_knn"] = nullptr;
    }

    if (!a.pmse.empty()) {
        PmseOptions po;
        po.resamples = a.pmse_resamples;
        po.seed = a.seed;
        const PmseReport r = pmse_ratio(stack_samples(enc.observed.data, enc.synthetic.data),
                                        propensity_model_from_string(a.pmse), po);
        report["pmse"] = {{"model", to_string(r.model)}, {"pmse", r.pmse},
                          {"expected", r.expected},       {"ratio", r.ratio},
                          {"null_method", to_string(r.null_method)}, {"converged", r.converged}};
    } else {
        report["pmse"] = nullptr;
    }

    const RatioVector r_obs = predict_ratio(fit, enc.observed, a.truncate);
    const RatioVector r_syn = predict_ratio(fit, enc.synthetic, a.truncate);
    if (a.embed_ratios)
        report["per_record_ratios"] = {
            {"truncated", a.truncate}, {"observed", to_json(r_obs.values)}, {"synthetic", to_json(r_syn.values)}};
    else
        report["per_record_ratios"] = nullptr;

    report["fit"] = fit_summary(fit, enc.encoding.feature_names(), enc.dropped);
    report["provenance"] = {{"observed", a.observed}, {"synthetic", a.synthetic}, {"seed", a.seed},
                            {"version", kVersion},    {"arguments", argv}};

    if (!a.ratios_path.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (Index i = 0; i < r_obs.values.size(); ++i)
            rows.push_back({"observed", std::to_string(i + 1), num(r_obs.values(i))});
        for (Index i = 0; i < r_syn.values.size(); ++i)
            rows.push_back({"synthetic", std::to_string(i + 1), num(r_syn.values(i))});
        emit(to_csv({"source", "row", "ratio"}, rows), a.ratios_path, out);
    }
    emit(dump_json(report) + "\n", a.json_path, out);
    return kOk;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
    std::string observed;
    std::vector<std::string> candidates;
    FitFlags fit;
    std::uint64_t seed = 1;
    std::string format = "csv";
    std::string out_path;
};

int cmd_compare(const CompareArgs& a, std::ostream& out) {
    check_format(a.format);
    if (a.candidates.size() < 2) throw UsageError("compare needs at least two synthetic files");
    const Dataset observed = load_csv(a.observed);
    const TypeHints hints = hints_from(observed);
    const UlsifConfig cfg = make_config(a.fit, a.seed);

    struct Row {
        std::size_t position;
        double pe;
        UlsifFit fit;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < a.candidates.size(); ++i) {
        const Dataset syn = load_csv(a.candidates[i], hints);
        const EncodedPair enc = encode_pair(observed, syn, !a.fit.no_standardize);
        UlsifFit fit = fit_ulsif(enc.observed, enc.synthetic, cfg);
        const double pe = pearson_divergence(fit, enc.observed, enc.synthetic);
        rows.push_back({i + 1, pe, std::move(fit)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.pe < y.pe; });

    if (a.format == "json") {
        json list = json::array();
        for (std::size_t r = 0; r < rows.size(); ++r)
            list.push_back({{"rank", r + 1},
                            {"position", rows[r].position},
                            {"file", a.candidates[rows[r].position - 1]},
                            {"pearson_divergence", rows[r].pe},
                            {"sigma", rows[r].fit.sigma},
                            {"lambda", rows[r].fit.lambda}});
        emit(dump_json({{"observed", a.observed}, {"seed", a.seed}, {"version", kVersion}, {"ranking", list}}) +
                 "\n",
             a.out_path, out);
    } else {
        std::vector<std::vector<std::string>> table;
        for (std::size_t r = 0; r < rows.size(); ++r)
            table.push_back({std::to_string(r + 1), std::to_string(rows[r].position),
                             csv_field(a.candidates[rows[r].position - 1]), num(rows[r].pe),
                             num(rows[r].fit.sigma), num(rows[r].fit.lambda)});
        emit(to_csv({"rank", "position", "file", "pearson_divergence", "sigma", "lambda"}, table), a.out_path, out);
    }
    return kOk;
}

// ---------------------------------------------------------------- simulate

struct UnivariateArgs {
    std::string scenario;
    Index n = 250;
    int reps = 100;
    Index knn_k = 15;
    bool no_knn = false;
    double grid_from = -1.0;
    double grid_to = 3.0;
    int grid_points = 81;
    std::string raw_path;
    std::string out_path;
    FitFlags fit;
    std::uint64_t seed = 1;
};

int cmd_univariate(const UnivariateArgs& a, std::ostream& out) {
    if (a.reps < 1) throw UsageError("--reps must be at least 1");
    if (a.grid_points < 2) throw UsageError("--grid-points must be at least 2");
    simlab::UnivariateStudyOptions o;
    o.n = a.n;
    o.replications = a.reps;
    o.grid = simlab::linspace(a.grid_from, a.grid_to, a.grid_points);
    o.knn_k = a.knn_k;
    o.with_knn = !a.no_knn;
    o.ulsif = make_config(a.fit, a.seed);
    o.seed = a.seed;
    const auto res = simlab::run_univariate_study(simlab::scenario_from_string(a.scenario), o);

    const Vector um = res.ulsif_mean();
    const Vector uv = simlab::UnivariateStudyResult::pointwise_variance(res.ulsif);
    std::vector<std::string> header{"x", "true_ratio", "ulsif_mean", "ulsif_var"};
    Vector km, kv;
    if (o.with_knn) {
        km = res.knn_mean();
        kv = simlab::UnivariateStudyResult::pointwise_variance(res.knn);
        header.insert(header.end(), {"knn_mean", "knn_var"});
    }
    std::vector<std::vector<std::string>> rows;
    for (Index g = 0; g < res.grid.size(); ++g) {
        std::vector<std::string> r{num(res.grid(g)), num(res.truth(g)), num(um(g)), num(uv(g))};
        if (o.with_knn) r.insert(r.end(), {num(km(g)), num(kv(g))});
        rows.push_back(std::move(r));
    }
    if (!a.raw_path.empty()) {
        std::vector<std::vector<std::string>> raw;
        for (std::size_t r = 0; r < res.pearson.size(); ++r)
            raw.push_back({std::to_string(r + 1), num(res.pearson[r])});
        emit(to_csv({"replication", "pearson_divergence"}, raw), a.raw_path, out);
    }
    emit(to_csv(header, rows), a.out_path, out);
    return kOk;
}

struct MultivariateArgs {
    Index n = 1000;
    int dims = 5;
    int reps = 200;
    double correlation = 0.5;
    std::vector<std::string> measures{"PE"};
    int pmse_resamples = 100;
    std::string raw_path;
    std::string out_path;
    std::string format = "csv";
    FitFlags fit;
    std::uint64_t seed = 1;
};

int cmd_multivariate(const MultivariateArgs& a, std::ostream& out) {
    check_format(a.format);
    if (a.reps < 1) throw UsageError("--reps must be at least 1");
    simlab::MultivariateConfig c;
    c.n = a.n;
    c.dims = a.dims;
    c.correlation = a.correlation;
    c.seed = a.seed;
    std::vector<simlab::Measure> measures;
    for (const auto& m : a.measures) measures.push_back(simlab::measure_from_string(m));
    simlab::ExperimentOptions o;
    o.ulsif = make_config(a.fit, a.seed);
    o.standardize = !a.fit.no_standardize;
    o.pmse.resamples = a.pmse_resamples;
    const auto res = simlab::run_ranking_experiment(c, measures, a.reps, o);
    const auto props = res.proportions();

    if (!a.raw_path.empty()) {
        std::vector<std::vector<std::string>> raw;
        for (std::size_t r = 0; r < res.scores.size(); ++r)
            for (std::size_t m = 0; m < measures.size(); ++m) {
                const auto& s = res.scores[r][m];
                raw.push_back({std::to_string(r + 1), simlab::to_string(measures[m]), num(s[0]), num(s[1]),
                               num(s[2]), simlab::ordering_correct(s) ? "1" : "0"});
            }
        emit(to_csv({"replication", "measure", "model1", "model2", "model3", "ordering_correct"}, raw), a.raw_path,
             out);
    }
    if (a.format == "json") {
        json row = {{"n", c.n}, {"D", c.dims}, {"replications", a.reps}, {"seed", a.seed}};
        json p = json::object();
        for (std::size_t m = 0; m < measures.size(); ++m) p[simlab::to_string(measures[m])] = props[m];
        row["proportions"] = p;
        emit(dump_json(row) + "\n", a.out_path, out);
    } else {
        std::vector<std::string> header{"n", "D"};
        std::vector<std::string> values{std::to_string(c.n), std::to_string(c.dims)};
        for (std::size_t m = 0; m < measures.size(); ++m) {
            header.push_back(simlab::to_string(measures[m]));
            values.push_back(num(props[m]));
        }
        emit(to_csv(header, {values}), a.out_path, out);
    }
    return kOk;
}

// ---------------------------------------------------------------- reweight

struct ReweightArgs {
    std::string observed, synthetic;
    std::string formula;
    FitFlags fit;
    std::uint64_t seed = 1;
    bool normalize = true;
    std::optional<double> max_weight;
    std::string weights_path;
    std::string format = "csv";
    std::string out_path;
};

// True when both matrices hold the same rows, in any order.
bool same_rows(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    const auto sorted = [](const Matrix& m) {
        std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
        for (Index i = 0; i < m.rows(); ++i) {
            const Vector r = m.row(i).transpose();
            rows[static_cast<std::size_t>(i)].assign(r.data(), r.data() + r.size());
        }
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    return sorted(a) == sorted(b);
}

int cmd_reweight(const ReweightArgs& a, std::ostream& out) {
    check_format(a.format);
    const Formula formula = Formula::parse(a.formula);
    const DataPair data = load_pair(a.observed, a.synthetic);
    const Design d_obs = build_design(formula, data.observed, data.observed);
    const Design d_syn = build_design(formula, data.synthetic, data.observed);

    const EncodedPair enc = encode_pair(data.observed, data.synthetic, !a.fit.no_standardize);
    const UlsifFit fit = fit_ulsif(enc.observed, enc.synthetic, make_config(a.fit, a.seed));
    WeightOptions wo;
    wo.normalize = a.normalize;
    wo.max_weight = a.max_weight;
    WeightVector w = importance_weights(fit, enc.synthetic, wo);
    // Identical samples have a ratio of exactly one.
    if (same_rows(enc.observed.data, enc.synthetic.data)) w.weights.setOnes();

    const RegressionResult obs = ordinary_least_squares(d_obs.x, d_obs.y, d_obs.names);
    const RegressionResult syn = ordinary_least_squares(d_syn.x, d_syn.y, d_syn.names);
    const RegressionResult rew = weighted_least_squares(d_syn.x, d_syn.y, w.weights, d_syn.names);

    if (!a.weights_path.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (Index i = 0; i < w.weights.size(); ++i) rows.push_back({num(w.weights(i))});
        emit(to_csv({"weight"}, rows), a.weights_path, out);
    }
    if (a.format == "json") {
        json terms = json::array();
        for (std::size_t j = 0; j < obs.names.size(); ++j) {
            const auto k = static_cast<Index>(j);
            terms.push_back({{"term", obs.names[j]},
                             {"observed", obs.coefficients(k)},
                             {"synthetic", syn.coefficients(k)},
                             {"reweighted", rew.coefficients(k)}});
        }
        emit(dump_json({{"formula", a.formula},
                        {"coefficients", terms},
                        {"fit", fit_summary(fit, enc.encoding.feature_names(), enc.dropped)},
                        {"seed", a.seed},
                        {"version", kVersion}}) +
                 "\n",
             a.out_path, out);
    } else {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t j = 0; j < obs.names.size(); ++j) {
            const auto k = static_cast<Index>(j);
            rows.push_back({csv_field(obs.names[j]), num(obs.coefficients(k)), num(syn.coefficients(k)),
                            num(rew.coefficients(k))});
        }
        emit(to_csv({"term", "observed", "synthetic", "reweighted"}, rows), a.out_path, out);
    }
    return kOk;
}

// ------------------------------------------------------------ fit / predict

struct FitArgs {
    std::string observed, synthetic;
    FitFlags fit;
    std::uint64_t seed = 1;
    std::string out_path;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
    const DataPair data = load_pair(a.observed, a.synthetic);
    const EncodedPair enc = encode_pair(data.observed, data.synthetic, !a.fit.no_standardize);
    SavedModel model{fit_ulsif(enc.observed, enc.synthetic, make_config(a.fit, a.seed)), enc.encoding};
    emit(dump_json(to_json(model)) + "\n", a.out_path, out);
    return kOk;
}

struct PredictArgs {
    std::string model;
    std::string data;
    bool truncate = true;
    std::string out_path;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
    const SavedModel model = load_model(a.model);
    TypeHints hints;
    for (const auto& c : model.encoding.columns()) hints[c.name] = c.kind;
    const Dataset data = load_csv(a.data, hints);
    const RatioVector r = predict_ratio(model.fit, model.encoding.apply(data), a.truncate);
    std::vector<std::vector<std::string>> rows;
    for (Index i = 0; i < r.values.size(); ++i) rows.push_back({num(r.values(i))});
    emit(to_csv({"ratio"}, rows), a.out_path, out);
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Density-ratio utility measures for synthetic tabular data", "drutil"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Global and local utility of one synthetic data set");
    evaluate->add_option("observed", ev.observed, "Observed data CSV")->required();
    evaluate->add_option("synthetic", ev.synthetic, "Synthetic data CSV")->required();
    add_fit_flags(evaluate, ev.fit, ev.seed);
    evaluate->add_option("--test", ev.test, "Run a permutation test with B permutations");
    evaluate->add_flag("--reselect", ev.reselect, "Re-select hyperparameters inside every permutation");
    evaluate->add_option("--knn", ev.knn, "Also report the k-NN KL divergence (a count, or 'sqrt')");
    evaluate->add_option("--pmse", ev.pmse, "Also report the pMSE ratio: logit or cart");
    evaluate->add_option("--pmse-resamples", ev.pmse_resamples, "Permutations for the cart null")
        ->capture_default_str();
    evaluate->add_option("--ratios", ev.ratios_path, "Write per-record ratios to this CSV");
    evaluate->add_option("--json", ev.json_path, "Write the report here instead of stdout");
    evaluate->add_flag("--truncate,!--no-truncate", ev.truncate, "Clamp exported ratios at zero (default on)");
    evaluate->add_flag("--embed-ratios", ev.embed_ratios, "Include per-record ratios in the report");

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "Rank several synthetic data sets by Pearson divergence");
    compare->add_option("observed", cmp.observed, "Observed data CSV")->required();
    compare->add_option("synthetic", cmp.candidates, "Synthetic data CSVs")->required();
    add_fit_flags(compare, cmp.fit, cmp.seed);
    compare->add_option("--format", cmp.format, "csv or json")->capture_default_str();
    compare->add_option("--out", cmp.out_path, "Write the ranking here instead of stdout");

    auto* simulate = app.add_subcommand("simulate", "Reproduce the simulation studies");
    simulate->require_subcommand(1);
    UnivariateArgs uv;
    auto* univariate = simulate->add_subcommand("univariate", "Ratio recovery for one univariate scenario");
    univariate->add_option("--scenario", uv.scenario, "laplace, lognormal, t_ls or normal")->required();
    univariate->add_option("--n", uv.n, "Rows per sample")->capture_default_str();
    univariate->add_option("--reps", uv.reps, "Replications")->capture_default_str();
    univariate->add_option("--knn-k", uv.knn_k, "Neighbors for the k-NN estimate")->capture_default_str();
    univariate->add_flag("--no-knn", uv.no_knn, "Skip the k-NN estimate");
    univariate->add_option("--grid-from", uv.grid_from, "First grid point")->capture_default_str();
    univariate->add_option("--grid-to", uv.grid_to, "Last grid point")->capture_default_str();
    univariate->add_option("--grid-points", uv.grid_points, "Grid size")->capture_default_str();
    univariate->add_option("--raw", uv.raw_path, "Write per-replication Pearson divergences here");
    univariate->add_option("--out", uv.out_path, "Write the grid table here instead of stdout");
    add_fit_flags(univariate, uv.fit, uv.seed);

    MultivariateArgs mv;
    auto* multivariate = simulate->add_subcommand("multivariate", "Ranking of three synthesis models");
    multivariate->add_option("--n", mv.n, "Rows per data set")->capture_default_str();
    multivariate->add_option("--D", mv.dims, "Number of variables")->capture_default_str();
    multivariate->add_option("--reps", mv.reps, "Replications")->capture_default_str();
    multivariate->add_option("--correlation", mv.correlation, "Correlation of the linear block")
        ->capture_default_str();
    multivariate->add_option("--measures", mv.measures, "PE, KL_1, KL_sqrt_n, pMSE_cart, pMSE_logit")
        ->delimiter(',')
        ->capture_default_str();
    multivariate->add_option("--pmse-resamples", mv.pmse_resamples, "Permutations for the cart null")
        ->capture_default_str();
    multivariate->add_option("--raw", mv.raw_path, "Write per-replication scores here");
    multivariate->add_option("--out", mv.out_path, "Write the proportions table here instead of stdout");
    multivariate->add_option("--format", mv.format, "csv or json")->capture_default_str();
    add_fit_flags(multivariate, mv.fit, mv.seed);

    ReweightArgs rw;
    auto* reweight = app.add_subcommand("reweight", "Importance-weighted regression on the synthetic data");
    reweight->add_option("observed", rw.observed, "Observed data CSV")->required();
    reweight->add_option("synthetic", rw.synthetic, "Synthetic data CSV")->required();
    reweight->add_option("--formula", rw.formula, "Model such as 'y ~ a + pow(b,2) + log1p(c)'")->required();
    add_fit_flags(reweight, rw.fit, rw.seed);
    reweight->add_flag("--normalize-weights,!--no-normalize-weights", rw.normalize,
                       "Rescale weights to mean 1 (default on)");
    reweight->add_option("--max-weight", rw.max_weight, "Cap weights before normalization");
    reweight->add_option("--weights", rw.weights_path, "Write the synthetic-row weights to this CSV");
    reweight->add_option("--format", rw.format, "csv or json")->capture_default_str();
    reweight->add_option("--out", rw.out_path, "Write the coefficient table here instead of stdout");

    FitArgs ft;
    auto* fitcmd = app.add_subcommand("fit", "Fit a ratio model and serialize it as JSON");
    fitcmd->add_option("observed", ft.observed, "Observed data CSV")->required();
    fitcmd->add_option("synthetic", ft.synthetic, "Synthetic data CSV")->required();
    add_fit_flags(fitcmd, ft.fit, ft.seed);
    fitcmd->add_option("--out", ft.out_path, "Write the model here instead of stdout");

    PredictArgs pr;
    auto* predict = app.add_subcommand("predict", "Ratios for new rows from a serialized model");
    predict->add_option("model", pr.model, "Model JSON written by 'fit'")->required();
    predict->add_option("data", pr.data, "CSV with the model's columns")->required();
    predict->add_flag("--truncate,!--no-truncate", pr.truncate, "Clamp ratios at zero (default on)");
    predict->add_option("--out", pr.out_path, "Write ratios here instead of stdout");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kUsage;
    }

    try {
        if (evaluate->parsed()) return cmd_evaluate(ev, args, out);
        if (compare->parsed()) return cmd_compare(cmp, out);
        if (univariate->parsed()) return cmd_univariate(uv, out);
        if (multivariate->parsed()) return cmd_multivariate(mv, out);
        if (reweight->parsed()) return cmd_reweight(rw, out);
        if (fitcmd->parsed()) return cmd_fit(ft, out);
        if (predict->parsed()) return cmd_predict(pr, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInput;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    }
    err << "error: no command given\n";
    return kUsage;
}

}  // namespace drutil::cli
