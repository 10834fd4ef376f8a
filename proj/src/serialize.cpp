#include "drutil/serialize.hpp"

#include "drutil/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace drutil {

namespace {

void put_number(std::string& out, double v) {
    if (!std::isfinite(v)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
    // keep integral-looking doubles typed as floats on reload
    const std::string_view s(buf);
    if (s.find_first_of(".eEn") == std::string_view::npos) out += ".0";
}

void newline(std::string& out, int indent, int depth) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * depth), ' ');
}

void emit(std::string& out, const json& j, int indent, int depth) {
    switch (j.type()) {
    case json::value_t::number_float:
        put_number(out, j.get<double>());
        return;
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ',';
            first = false;
            newline(out, indent, depth + 1);
            out += json(it.key()).dump();
            out += indent < 0 ? ":" : ": ";
            emit(out, it.value(), indent, depth + 1);
        }
        newline(out, indent, depth);
        out += '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // numeric arrays stay on one line
        bool flat = true;
        for (const auto& e : j) flat = flat && e.is_primitive();
        out += '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i > 0) out += flat && indent >= 0 ? ", " : ",";
            if (!flat) newline(out, indent, depth + 1);
            emit(out, j[i], indent, depth + 1);
        }
        if (!flat) newline(out, indent, depth);
        out += ']';
        return;
    }
    default:
        out += j.dump();
    }
}

const json& field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("model file: missing field '") + key + "'");
    return j.at(key);
}

double number(const json& j) {
    if (j.is_null()) return std::nan("");
    if (!j.is_number()) throw InputError("model file: expected a number");
    return j.get<double>();
}

}  // namespace

std::string dump_json(const json& doc, int indent) {
    std::string out;
    emit(out, doc, indent, 0);
    return out;
}

void write_json(std::ostream& out, const json& doc, int indent) { out << dump_json(doc, indent) << '\n'; }

json to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json to_json(const Matrix& m) {
    json a = json::array();
    for (Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

Vector vector_from_json(const json& j) {
    if (!j.is_array()) throw InputError("model file: expected an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i]);
    return v;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array()) throw InputError("model file: expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const auto cols = static_cast<Index>(j[0].size());
    Matrix m(static_cast<Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = vector_from_json(j[i]);
        if (row.size() != cols) throw InputError("model file: ragged matrix");
        m.row(static_cast<Index>(i)) = row.transpose();
    }
    return m;
}

json to_json(const Scaling& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

Scaling scaling_from_json(const json& j) {
    Scaling s;
    const Vector mean = vector_from_json(field(j, "mean"));
    const Vector sd = vector_from_json(field(j, "sd"));
    s.mean.assign(mean.data(), mean.data() + mean.size());
    s.sd.assign(sd.data(), sd.data() + sd.size());
    return s;
}

json to_json(const UlsifFit& fit) {
    json table = json::array();
    for (const auto& c : fit.cv_table) table.push_back({{"sigma", c.sigma}, {"lambda", c.lambda}, {"score", c.score}});
    json j = {{"sigma", fit.sigma},
              {"lambda", fit.lambda},
              {"num_centers", fit.num_centers()},
              {"dims", fit.dims()},
              {"cv_method", to_string(fit.cv_method)},
              {"folds", fit.folds},
              {"theta", to_json(fit.theta)},
              {"centers", to_json(fit.centers)},
              {"cv_table", table}};
    j["scaling"] = fit.scaling ? to_json(*fit.scaling) : json(nullptr);
    return j;
}

UlsifFit fit_from_json(const json& j) {
    UlsifFit fit;
    fit.sigma = number(field(j, "sigma"));
    fit.lambda = number(field(j, "lambda"));
    fit.theta = vector_from_json(field(j, "theta"));
    fit.centers = matrix_from_json(field(j, "centers"));
    fit.cv_method = cv_method_from_string(field(j, "cv_method").get<std::string>());
    fit.folds = field(j, "folds").get<int>();
    for (const auto& c : field(j, "cv_table"))
        fit.cv_table.push_back({number(field(c, "sigma")), number(field(c, "lambda")), number(field(c, "score"))});
    if (j.contains("scaling") && !j.at("scaling").is_null()) fit.scaling = scaling_from_json(j.at("scaling"));
    if (fit.theta.size() != fit.centers.rows() + 1)
        throw InputError("model file: theta length must be number of centers + 1");
    if (!(fit.sigma > 0.0)) throw InputError("model file: sigma must be positive");
    return fit;
}

json to_json(const Encoding& enc) {
    json cols = json::array();
    for (const auto& c : enc.columns()) {
        json e = {{"name", c.name}, {"kind", to_string(c.kind)}};
        if (c.kind == ColumnKind::categorical) e["levels"] = c.levels;
        cols.push_back(e);
    }
    json j = {{"columns", cols}, {"features", enc.feature_names()}, {"dropped", enc.dropped()}};
    j["scaling"] = enc.scaling() ? to_json(*enc.scaling()) : json(nullptr);
    return j;
}

Encoding encoding_from_json(const json& j) {
    std::vector<ColumnEncoding> cols;
    for (const auto& c : field(j, "columns")) {
        ColumnEncoding ce;
        ce.name = field(c, "name").get<std::string>();
        const auto kind = field(c, "kind").get<std::string>();
        if (kind == "numeric") {
            ce.kind = ColumnKind::numeric;
        } else if (kind == "categorical") {
            ce.kind = ColumnKind::categorical;
            ce.levels = field(c, "levels").get<std::vector<std::string>>();
        } else {
            throw InputError("model file: unknown column kind '" + kind + "'");
        }
        cols.push_back(std::move(ce));
    }
    std::optional<Scaling> scaling;
    if (j.contains("scaling") && !j.at("scaling").is_null()) scaling = scaling_from_json(j.at("scaling"));
    return Encoding::from_parts(std::move(cols), field(j, "dropped").get<std::vector<std::string>>(),
                                std::move(scaling));
}

json to_json(const SavedModel& model) {
    return {{"format", kModelFormat},
            {"version", kModelVersion},
            {"encoding", to_json(model.encoding)},
            {"fit", to_json(model.fit)}};
}

SavedModel model_from_json(const json& j) {
    if (field(j, "format") != kModelFormat) throw InputError("not a drutil model file");
    if (field(j, "version") != kModelVersion) throw InputError("unsupported model file version");
    SavedModel m{fit_from_json(field(j, "fit")), encoding_from_json(field(j, "encoding"))};
    if (static_cast<Index>(m.encoding.feature_names().size()) != m.fit.dims())
        throw InputError("model file: encoding and fit disagree on feature count");
    return m;
}

void save_model(const std::filesystem::path& path, const SavedModel& model) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    write_json(out, to_json(model));
    if (!out) throw InputError("failed writing '" + path.string() + "'");
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace drutil
