#include "drutil/dataset.hpp"

#include "drutil/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace drutil {

std::string to_string(ColumnKind kind) {
    return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

bool Column::is_missing(std::size_t row) const {
    if (kind == ColumnKind::numeric) return std::isnan(numeric.at(row));
    return codes.at(row) < 0;
}

Dataset::Dataset(std::vector<Column> columns, Provenance provenance)
    : columns_(std::move(columns)), provenance_(provenance) {
    if (!columns_.empty()) rows_ = columns_.front().size();
    for (const auto& c : columns_) {
        if (c.size() != rows_) throw InputError("column '" + c.name + "' has " + std::to_string(c.size()) +
                                                " values, expected " + std::to_string(rows_));
    }
}

Dataset Dataset::from_matrix(const Matrix& values, const std::vector<std::string>& names, Provenance provenance) {
    if (static_cast<Index>(names.size()) != values.cols()) throw InputError("column name count does not match matrix");
    std::vector<Column> cols;
    cols.reserve(names.size());
    for (Index j = 0; j < values.cols(); ++j) {
        Column c;
        c.name = names[static_cast<std::size_t>(j)];
        c.numeric.assign(values.col(j).data(), values.col(j).data() + values.rows());
        cols.push_back(std::move(c));
    }
    return Dataset(std::move(cols), provenance);
}

const Column& Dataset::column(const std::string& name) const {
    auto j = find(name);
    if (!j) throw InputError("unknown column '" + name + "'");
    return columns_[*j];
}

std::optional<std::size_t> Dataset::find(const std::string& name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j)
        if (columns_[j].name == name) return j;
    return std::nullopt;
}

Matrix Dataset::numeric_matrix() const {
    Matrix m(static_cast<Index>(rows_), static_cast<Index>(columns_.size()));
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const auto& c = columns_[j];
        if (c.kind != ColumnKind::numeric) throw InputError("column '" + c.name + "' is not numeric");
        for (std::size_t i = 0; i < rows_; ++i) {
            if (std::isnan(c.numeric[i]))
                throw InputError("missing value in column '" + c.name + "', row " + std::to_string(i + 1));
            m(static_cast<Index>(i), static_cast<Index>(j)) = c.numeric[i];
        }
    }
    return m;
}

namespace {

// Reads one RFC-4180 record. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    std::string field;
    bool quoted = false;
    bool any = false;
    char ch;
    while (in.get(ch)) {
        any = true;
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    in.get(ch);
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            break;
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get(ch);
            break;
        } else {
            field.push_back(ch);
        }
    }
    if (quoted) throw InputError("unterminated quoted field");
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

bool is_missing_token(const std::string& s) { return s.empty() || s == "NA"; }

std::optional<double> parse_double(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return std::nullopt;
    const char* first = s.data() + b;
    const char* last = s.data() + e + 1;
    if (*first == '+') ++first;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) return std::nullopt;
    return v;
}

bool blank_record(const std::vector<std::string>& f) { return f.size() == 1 && f[0].empty(); }

}  // namespace

Dataset read_csv(std::istream& in, const TypeHints& hints) {
    std::vector<std::string> header;
    if (!read_record(in, header) || blank_record(header)) throw InputError("empty CSV input (no header row)");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    std::vector<std::vector<std::string>> cells(header.size());
    std::vector<std::string> rec;
    std::size_t row = 0;
    while (read_record(in, rec)) {
        if (blank_record(rec)) continue;
        ++row;
        if (rec.size() != header.size())
            throw InputError("ragged CSV: row " + std::to_string(row) + " has " + std::to_string(rec.size()) +
                             " fields, header has " + std::to_string(header.size()));
        for (std::size_t j = 0; j < rec.size(); ++j) cells[j].push_back(std::move(rec[j]));
    }
    if (row == 0) throw InputError("CSV input has a header but no data rows");

    for (const auto& [name, kind] : hints) {
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw InputError("type hint for unknown column '" + name + "'");
    }

    std::vector<Column> columns;
    columns.reserve(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
        Column col;
        col.name = header[j];
        const auto& raw = cells[j];
        auto hint = hints.find(col.name);

        std::vector<double> parsed(raw.size(), std::numeric_limits<double>::quiet_NaN());
        std::optional<std::size_t> first_bad;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (is_missing_token(raw[i])) continue;
            if (auto v = parse_double(raw[i])) {
                parsed[i] = *v;
            } else if (!first_bad) {
                first_bad = i;
            }
        }

        bool numeric = !first_bad;
        if (hint != hints.end()) {
            if (hint->second == ColumnKind::numeric && first_bad)
                throw InputError("column '" + col.name + "', row " + std::to_string(*first_bad + 1) +
                                 ": cannot parse '" + raw[*first_bad] + "' as a number");
            numeric = hint->second == ColumnKind::numeric;
        }

        if (numeric) {
            col.kind = ColumnKind::numeric;
            col.numeric = std::move(parsed);
        } else {
            col.kind = ColumnKind::categorical;
            std::set<std::string> levels;
            for (const auto& s : raw)
                if (!is_missing_token(s)) levels.insert(s);
            col.levels.assign(levels.begin(), levels.end());
            col.codes.reserve(raw.size());
            for (const auto& s : raw) {
                if (is_missing_token(s)) {
                    col.codes.push_back(-1);
                } else {
                    auto it = std::lower_bound(col.levels.begin(), col.levels.end(), s);
                    col.codes.push_back(static_cast<int>(it - col.levels.begin()));
                }
            }
        }
        columns.push_back(std::move(col));
    }
    return Dataset(std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, const TypeHints& hints) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    try {
        return read_csv(in, hints);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

namespace {

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& data) {
    const auto& cols = data.columns();
    for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << csv_quote(cols[j].name);
    out << '\n';
    std::ostringstream num;
    num.precision(17);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (j) out << ',';
            const auto& c = cols[j];
            if (c.is_missing(i)) {
                out << "NA";
            } else if (c.kind == ColumnKind::numeric) {
                num.str("");
                num << c.numeric[i];
                out << num.str();
            } else {
                out << csv_quote(c.label(i));
            }
        }
        out << '\n';
    }
}

Matrix FeatureMatrix::unscaled() const {
    if (!scaling) return data;
    Matrix out = data;
    for (Index j = 0; j < out.cols(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        out.col(j) = (out.col(j).array() * scaling->sd[k] + scaling->mean[k]).matrix();
    }
    return out;
}

namespace {

void check_same_schema(const Dataset& a, const Dataset& b) {
    if (a.cols() != b.cols())
        throw InputError("schema mismatch: " + std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) +
                         " columns");
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const auto& ca = a.column(j);
        const auto& cb = b.column(j);
        if (ca.name != cb.name)
            throw InputError("schema mismatch at column " + std::to_string(j + 1) + ": '" + ca.name + "' vs '" +
                             cb.name + "'");
        if (ca.kind != cb.kind)
            throw InputError("schema mismatch: column '" + ca.name + "' is " + to_string(ca.kind) + " vs " +
                             to_string(cb.kind));
    }
}

void check_complete(const Dataset& d) {
    for (const auto& c : d.columns())
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.is_missing(i))
                throw InputError("missing value in column '" + c.name + "', row " + std::to_string(i + 1));
}

}  // namespace

Encoding Encoding::fit(const Dataset& observed, const Dataset& synthetic, bool standardize) {
    check_same_schema(observed, synthetic);
    check_complete(observed);
    check_complete(synthetic);
    if (observed.rows() == 0 || synthetic.rows() == 0) throw InputError("empty dataset");

    Encoding enc;
    for (const auto& c : observed.columns()) {
        ColumnEncoding ce{c.name, c.kind, {}};
        if (c.kind == ColumnKind::categorical) {
            // levels present in the observed rows only
            std::set<std::string> present;
            for (int code : c.codes) present.insert(c.levels[static_cast<std::size_t>(code)]);
            ce.levels.assign(present.begin(), present.end());
        }
        enc.columns_.push_back(std::move(ce));
    }
    enc.finalize();

    const Matrix a = enc.raw_encode(observed);
    const Matrix b = enc.raw_encode(synthetic);
    const Index total = a.rows() + b.rows();
    const Index p = a.cols();

    Scaling s;
    for (Index j = 0; j < p; ++j) {
        const double mean = (a.col(j).sum() + b.col(j).sum()) / static_cast<double>(total);
        const double ss = (a.col(j).array() - mean).square().sum() + (b.col(j).array() - mean).square().sum();
        const double sd = total > 1 ? std::sqrt(ss / static_cast<double>(total - 1)) : 0.0;
        if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
            enc.dropped_.push_back(enc.raw_names_[static_cast<std::size_t>(j)]);
            std::clog << "warning: dropping zero-variance column '" << enc.raw_names_[static_cast<std::size_t>(j)]
                      << "'\n";
            continue;
        }
        s.mean.push_back(mean);
        s.sd.push_back(sd);
    }
    if (standardize) enc.scaling_ = std::move(s);
    enc.finalize();
    return enc;
}

Encoding Encoding::from_parts(std::vector<ColumnEncoding> columns, std::vector<std::string> dropped,
                              std::optional<Scaling> scaling) {
    Encoding enc;
    enc.columns_ = std::move(columns);
    enc.dropped_ = std::move(dropped);
    enc.scaling_ = std::move(scaling);
    enc.finalize();
    if (enc.scaling_ &&
        (enc.scaling_->mean.size() != enc.kept_.size() || enc.scaling_->sd.size() != enc.kept_.size()))
        throw InputError("scaling length does not match encoded feature count");
    return enc;
}

void Encoding::finalize() {
    raw_names_.clear();
    for (const auto& c : columns_) {
        if (c.kind == ColumnKind::numeric) {
            raw_names_.push_back(c.name);
        } else {
            for (std::size_t l = 1; l < c.levels.size(); ++l) raw_names_.push_back(c.name + "=" + c.levels[l]);
        }
    }
    kept_.clear();
    kept_names_.clear();
    for (std::size_t j = 0; j < raw_names_.size(); ++j) {
        if (std::find(dropped_.begin(), dropped_.end(), raw_names_[j]) != dropped_.end()) continue;
        kept_.push_back(static_cast<Index>(j));
        kept_names_.push_back(raw_names_[j]);
    }
}

Matrix Encoding::raw_encode(const Dataset& data) const {
    if (data.cols() != columns_.size())
        throw InputError("schema mismatch: expected " + std::to_string(columns_.size()) + " columns, got " +
                         std::to_string(data.cols()));
    Matrix out = Matrix::Zero(static_cast<Index>(data.rows()), static_cast<Index>(raw_names_.size()));
    Index k = 0;
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        const auto& spec = columns_[j];
        const auto& col = data.column(j);
        if (col.name != spec.name || col.kind != spec.kind)
            throw InputError("schema mismatch at column '" + spec.name + "'");
        if (spec.kind == ColumnKind::numeric) {
            for (std::size_t i = 0; i < data.rows(); ++i) {
                if (std::isnan(col.numeric[i]))
                    throw InputError("missing value in column '" + col.name + "', row " + std::to_string(i + 1));
                out(static_cast<Index>(i), k) = col.numeric[i];
            }
            ++k;
            continue;
        }
        for (std::size_t i = 0; i < data.rows(); ++i) {
            if (col.codes[i] < 0)
                throw InputError("missing value in column '" + col.name + "', row " + std::to_string(i + 1));
            const std::string& label = col.label(i);
            auto it = std::lower_bound(spec.levels.begin(), spec.levels.end(), label);
            if (it == spec.levels.end() || *it != label)
                throw InputError("column '" + col.name + "', row " + std::to_string(i + 1) + ": label '" + label +
                                 "' does not occur in the observed data");
            const auto level = it - spec.levels.begin();
            if (level > 0) out(static_cast<Index>(i), k + level - 1) = 1.0;
        }
        k += static_cast<Index>(spec.levels.size()) - 1;
    }
    return out;
}

FeatureMatrix Encoding::apply(const Dataset& data) const {
    const Matrix raw = raw_encode(data);
    FeatureMatrix fm;
    fm.column_names = kept_names_;
    fm.data.resize(raw.rows(), static_cast<Index>(kept_.size()));
    for (std::size_t j = 0; j < kept_.size(); ++j) fm.data.col(static_cast<Index>(j)) = raw.col(kept_[j]);
    if (scaling_) {
        for (Index j = 0; j < fm.data.cols(); ++j) {
            const auto k = static_cast<std::size_t>(j);
            fm.data.col(j) = ((fm.data.col(j).array() - scaling_->mean[k]) / scaling_->sd[k]).matrix();
        }
        fm.scaling = scaling_;
    }
    return fm;
}

EncodedPair encode_pair(const Dataset& observed, const Dataset& synthetic, bool standardize) {
    Encoding enc = Encoding::fit(observed, synthetic, standardize);
    FeatureMatrix a = enc.apply(observed);
    FeatureMatrix b = enc.apply(synthetic);
    auto dropped = enc.dropped();
    return {std::move(a), std::move(b), std::move(enc), std::move(dropped)};
}

}  // namespace drutil
