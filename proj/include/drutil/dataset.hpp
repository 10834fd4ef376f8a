#pragma once

#include "drutil/types.hpp"

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace drutil {

enum class ColumnKind { numeric, categorical };

std::string to_string(ColumnKind kind);

// One column of a Dataset. Numeric columns use `numeric` (NaN marks a
// missing cell); categorical columns store indices into the sorted `levels`
// (-1 marks a missing cell).
struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<double> numeric;
    std::vector<int> codes;
    std::vector<std::string> levels;

    std::size_t size() const { return kind == ColumnKind::numeric ? numeric.size() : codes.size(); }
    bool is_missing(std::size_t row) const;
    const std::string& label(std::size_t row) const { return levels.at(static_cast<std::size_t>(codes.at(row))); }
};

enum class Provenance { unknown, observed, synthetic };

class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns, Provenance provenance = Provenance::unknown);

    static Dataset from_matrix(const Matrix& values, const std::vector<std::string>& names,
                               Provenance provenance = Provenance::unknown);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }
    const std::vector<Column>& columns() const { return columns_; }
    const Column& column(std::size_t j) const { return columns_.at(j); }
    const Column& column(const std::string& name) const;
    std::optional<std::size_t> find(const std::string& name) const;
    Provenance provenance() const { return provenance_; }
    void set_provenance(Provenance p) { provenance_ = p; }

    // Numeric columns as a dense matrix; throws if any column is categorical
    // or has missing cells.
    Matrix numeric_matrix() const;

private:
    std::vector<Column> columns_;
    std::size_t rows_ = 0;
    Provenance provenance_ = Provenance::unknown;
};

using TypeHints = std::map<std::string, ColumnKind>;

Dataset load_csv(const std::filesystem::path& path, const TypeHints& hints = {});
Dataset read_csv(std::istream& in, const TypeHints& hints = {});
void write_csv(std::ostream& out, const Dataset& data);

// Per-column (mean, standard deviation) applied as (x - mean) / sd.
struct Scaling {
    std::vector<double> mean;
    std::vector<double> sd;
};

struct FeatureMatrix {
    Matrix data;
    std::vector<std::string> column_names;
    std::optional<Scaling> scaling;

    Index rows() const { return data.rows(); }
    Index cols() const { return data.cols(); }

    // Undo the scaling, recovering the raw encoded values.
    Matrix unscaled() const;
};

// How one source column maps onto encoded features.
struct ColumnEncoding {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    // Categorical only: all observed levels, sorted; levels[0] is the reference.
    std::vector<std::string> levels;
};

// A fitted encoder: dummy coding + zero-variance pruning + optional pooled
// standardization. Built from an observed/synthetic pair and re-applicable
// to any Dataset with the same schema.
class Encoding {
public:
    static Encoding fit(const Dataset& observed, const Dataset& synthetic, bool standardize);

    FeatureMatrix apply(const Dataset& data) const;

    const std::vector<ColumnEncoding>& columns() const { return columns_; }
    // Names of the encoded features kept after pruning, in output order.
    const std::vector<std::string>& feature_names() const { return kept_names_; }
    const std::vector<std::string>& dropped() const { return dropped_; }
    const std::optional<Scaling>& scaling() const { return scaling_; }

    // Reconstruct from serialized parts (see serialize.hpp).
    static Encoding from_parts(std::vector<ColumnEncoding> columns, std::vector<std::string> dropped,
                               std::optional<Scaling> scaling);

private:
    Matrix raw_encode(const Dataset& data) const;
    void finalize();

    std::vector<ColumnEncoding> columns_;
    std::vector<std::string> raw_names_;
    std::vector<std::string> dropped_;
    std::vector<std::string> kept_names_;
    std::vector<Index> kept_;
    std::optional<Scaling> scaling_;
};

struct EncodedPair {
    FeatureMatrix observed;
    FeatureMatrix synthetic;
    Encoding encoding;
    std::vector<std::string> dropped;
};

EncodedPair encode_pair(const Dataset& observed, const Dataset& synthetic, bool standardize = true);

}  // namespace drutil
