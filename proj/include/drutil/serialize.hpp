#pragma once

#include "drutil/dataset.hpp"
#include "drutil/ulsif.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace drutil {

using json = nlohmann::json;

// JSON text with every floating-point number written to 17 significant
// digits. Non-finite values become null.
std::string dump_json(const json& doc, int indent = 2);
void write_json(std::ostream& out, const json& doc, int indent = 2);

json to_json(const Matrix& m);  // array of rows
json to_json(const Vector& v);
Matrix matrix_from_json(const json& j);
Vector vector_from_json(const json& j);

json to_json(const Scaling& s);
Scaling scaling_from_json(const json& j);

json to_json(const UlsifFit& fit);
UlsifFit fit_from_json(const json& j);

json to_json(const Encoding& enc);
Encoding encoding_from_json(const json& j);

// A fitted ratio model together with the encoder that produced its
// feature space, which is what `predict` needs to score raw CSV rows.
struct SavedModel {
    UlsifFit fit;
    Encoding encoding;
};

inline constexpr const char* kModelFormat = "drutil-ulsif-model";
inline constexpr int kModelVersion = 1;

json to_json(const SavedModel& model);
SavedModel model_from_json(const json& j);
void save_model(const std::filesystem::path& path, const SavedModel& model);
SavedModel load_model(const std::filesystem::path& path);

}  // namespace drutil
