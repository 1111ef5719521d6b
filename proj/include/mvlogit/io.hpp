#pragma once

#include "mvlogit/inference.hpp"
#include "mvlogit/multiclass.hpp"
#include "mvlogit/preprocess.hpp"
#include "mvlogit/simulation.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// primitives

/// Matrices are arrays of rows.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j, const std::string& what);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& what);

/// Finite doubles as numbers, NaN and infinities as null.
Json number_or_null(double x);

/// Dump with a trailing newline, two-space indented unless compact. Doubles
/// use the shortest representation that round-trips, so equal inputs give
/// equal bytes.
std::string dump_json(const Json& j, bool compact = false);

Json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest round-trip decimal form of x (std::to_chars).
std::string format_number(double x);

// ---------------------------------------------------------------------------
// datasets

/// A binary dataset plus the raw column names when known.
struct DatasetDocument {
    MatrixDataset data;
    std::vector<std::string> channels;
    bool has_labels = true;  // false: "labels" was absent and every label reads 0
};

/// {"p","q","labels","matrices":[[row]...]} plus optional "subject_ids", "channels".
/// "labels" may be omitted for prediction-only files.
Json dataset_to_json(const MatrixDataset& data, const std::vector<std::string>& channels = {});
DatasetDocument dataset_from_json(const Json& j);

/// Same layout with labels in 1..H and a "num_classes" field.
Json multiclass_dataset_to_json(const MultiClassDataset& data);
MultiClassDataset multiclass_dataset_from_json(const Json& j);
bool is_multiclass_document(const Json& j);

/// Header `y,x_1_1,x_2_1,...,x_p_q` (covariates in column-major order),
/// optionally preceded by an `id` column.
DatasetDocument read_dataset_csv(std::istream& in, const std::string& source = "csv");
std::string dataset_to_csv(const MatrixDataset& data);

/// Dispatches on the extension: .csv is CSV, anything else JSON.
DatasetDocument load_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// artifacts

Json bases_to_json(const GlramBases& bases);
GlramBases bases_from_json(const Json& j);

Json standardization_to_json(const StandardizationStats& stats);
StandardizationStats standardization_from_json(const Json& j);

Json preprocessing_to_json(const Preprocessing& pre);
Preprocessing preprocessing_from_json(const Json& j);

/// A fitted model with everything predict needs.
struct ModelArtifact {
    Preprocessing preprocessing;
    double lambda = 0.0;
    PenaltyKind penalty = PenaltyKind::NoIntercept;
    Curvature curvature = Curvature::Observed;
    std::optional<FitResult> binary;
    std::optional<MultiFitResult> multiclass;
    /// Sandwich at the fit on the training data, when it could be formed.
    std::optional<CovarianceEstimate> covariance;

    bool is_multiclass() const { return multiclass.has_value(); }
    FitConfig fit_config() const;
};

/// baseline_row is written 1-based.
Json model_to_json(const ModelArtifact& model);
ModelArtifact model_from_json(const Json& j);

FitStatus fit_status_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// reports

Json fit_summary_to_json(const FitResult& fit);
Json coefficient_table_to_json(const std::vector<CoefficientRow>& rows);
Json cv_result_to_json(const CvResult& cv);

Json sim_design_to_json(const SimDesign& design);
/// Missing fields keep their defaults.
SimDesign sim_design_from_json(const Json& j);
Json sim_report_to_json(const SimReport& report);
Json lambda_tuning_to_json(const LambdaTuning& tuning);

}  // namespace mvlogit
