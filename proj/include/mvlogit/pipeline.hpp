#pragma once

#include "mvlogit/inference.hpp"
#include "mvlogit/io.hpp"
#include "mvlogit/preprocess.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

std::vector<double> default_lambda_grid();

/// Parses "0.5,1,2" (whitespace tolerated).
std::vector<double> parse_lambda_grid(const std::string& text);

/// Settings of the GLRAM, standardize, fit analysis.
struct PipelineConfig {
    Index p0 = 15;
    Index q0 = 15;
    std::vector<double> grid = default_lambda_grid();
    PenaltyKind penalty = PenaltyKind::AllTheta;
    CvScheme scheme;  // leave-one-out by default
    /// false: GLRAM, standardization and the baseline come from all
    /// subjects and one lambda maximizes the held-out accuracy.
    /// true: all of it is refit inside every outer fold.
    bool nested = false;
    bool center = true;
    bool standardize = true;
    bool run_conventional = true;
    double level = 0.95;
    Curvature curvature = Curvature::Observed;
    int threads = 1;
    std::string condition = "S1 obj";  // recorded in the report only

    void validate() const;
};

struct SubjectPrediction {
    std::string id;
    int label = 0;
    double held_out = 0.0;  // probability from the fit without this subject
    IntervalEstimate held_out_interval;
    double fitted = 0.0;    // probability from the full fit
    IntervalEstimate fitted_interval;
};

struct CoefficientCurve {
    std::string name;  // "alpha" or "beta"
    Vector estimate;
    Vector lower;
    Vector upper;
};

struct ArmSummary {
    double accuracy = 0.0;
    Index correct = 0;
    /// Accuracy per grid value (non-nested), or the lambdas chosen per outer fold (nested).
    CvResult cv;
    std::vector<double> fold_lambdas;
};

struct PipelineReport {
    PipelineConfig config;
    Index n = 0;
    Index positives = 0;
    Index p = 0;
    Index q = 0;
    std::vector<std::string> channels;
    std::string protocol;
    int glram_iterations = 0;
    bool glram_converged = false;
    double captured_fraction = 0.0;  // GLRAM energy over the centered total
    Index baseline_row = 0;
    ArmSummary mv;
    std::optional<ArmSummary> conventional;
    double lambda = 0.0;  // MV lambda of the final fit
    FitResult final_fit;
    std::optional<CovarianceEstimate> covariance;
    std::vector<CoefficientRow> coefficients;
    CoefficientCurve alpha;
    CoefficientCurve beta;
    std::vector<SubjectPrediction> subjects;
    ModelArtifact model;
};

/// Runs the analysis on raw (averaged) matrices. Accuracies use threshold 0.5.
PipelineReport eeg_pipeline(const MatrixDataset& data, const PipelineConfig& config,
                            const std::vector<std::string>& channels = {});

Json pipeline_report_to_json(const PipelineReport& report);

/// Structural problems of a serialized report (missing fields, wrong types,
/// accuracies or probabilities outside [0,1]); empty when it is well formed.
std::vector<std::string> pipeline_report_schema_errors(const Json& report);

/// id,label,held_out,held_out_lower,held_out_upper,fitted,fitted_lower,fitted_upper
std::string pipeline_subjects_csv(const PipelineReport& report);

/// coefficient,index,estimate,lower,upper for alpha then beta.
std::string pipeline_coefficients_csv(const PipelineReport& report);

// ---------------------------------------------------------------------------
// PCA followed by conventional ridge logistic

struct PcaScores {
    Matrix scores;     // n x r, columns scaled to unit sample SD
    Vector singular_values;
    double explained = 0.0;  // variance share of the top r components
};

/// Top-r principal component scores of the centered vec(X_i).
PcaScores pca_scores(const MatrixDataset& data, Index r);

struct PcaBaselineResult {
    Index rank = 0;
    double explained = 0.0;
    CvResult cv;
};

/// Requires 1 <= r <= min(n - 1, pq).
PcaBaselineResult pca_baseline(const MatrixDataset& data, Index r, const std::vector<double>& grid,
                               const CvScheme& scheme, const CvOptions& options = {});

Json pca_baseline_to_json(const std::vector<PcaBaselineResult>& results);

}  // namespace mvlogit
