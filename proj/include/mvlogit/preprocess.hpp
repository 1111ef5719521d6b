#pragma once

#include "mvlogit/glram.hpp"
#include "mvlogit/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

/// Fit-time covariate transforms replayed at predict time, in order:
/// GLRAM centering and projection, then per-entry standardization.
struct Preprocessing {
    Index input_p = 0;
    Index input_q = 0;
    std::optional<GlramBases> bases;
    std::optional<StandardizationStats> standardization;
    /// Column names of the raw covariates (EEG channels), possibly empty.
    std::vector<std::string> channels;

    Index output_p() const;
    Index output_q() const;

    /// Throws ValidationError naming the missing artifact when x does not
    /// have the raw input shape.
    Matrix apply(const Matrix& x) const;
    MatrixDataset apply(const MatrixDataset& data) const;
};

struct PreprocessOptions {
    std::optional<GlramOptions> glram;
    bool standardize = false;
};

struct PreprocessedData {
    MatrixDataset data;
    Preprocessing preprocessing;
};

/// Fits the requested transforms on `data` and returns the transformed copy.
PreprocessedData fit_preprocessing(const MatrixDataset& data, const PreprocessOptions& options,
                                   std::vector<std::string> channels = {});

}  // namespace mvlogit
