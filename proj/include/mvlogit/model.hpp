#pragma once

#include "mvlogit/common.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mvlogit {

/// n labeled samples, each a p x q covariate matrix with a 0/1 label.
///
/// Validated on construction: every matrix is p x q with finite entries,
/// labels are 0 or 1, n >= 1. Subject ids are optional (empty or size n).
class MatrixDataset {
public:
    MatrixDataset() = default;
    MatrixDataset(std::vector<Matrix> matrices, std::vector<int> labels,
                  std::vector<std::string> subject_ids = {});

    Index n() const { return static_cast<Index>(matrices_.size()); }
    Index p() const { return p_; }
    Index q() const { return q_; }

    const std::vector<Matrix>& matrices() const { return matrices_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::string>& subject_ids() const { return subject_ids_; }

    const Matrix& x(Index i) const { return matrices_[static_cast<std::size_t>(i)]; }
    int y(Index i) const { return labels_[static_cast<std::size_t>(i)]; }

    /// Labels as a double vector (0.0 / 1.0).
    Vector label_vector() const;

    /// Samples at the given positions, in the given order.
    MatrixDataset subset(const std::vector<Index>& rows) const;

    /// Same labels, new covariates (used after projection / standardization).
    MatrixDataset with_matrices(std::vector<Matrix> matrices) const;

private:
    Index p_ = 0;
    Index q_ = 0;
    std::vector<Matrix> matrices_;
    std::vector<int> labels_;
    std::vector<std::string> subject_ids_;
};

/// Parameters of the bilinear model logit P(Y=1|X) = gamma + alpha' X beta.
///
/// alpha[baseline_row] is pinned to exactly 1 for identifiability, so the
/// free parameters are (gamma, alpha*, beta) with alpha* = alpha without the
/// baseline entry; p + q of them in total. baseline_row is 0-based.
class ThetaParam {
public:
    ThetaParam() = default;

    /// Throws ValidationError unless alpha[baseline_row] == 1 exactly.
    ThetaParam(double gamma, Vector alpha, Vector beta, Index baseline_row);

    /// Rescales (alpha, beta) -> (alpha / alpha[b], beta * alpha[b]) so the
    /// baseline entry becomes 1. The linear predictor is unchanged.
    static ThetaParam repinned(double gamma, const Vector& alpha, const Vector& beta,
                               Index baseline_row);

    /// gamma = 0, alpha = e_baseline, beta = 0.
    static ThetaParam zero(Index p, Index q, Index baseline_row);

    /// Inverse of free_parameters().
    static ThetaParam from_free(const Vector& free, Index p, Index q, Index baseline_row);

    double gamma() const { return gamma_; }
    const Vector& alpha() const { return alpha_; }
    const Vector& beta() const { return beta_; }
    Index baseline_row() const { return baseline_row_; }
    Index p() const { return alpha_.size(); }
    Index q() const { return beta_.size(); }
    Index free_count() const { return p() + q(); }

    /// (gamma, alpha*, beta), alpha* in row order skipping the baseline.
    Vector free_parameters() const;

    /// alpha with the baseline entry removed.
    Vector alpha_star() const;

private:
    double gamma_ = 0.0;
    Vector alpha_;
    Vector beta_;
    Index baseline_row_ = 0;
};

/// Per-entry sample moments used to standardize covariates.
/// Entries flagged in `constant` had zero variance and were only centered.
struct StandardizationStats {
    Matrix means;
    Matrix sds;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> constant;

    Matrix apply(const Matrix& x) const;
    Index flagged_count() const { return constant.count(); }
};

struct StandardizedDataset {
    MatrixDataset data;
    StandardizationStats stats;
};

// numerically stable scalar helpers
double sigmoid(double eta);
/// log(1 + exp(eta)) without overflow.
double softplus(double eta);

/// Column-major stacking, vec(X) = (X_11, X_21, ..., X_p1, X_12, ...).
Vector vec(const Matrix& x);
Matrix unvec(const Vector& v, Index p, Index q);

double linear_predictor(const ThetaParam& theta, const Matrix& x);
double success_probability(const ThetaParam& theta, const Matrix& x);

/// exp(alpha_i * beta_j), 0-based indices.
double odds_ratio(const ThetaParam& theta, Index i, Index j);

/// Row whose entries are jointly most correlated with Y:
/// argmax_k sum_j |corr(X_kj, Y)|. Zero-variance entries contribute 0,
/// ties go to the smallest row. Throws ValidationError when all labels agree.
Index select_baseline_row(const MatrixDataset& data);

/// Per-entry centering and scaling to unit sample SD (n - 1 denominator).
StandardizedDataset standardize(const MatrixDataset& data);

/// (gamma, vec(alpha beta')).
std::pair<double, Vector> vectorized_coefficient(const ThetaParam& theta);

/// 1 iff success_probability > threshold (ties go to 0).
int classify(const ThetaParam& theta, const Matrix& x, double threshold = 0.5);

}  // namespace mvlogit
