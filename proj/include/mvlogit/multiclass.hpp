#pragma once

#include "mvlogit/inference.hpp"
#include "mvlogit/solver.hpp"

#include <vector>

namespace mvlogit {

/// Matrix covariates with labels in {1, ..., H}. One class acts as the
/// reference category of the baseline-category logit (default: class H).
class MultiClassDataset {
public:
    MultiClassDataset() = default;
    MultiClassDataset(std::vector<Matrix> matrices, std::vector<int> labels, int num_classes,
                      int reference_class = 0 /* 0 means num_classes */);

    Index n() const { return static_cast<Index>(matrices_.size()); }
    Index p() const { return p_; }
    Index q() const { return q_; }
    int num_classes() const { return num_classes_; }
    int reference_class() const { return reference_; }

    const std::vector<Matrix>& matrices() const { return matrices_; }
    const std::vector<int>& labels() const { return labels_; }
    const Matrix& x(Index i) const { return matrices_[static_cast<std::size_t>(i)]; }
    int label(Index i) const { return labels_[static_cast<std::size_t>(i)]; }

    /// Non-reference classes in ascending order; block h of a ThetaMulti
    /// belongs to non_reference_classes()[h].
    std::vector<int> non_reference_classes() const;

    /// 1 where label == cls, else 0.
    MatrixDataset one_vs_rest(int cls) const;

    /// Indicator matrix, n x H, column h - 1 marking label h.
    Matrix indicators() const;

    MultiClassDataset subset(const std::vector<Index>& rows) const;

private:
    Index p_ = 0;
    Index q_ = 0;
    int num_classes_ = 0;
    int reference_ = 0;
    std::vector<Matrix> matrices_;
    std::vector<int> labels_;
};

/// One bilinear block (gamma_h, alpha_h, beta_h) per non-reference class,
/// all pinned at the same baseline row.
struct ThetaMulti {
    std::vector<ThetaParam> blocks;
    std::vector<int> block_classes;
    int num_classes = 0;
    int reference_class = 0;

    Index baseline_row() const { return blocks.front().baseline_row(); }
    Index block_size() const { return blocks.front().free_count(); }
    Vector free_parameters() const;

    static ThetaMulti from_free(const Vector& free, Index p, Index q, Index baseline_row,
                                const std::vector<int>& block_classes, int num_classes, int reference_class);
    static ThetaMulti zero(const MultiClassDataset& data, Index baseline_row);
};

/// Probability of every class, indexed by label - 1; sums to 1.
Vector class_probabilities(const ThetaMulti& theta, const Matrix& x);

double multiclass_log_likelihood(const ThetaMulti& theta, const MultiClassDataset& data);
double multiclass_penalty(const ThetaMulti& theta, PenaltyKind kind, double lambda);

Vector multiclass_gradient(const ThetaMulti& theta, const MultiClassDataset& data, const FitConfig& config);

/// X*' V* X* + lambda J'' with the multinomial weight blocks
/// V_hh = diag(pi_h (1 - pi_h)), V_hk = diag(-pi_h pi_k).
Matrix multiclass_fisher_hessian(const ThetaMulti& theta, const MultiClassDataset& data, const FitConfig& config);
Matrix multiclass_information(const ThetaMulti& theta, const MultiClassDataset& data);

/// Shared baseline: the correlation rule applied to the one-vs-rest
/// response of class 1 (row 0 if that response has a single value).
Index multiclass_baseline_row(const MultiClassDataset& data);

struct MultiFitResult {
    ThetaMulti theta;
    FitStatus status = FitStatus::MaxIterations;
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double loglik = 0.0;
    double penalized_loglik = 0.0;
    double ridge_used = 0.0;
    std::vector<double> trace;
};

MultiFitResult multiclass_fit(const MultiClassDataset& data, const FitConfig& config);

/// Block sandwich over all (H-1)(p+q) free coordinates.
CovarianceEstimate multiclass_covariance(const MultiFitResult& fit, const MultiClassDataset& data,
                                         const FitConfig& config);

/// Most probable class (ties to the smaller label).
int predict_class(const ThetaMulti& theta, const Matrix& x);

}  // namespace mvlogit
