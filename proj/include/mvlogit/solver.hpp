#pragma once

#include "mvlogit/model.hpp"
#include "mvlogit/newton.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

/// Curvature used in the update x + H^-1 g.
enum class Curvature {
    Fisher,    // expected information, cross block dropped
    Observed,  // exact negative Hessian when it is positive definite, Fisher otherwise
};

std::string to_string(Curvature c);
Curvature curvature_from_string(const std::string& name);

/// Settings for the penalized bilinear fit.
struct FitConfig {
    double lambda = 0.0;
    PenaltyKind penalty = PenaltyKind::NoIntercept;
    double tol = 1e-8;
    int max_iter = 100;
    /// 0-based; when unset the fit picks it with select_baseline_row.
    std::optional<Index> baseline_row;
    /// Starting point; defaults to ThetaParam::zero.
    std::optional<ThetaParam> init;
    bool step_halving = true;
    int max_halvings = 30;
    /// With lambda == 0, |theta|_inf above this is reported as divergence.
    double separation_bound = 1e4;
    /// Fisher scoring is linear near optima of misspecified fits, where the
    /// dropped cross block is large; the observed curvature restores
    /// quadratic convergence there and falls back to Fisher elsewhere.
    Curvature curvature = Curvature::Observed;

    void validate() const;
    NewtonOptions newton_options() const;
};

struct FitResult {
    ThetaParam theta;
    FitStatus status = FitStatus::MaxIterations;
    bool converged = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double loglik = 0.0;
    double penalized_loglik = 0.0;
    double last_step = 0.0;
    double ridge_used = 0.0;  // largest ridge any Newton solve needed
    std::vector<double> trace;
};

/// sum_i [ y_i eta_i - log(1 + exp(eta_i)) ].
double log_likelihood(const ThetaParam& theta, const MatrixDataset& data);

/// lambda * J(theta). Never includes the pinned alpha entry.
double penalty(const ThetaParam& theta, PenaltyKind kind, double lambda);

/// 1.0 on penalized free coordinates, 0.0 elsewhere (length p + q).
Vector penalty_mask(Index p, Index q, PenaltyKind kind);

/// n x (p+q) matrix whose row i is (1, (X_i beta) without the baseline row, X_i' alpha).
Matrix working_covariates(const ThetaParam& theta, const MatrixDataset& data);
Matrix working_covariates(const ThetaParam& theta, const std::vector<Matrix>& matrices);

/// Gradient of the penalized log-likelihood wrt (gamma, alpha*, beta).
Vector gradient(const ThetaParam& theta, const MatrixDataset& data, const FitConfig& config);

/// X(theta)' V X(theta) + lambda J''; the expected-information curvature.
Matrix fisher_hessian(const ThetaParam& theta, const MatrixDataset& data, const FitConfig& config);

/// X(theta)' V X(theta) alone (the sandwich meat).
Matrix empirical_information(const ThetaParam& theta, const MatrixDataset& data);

/// The zero-mean block that Fisher scoring drops: sum_i C' X_i (y_i - pi_i)
/// of size (p-1) x q, coupling alpha* and beta.
Matrix hessian_cross_block(const ThetaParam& theta, const MatrixDataset& data);

/// Penalized maximum likelihood by Fisher scoring with step-halving.
/// Throws NumericalError on a non-finite likelihood or an unfactorizable Hessian.
FitResult fit(const MatrixDataset& data, const FitConfig& config);

// ---------------------------------------------------------------------------
// conventional ridge-logistic arm on vec(X)

struct ConventionalFit {
    double gamma = 0.0;
    Vector xi;  // length pq, column-major
    FitStatus status = FitStatus::MaxIterations;
    bool converged = false;
    int iterations = 0;
    double loglik = 0.0;
    double penalized_loglik = 0.0;
    std::vector<double> trace;

    double linear_predictor(const Vector& features) const { return gamma + xi.dot(features); }
};

struct RidgeOptions {
    double tol = 1e-8;
    int max_iter = 100;
    double separation_bound = 1e4;
    /// When the penalized block has more columns than rows, refit in the
    /// row space of the data (exact for lambda > 0).
    bool allow_row_space_reduction = true;
};

/// Ridge-penalized logistic regression with an intercept on an n x d
/// feature matrix. With AllTheta the intercept is penalized too.
ConventionalFit fit_ridge_logistic(const Matrix& features, const Vector& y, double lambda, PenaltyKind kind,
                                   const RidgeOptions& options = {});

/// n x pq matrix whose rows are vec(X_i)'.
Matrix vectorized_design(const MatrixDataset& data);

/// The unconstrained model gamma + vec(xi)' vec(X).
ConventionalFit fit_conventional(const MatrixDataset& data, double lambda, PenaltyKind kind,
                                 const RidgeOptions& options = {});

/// Log-likelihood of the conventional model at (gamma, xi).
double conventional_log_likelihood(double gamma, const Vector& xi, const MatrixDataset& data);

// ---------------------------------------------------------------------------
// lambda selection

enum class Arm { MatrixVariate, Conventional };

struct CvScheme {
    enum class Kind { KFold, LeaveOneOut } kind = Kind::LeaveOneOut;
    int folds = 10;
    std::uint64_t seed = 7;
};

struct CvOptions {
    Arm arm = Arm::MatrixVariate;
    PenaltyKind penalty = PenaltyKind::NoIntercept;
    /// MV arm only; resolved once on the full data when unset.
    std::optional<Index> baseline_row;
    double tol = 1e-8;
    int max_iter = 100;
    Curvature curvature = Curvature::Observed;
    int threads = 1;
};

struct CvPoint {
    double lambda = 0.0;
    Index correct = 0;
    double accuracy = 0.0;
};

struct CvResult {
    double best_lambda = 0.0;
    double best_accuracy = 0.0;
    std::vector<CvPoint> table;
    /// Held-out predicted probability for every sample at best_lambda.
    std::vector<double> held_out_probability;
};

/// Fold id per sample. Leave-one-out gives sample i fold i; k-fold is a
/// label-stratified seeded shuffle dealt round-robin.
std::vector<int> make_folds(const std::vector<int>& labels, const CvScheme& scheme);

/// Cross-validated accuracy (threshold 0.5) for every lambda in the grid;
/// argmax with ties going to the smallest lambda.
CvResult select_lambda_cv(const MatrixDataset& data, const std::vector<double>& grid, const CvScheme& scheme,
                          const CvOptions& options = {});

/// Same as above for a generic feature matrix with the conventional arm.
CvResult select_lambda_cv_features(const Matrix& features, const std::vector<int>& labels,
                                   const std::vector<double>& grid, const CvScheme& scheme,
                                   const CvOptions& options = {});

}  // namespace mvlogit
