#pragma once

#include "mvlogit/solver.hpp"

#include <string>
#include <vector>

namespace mvlogit {

/// Sandwich estimate of the asymptotic covariance of sqrt(n)(theta_hat - theta),
/// (H/n)^-1 (X'VX/n) (H/n)^-1 evaluated at the fit.
struct CovarianceEstimate {
    Matrix sigma_hat;
    Index n = 0;
    double ridge_used = 0.0;  // nonzero when H needed the solver's ridge policy

    /// Standard error of coordinate i: sqrt(sigma_hat(i,i) / n).
    double standard_error(Index i) const;
    Vector standard_errors() const;
};

struct IntervalEstimate {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
};

/// Upper (1 + level)/2 quantile of the standard normal.
double normal_quantile_two_sided(double level);

CovarianceEstimate covariance_estimate(const FitResult& fit, const MatrixDataset& data, const FitConfig& config);

/// theta_hat_i -/+ z * sqrt(sigma_hat(i,i)) / sqrt(n) over the free coordinates
/// (gamma, alpha*, beta).
IntervalEstimate theta_ci(const FitResult& fit, const CovarianceEstimate& cov, Index index, double level);

/// Delta-method interval for pi(theta|x): a symmetric interval on the logit
/// scale pushed through the logistic function.
IntervalEstimate probability_ci(const FitResult& fit, const CovarianceEstimate& cov, const Matrix& x,
                                double level);

/// sigma_pi(theta|x) = sqrt(x(theta)' Sigma x(theta)), x(theta) the working covariate of x.
double logit_standard_deviation(const ThetaParam& theta, const CovarianceEstimate& cov, const Matrix& x);

/// "gamma", "alpha[k]" (1-based, baseline skipped), "beta[j]" for each free coordinate.
std::vector<std::string> free_parameter_names(Index p, Index q, Index baseline_row);

struct CoefficientRow {
    std::string name;
    double estimate = 0.0;
    double standard_error = 0.0;
    IntervalEstimate interval;
};

std::vector<CoefficientRow> coefficient_table(const FitResult& fit, const CovarianceEstimate& cov, double level);

}  // namespace mvlogit
