#include "mvlogit/inference.hpp"

#include "mvlogit/linalg.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <string>

namespace mvlogit {

double CovarianceEstimate::standard_error(Index i) const
{
    if (i < 0 || i >= sigma_hat.rows()) throw ValidationError("coordinate index out of range");
    return std::sqrt(std::max(sigma_hat(i, i), 0.0) / static_cast<double>(n));
}

Vector CovarianceEstimate::standard_errors() const
{
    Vector se(sigma_hat.rows());
    for (Index i = 0; i < se.size(); ++i) se(i) = standard_error(i);
    return se;
}

double normal_quantile_two_sided(double level)
{
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0,1)");
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, 0.5 + 0.5 * level);
}

CovarianceEstimate covariance_estimate(const FitResult& fit, const MatrixDataset& data, const FitConfig& config)
{
    config.validate();
    const Matrix meat = empirical_information(fit.theta, data);
    Matrix bread = meat;
    bread.diagonal() += config.lambda * penalty_mask(fit.theta.p(), fit.theta.q(), config.penalty);
    const RidgedCholesky chol = factor_with_ridge(bread);

    CovarianceEstimate cov;
    cov.n = data.n();
    cov.ridge_used = chol.ridge;
    cov.sigma_hat = sandwich(chol, meat, static_cast<double>(data.n()));
    return cov;
}

IntervalEstimate theta_ci(const FitResult& fit, const CovarianceEstimate& cov, Index index, double level)
{
    const Vector theta = fit.theta.free_parameters();
    if (index < 0 || index >= theta.size()) throw ValidationError("coordinate index out of range");
    const double half = normal_quantile_two_sided(level) * cov.standard_error(index);
    return {theta(index) - half, theta(index) + half, level};
}

double logit_standard_deviation(const ThetaParam& theta, const CovarianceEstimate& cov, const Matrix& x)
{
    const Matrix w = working_covariates(theta, MatrixDataset({x}, {0}));
    const Vector xw = w.row(0).transpose();
    if (xw.size() != cov.sigma_hat.rows()) throw ValidationError("covariance does not match the model size");
    return std::sqrt(std::max(xw.dot(cov.sigma_hat * xw), 0.0));
}

IntervalEstimate probability_ci(const FitResult& fit, const CovarianceEstimate& cov, const Matrix& x, double level)
{
    const double eta = linear_predictor(fit.theta, x);
    const double half = normal_quantile_two_sided(level) * logit_standard_deviation(fit.theta, cov, x) /
                        std::sqrt(static_cast<double>(cov.n));
    return {sigmoid(eta - half), sigmoid(eta + half), level};
}

std::vector<std::string> free_parameter_names(Index p, Index q, Index baseline_row)
{
    std::vector<std::string> names{"gamma"};
    for (Index i = 0; i < p; ++i)
        if (i != baseline_row) names.push_back("alpha[" + std::to_string(i + 1) + "]");
    for (Index j = 0; j < q; ++j) names.push_back("beta[" + std::to_string(j + 1) + "]");
    return names;
}

std::vector<CoefficientRow> coefficient_table(const FitResult& fit, const CovarianceEstimate& cov, double level)
{
    const auto names = free_parameter_names(fit.theta.p(), fit.theta.q(), fit.theta.baseline_row());
    const Vector theta = fit.theta.free_parameters();
    std::vector<CoefficientRow> rows;
    for (Index i = 0; i < theta.size(); ++i)
        rows.push_back({names[static_cast<std::size_t>(i)], theta(i), cov.standard_error(i),
                        theta_ci(fit, cov, i, level)});
    return rows;
}

}  // namespace mvlogit
