#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvlogit/inference.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mvlogit;
using testutil::random_dataset;
using testutil::random_theta;

namespace {

double logit(double pr) { return std::log(pr / (1.0 - pr)); }

struct Fitted {
    MatrixDataset data;
    FitConfig config;
    FitResult fit;
};

Fitted fitted_case(std::uint64_t seed, double lambda, Index n = 200)
{
    std::mt19937_64 rng(seed);
    Vector a(3), b(2);
    a << 1, 0.5, -0.5;
    b << 1, -1;
    const ThetaParam truth(0.5, a, b, 0);
    MatrixDataset d = random_dataset(n, 3, 2, rng, &truth);
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.baseline_row = 0;
    FitResult f = fit(d, cfg);
    return {std::move(d), cfg, std::move(f)};
}

}  // namespace

TEST_CASE("normal quantile")
{
    CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.959963984540054));
    CHECK(normal_quantile_two_sided(0.90) == doctest::Approx(1.6448536269514722));
    // independent check through erfc: P(|Z| > z) = erfc(z / sqrt 2)
    for (double level : {0.5, 0.8, 0.99, 0.999})
        CHECK(std::erfc(normal_quantile_two_sided(level) / std::sqrt(2.0)) == doctest::Approx(1.0 - level));
    CHECK_THROWS_AS(normal_quantile_two_sided(1.0), ValidationError);
    CHECK_THROWS_AS(normal_quantile_two_sided(0.0), ValidationError);
}

TEST_CASE("sandwich at lambda 0 is the inverse empirical information")
{
    const Fitted f = fitted_case(21, 0.0);
    REQUIRE(f.fit.converged);
    const CovarianceEstimate cov = covariance_estimate(f.fit, f.data, f.config);
    const Matrix info = empirical_information(f.fit.theta, f.data) / static_cast<double>(f.data.n());
    const Matrix inv = info.inverse();
    CHECK((cov.sigma_hat - inv).cwiseAbs().maxCoeff() < 1e-10 * inv.cwiseAbs().maxCoeff());
    CHECK(cov.ridge_used == 0.0);
}

TEST_CASE("sandwich is symmetric PSD and shrinks with the penalty")
{
    for (double lambda : {0.0, 0.5, 5.0}) {
        const Fitted f = fitted_case(22, lambda);
        const CovarianceEstimate cov = covariance_estimate(f.fit, f.data, f.config);
        CHECK((cov.sigma_hat - cov.sigma_hat.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov.sigma_hat);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK(cov.sigma_hat.diagonal().minCoeff() >= 0.0);
    }
}

TEST_CASE("intercept-only standard error matches the binomial closed form")
{
    // p = 1, covariates orthogonal to both 1 and y, so the lambda = 0 MLE has
    // beta = 0 and gamma = logit(ybar) with a block-diagonal information.
    std::vector<Matrix> xs;
    std::vector<int> ys;
    for (int i = 0; i < 40; ++i) {
        const int y = i < 12 ? 1 : 0;
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        Matrix x(1, 2);
        x << sign * (1.0 + (i / 2) % 3), sign * (0.5 + (i / 2) % 5);
        xs.push_back(x);
        ys.push_back(y);
    }
    const MatrixDataset d(xs, ys);
    FitConfig cfg;
    cfg.baseline_row = 0;
    const FitResult r = fit(d, cfg);
    REQUIRE(r.converged);
    const double pbar = 12.0 / 40.0;
    CHECK(r.theta.gamma() == doctest::Approx(logit(pbar)).epsilon(1e-9));
    CHECK(r.theta.beta().cwiseAbs().maxCoeff() < 1e-9);
    const CovarianceEstimate cov = covariance_estimate(r, d, cfg);
    CHECK(cov.standard_error(0) == doctest::Approx(1.0 / std::sqrt(40.0 * pbar * (1.0 - pbar))).epsilon(1e-9));
}

TEST_CASE("theta_ci")
{
    const Fitted f = fitted_case(23, 0.2);
    const CovarianceEstimate cov = covariance_estimate(f.fit, f.data, f.config);
    const Vector theta = f.fit.theta.free_parameters();
    SUBCASE("square root of the diagonal over sqrt(n)")
    {
        for (Index i = 0; i < theta.size(); ++i) {
            const IntervalEstimate ci = theta_ci(f.fit, cov, i, 0.95);
            const double se = std::sqrt(cov.sigma_hat(i, i) / static_cast<double>(f.data.n()));
            CHECK(ci.lower == doctest::Approx(theta(i) - 1.959963984540054 * se));
            CHECK(ci.upper == doctest::Approx(theta(i) + 1.959963984540054 * se));
            CHECK(ci.lower <= ci.upper);
        }
    }
    SUBCASE("nesting 90 within 95 within 99")
    {
        for (Index i = 0; i < theta.size(); ++i) {
            const auto a = theta_ci(f.fit, cov, i, 0.90);
            const auto b = theta_ci(f.fit, cov, i, 0.95);
            const auto c = theta_ci(f.fit, cov, i, 0.99);
            CHECK(c.lower <= b.lower);
            CHECK(b.lower <= a.lower);
            CHECK(a.upper <= b.upper);
            CHECK(b.upper <= c.upper);
        }
    }
    SUBCASE("width grows without bound as the level approaches 1")
    {
        double prev = 0.0;
        for (double level : {0.9, 0.99, 0.9999, 0.999999, 1.0 - 1e-12}) {
            const auto ci = theta_ci(f.fit, cov, 0, level);
            CHECK(ci.upper - ci.lower > prev);
            prev = ci.upper - ci.lower;
        }
        const auto w90 = theta_ci(f.fit, cov, 0, 0.9);
        CHECK(prev > 4.0 * (w90.upper - w90.lower));
    }
    SUBCASE("zero variance gives a degenerate interval")
    {
        CovarianceEstimate zero = cov;
        zero.sigma_hat.row(2).setZero();
        zero.sigma_hat.col(2).setZero();
        const auto ci = theta_ci(f.fit, zero, 2, 0.95);
        CHECK(ci.lower == theta(2));
        CHECK(ci.upper == theta(2));
    }
    SUBCASE("index out of range")
    {
        CHECK_THROWS_AS(theta_ci(f.fit, cov, theta.size(), 0.95), ValidationError);
    }
}

TEST_CASE("probability_ci")
{
    const Fitted f = fitted_case(24, 0.3);
    const CovarianceEstimate cov = covariance_estimate(f.fit, f.data, f.config);
    std::mt19937_64 rng(25);
    SUBCASE("x = 0 uses the intercept variance only")
    {
        const Matrix x = Matrix::Zero(3, 2);
        CHECK(logit_standard_deviation(f.fit.theta, cov, x) == doctest::Approx(std::sqrt(cov.sigma_hat(0, 0))));
        const auto ci = probability_ci(f.fit, cov, x, 0.95);
        const double g = f.fit.theta.gamma();
        const double half = 1.959963984540054 * cov.standard_error(0);
        CHECK(ci.lower == doctest::Approx(sigmoid(g - half)));
        CHECK(ci.upper == doctest::Approx(sigmoid(g + half)));
    }
    SUBCASE("endpoints bracket the estimate inside [0,1]; logit width is 2 z sigma / sqrt n")
    {
        for (int rep = 0; rep < 100; ++rep) {
            const Matrix x = testutil::random_matrix(3, 2, rng, 1.0 + rep % 7);
            const double level = 0.5 + 0.0049 * rep;
            const auto ci = probability_ci(f.fit, cov, x, level);
            const double pr = success_probability(f.fit.theta, x);
            CHECK(0.0 <= ci.lower);
            CHECK(ci.lower <= pr);
            CHECK(pr <= ci.upper);
            CHECK(ci.upper <= 1.0);
            if (ci.lower > 1e-4 && ci.upper < 1.0 - 1e-4) {  // logit() loses digits near 0 and 1
                const double width = logit(ci.upper) - logit(ci.lower);
                const double want = 2.0 * normal_quantile_two_sided(level) *
                                    logit_standard_deviation(f.fit.theta, cov, x) / std::sqrt(200.0);
                CHECK(width == doctest::Approx(want).epsilon(1e-6));
            }
            const auto wide = probability_ci(f.fit, cov, x, std::min(0.999, level + 0.05));
            CHECK(wide.lower <= ci.lower);
            CHECK(ci.upper <= wide.upper);
        }
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(probability_ci(f.fit, cov, Matrix::Zero(2, 2), 0.95), ValidationError);
    }
}

TEST_CASE("coefficient table names skip the baseline")
{
    const auto names = free_parameter_names(3, 2, 1);
    REQUIRE(names.size() == 5);
    CHECK(names[0] == "gamma");
    CHECK(names[1] == "alpha[1]");
    CHECK(names[2] == "alpha[3]");
    CHECK(names[3] == "beta[1]");
    CHECK(names[4] == "beta[2]");
    const Fitted f = fitted_case(26, 0.1);
    const auto cov = covariance_estimate(f.fit, f.data, f.config);
    const auto rows = coefficient_table(f.fit, cov, 0.95);
    CHECK(rows.size() == 5);
    CHECK(rows[0].name == "gamma");
    CHECK(rows[4].estimate == f.fit.theta.beta()(1));
}
