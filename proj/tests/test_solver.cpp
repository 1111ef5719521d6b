#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvlogit/solver.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace mvlogit;
using testutil::random_dataset;
using testutil::random_matrix;
using testutil::random_theta;

namespace {

double penalized_objective(const Vector& free, const MatrixDataset& d, Index baseline, const FitConfig& cfg)
{
    const ThetaParam t = ThetaParam::from_free(free, d.p(), d.q(), baseline);
    return log_likelihood(t, d) - penalty(t, cfg.penalty, cfg.lambda);
}

// Newton on a single covariate with a scalar ridge on the slope, written out
// by hand: the 2x2 system is solved with Cramer's rule.
std::pair<double, double> scalar_ridge_logistic(const std::vector<double>& x, const std::vector<int>& y,
                                                double lambda)
{
    double a = 0.0, b = 0.0;
    for (int it = 0; it < 200; ++it) {
        double ga = 0, gb = 0, haa = 0, hab = 0, hbb = lambda;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double pr = 1.0 / (1.0 + std::exp(-(a + b * x[i])));
            const double v = pr * (1.0 - pr);
            ga += y[i] - pr;
            gb += (y[i] - pr) * x[i];
            haa += v;
            hab += v * x[i];
            hbb += v * x[i] * x[i];
        }
        gb -= lambda * b;
        const double det = haa * hbb - hab * hab;
        const double da = (hbb * ga - hab * gb) / det;
        const double db = (haa * gb - hab * ga) / det;
        a += da;
        b += db;
        if (std::max(std::abs(da), std::abs(db)) < 1e-14) break;
    }
    return {a, b};
}

}  // namespace

TEST_CASE("log_likelihood")
{
    std::mt19937_64 rng(11);
    SUBCASE("predictor identically zero gives -n log 2")
    {
        const MatrixDataset d = random_dataset(17, 3, 2, rng);
        CHECK(log_likelihood(ThetaParam::zero(3, 2, 0), d) == doctest::Approx(-17.0 * std::log(2.0)));
    }
    SUBCASE("single observation")
    {
        const MatrixDataset d({Matrix::Zero(2, 2)}, {1});
        CHECK(log_likelihood(ThetaParam::zero(2, 2, 1), d) == doctest::Approx(std::log(0.5)));
    }
    SUBCASE("per-term oracle")
    {
        for (int rep = 0; rep < 10; ++rep) {
            const ThetaParam t = random_theta(4, 3, rng, 1.0);
            const MatrixDataset d = random_dataset(25, 4, 3, rng, &t);
            CHECK(log_likelihood(t, d) ==
                  doctest::Approx(testutil::brute_loglik(t.gamma(), t.alpha(), t.beta(), d)).epsilon(1e-12));
        }
    }
    SUBCASE("large predictors stay finite")
    {
        const ThetaParam t(0.0, Vector::Ones(1), Vector::Constant(1, 1000.0), 0);
        const MatrixDataset d({Matrix::Ones(1, 1), -Matrix::Ones(1, 1)}, {0, 1});
        CHECK(log_likelihood(t, d) == doctest::Approx(-2000.0));
    }
    SUBCASE("dimension mismatch")
    {
        const MatrixDataset d = random_dataset(5, 3, 2, rng);
        CHECK_THROWS_AS(log_likelihood(ThetaParam::zero(2, 2, 0), d), ValidationError);
    }
}

TEST_CASE("penalty")
{
    std::mt19937_64 rng(12);
    const ThetaParam t = random_theta(4, 3, rng);
    CHECK(penalty(t, PenaltyKind::AllTheta, 0.0) == 0.0);
    Vector a = Vector::Zero(3);
    a(0) = 1.0;
    const ThetaParam g2(2.0, a, Vector::Zero(2), 0);
    CHECK(penalty(g2, PenaltyKind::AllTheta, 1.0) == doctest::Approx(2.0));
    CHECK(penalty(g2, PenaltyKind::NoIntercept, 1.0) == 0.0);
    for (int rep = 0; rep < 10; ++rep) {
        const ThetaParam r = random_theta(5, 4, rng, 2.0);
        double a2 = 0.0;
        for (Index i = 0; i < 5; ++i)
            if (i != r.baseline_row()) a2 += r.alpha()(i) * r.alpha()(i);
        const double b2 = r.beta().squaredNorm();
        CHECK(penalty(r, PenaltyKind::NoIntercept, 3.0) == doctest::Approx(3.0 * (a2 + b2) / 2.0));
        CHECK(penalty(r, PenaltyKind::AllTheta, 3.0) ==
              doctest::Approx(3.0 * (a2 + b2 + r.gamma() * r.gamma()) / 2.0));
    }
    CHECK_THROWS_AS(penalty(t, PenaltyKind::AllTheta, -1.0), ValidationError);
}

TEST_CASE("working_covariates")
{
    SUBCASE("zero covariate")
    {
        Vector a(3);
        a << 1, 2, 3;
        const ThetaParam t(0.0, a, Vector::Ones(2), 0);
        const Matrix w = working_covariates(t, MatrixDataset({Matrix::Zero(3, 2)}, {1}));
        CHECK(w.cols() == 5);
        CHECK(w(0, 0) == 1.0);
        CHECK(w.row(0).tail(4).cwiseAbs().sum() == 0.0);
    }
    SUBCASE("hand-expanded 2x2")
    {
        Matrix x(2, 2);
        x << 1, 2, 3, 4;
        Vector a(2);
        a << 1, 0.5;
        const ThetaParam t(0.0, a, Vector::Ones(2), 0);
        const Matrix w = working_covariates(t, MatrixDataset({x}, {1}));
        CHECK(w(0, 0) == 1.0);
        CHECK(w(0, 1) == 7.0);
        CHECK(w(0, 2) == 2.5);
        CHECK(w(0, 3) == 4.0);
    }
    SUBCASE("non-first baseline drops the right row")
    {
        Matrix x(3, 1);
        x << 10, 20, 30;
        Vector a(3);
        a << 0.1, 1.0, 0.2;
        const ThetaParam t(0.0, a, Vector::Constant(1, 2.0), 1);
        const Matrix w = working_covariates(t, MatrixDataset({x}, {0}));
        CHECK(w(0, 1) == 20.0);
        CHECK(w(0, 2) == 60.0);
        CHECK(w(0, 3) == doctest::Approx(0.1 * 10 + 20 + 0.2 * 30));
    }
    SUBCASE("chain rule: X(theta)'(Y - Pi) is the finite-difference gradient")
    {
        std::mt19937_64 rng(13);
        for (int rep = 0; rep < 5; ++rep) {
            const ThetaParam t = random_theta(4, 3, rng);
            const MatrixDataset d = random_dataset(30, 4, 3, rng, &t);
            const Matrix w = working_covariates(t, d);
            Vector resid(d.n());
            for (Index i = 0; i < d.n(); ++i) resid(i) = d.y(i) - success_probability(t, d.x(i));
            const Vector analytic = w.transpose() * resid;
            const Vector numeric = testutil::fd_gradient(
                [&](const Vector& f) {
                    const ThetaParam u = ThetaParam::from_free(f, 4, 3, t.baseline_row());
                    return testutil::brute_loglik(u.gamma(), u.alpha(), u.beta(), d);
                },
                t.free_parameters());
            CHECK(testutil::rel_error(analytic, numeric) < 1e-6);
        }
    }
}

TEST_CASE("gradient")
{
    std::mt19937_64 rng(14);
    SUBCASE("intercept component at predictor zero")
    {
        const MatrixDataset d = random_dataset(20, 3, 3, rng);
        const Vector g = gradient(ThetaParam::zero(3, 3, 0), d, FitConfig{});
        double want = 0.0;
        for (Index i = 0; i < d.n(); ++i) want += d.y(i) - 0.5;
        CHECK(g(0) == doctest::Approx(want));
    }
    SUBCASE("matches central finite differences")
    {
        for (int rep = 0; rep < 20; ++rep) {
            const Index p = 2 + rep % 4;
            const Index q = 1 + rep % 5;
            const ThetaParam t = random_theta(p, q, rng);
            const MatrixDataset d = random_dataset(40, p, q, rng, &t);
            FitConfig cfg;
            cfg.lambda = (rep % 3) * 0.7;
            cfg.penalty = rep % 2 ? PenaltyKind::AllTheta : PenaltyKind::NoIntercept;
            const Vector numeric = testutil::fd_gradient(
                [&](const Vector& f) { return penalized_objective(f, d, t.baseline_row(), cfg); },
                t.free_parameters());
            CHECK(testutil::rel_error(gradient(t, d, cfg), numeric) < 1e-6);
        }
    }
    SUBCASE("penalty enters linearly")
    {
        const ThetaParam t = random_theta(3, 4, rng);
        const MatrixDataset d = random_dataset(30, 3, 4, rng, &t);
        FitConfig plain, ridge;
        ridge.lambda = 2.5;
        ridge.penalty = PenaltyKind::NoIntercept;
        Vector expected = gradient(t, d, plain) - 2.5 * t.free_parameters();
        expected(0) += 2.5 * t.gamma();
        CHECK((gradient(t, d, ridge) - expected).cwiseAbs().maxCoeff() < 1e-10);
        ridge.penalty = PenaltyKind::AllTheta;
        expected = gradient(t, d, plain) - 2.5 * t.free_parameters();
        CHECK((gradient(t, d, ridge) - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fisher_hessian")
{
    std::mt19937_64 rng(15);
    SUBCASE("saturated probabilities leave the pure penalty")
    {
        Vector a = Vector::Zero(2);
        a(0) = 1.0;
        const ThetaParam t(1000.0, a, Vector::Zero(3), 0);
        const MatrixDataset d = random_dataset(10, 2, 3, rng);
        FitConfig cfg;
        cfg.lambda = 2.0;
        cfg.penalty = PenaltyKind::AllTheta;
        const Matrix h = fisher_hessian(t, d, cfg);
        CHECK((h - 2.0 * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("symmetric positive semidefinite")
    {
        for (int rep = 0; rep < 10; ++rep) {
            const ThetaParam t = random_theta(4, 3, rng);
            const MatrixDataset d = random_dataset(12, 4, 3, rng, &t);
            FitConfig cfg;
            cfg.lambda = rep % 2 ? 0.0 : 0.3;
            const Matrix h = fisher_hessian(t, d, cfg);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Matrix> es(h);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
            if (cfg.lambda > 0) CHECK(es.eigenvalues().minCoeff() > 0.0);
        }
    }
    SUBCASE("full Hessian = -H_lambda + dropped cross block")
    {
        for (int rep = 0; rep < 5; ++rep) {
            const ThetaParam t = random_theta(3, 4, rng);
            const MatrixDataset d = random_dataset(50, 3, 4, rng, &t);
            FitConfig cfg;
            cfg.lambda = 0.4 * rep;
            const Matrix numeric = testutil::fd_hessian(
                [&](const Vector& f) { return penalized_objective(f, d, t.baseline_row(), cfg); },
                t.free_parameters());
            Matrix analytic = -fisher_hessian(t, d, cfg);
            const Matrix cross = hessian_cross_block(t, d);
            analytic.block(1, 3, 2, 4) += cross;
            analytic.block(3, 1, 4, 2) += cross.transpose();
            CHECK(testutil::rel_error(analytic, numeric) < 1e-5);
        }
    }
}

TEST_CASE("fit")
{
    std::mt19937_64 rng(16);
    SUBCASE("complete separation with lambda 0 is reported, not hidden")
    {
        std::vector<Matrix> xs;
        std::vector<int> ys;
        for (int i = 0; i < 20; ++i) {
            xs.push_back(Matrix::Constant(1, 1, i < 10 ? -1.0 - i : 1.0 + i));
            ys.push_back(i < 10 ? 0 : 1);
        }
        const FitResult r = fit(MatrixDataset(xs, ys), FitConfig{});
        CHECK_FALSE(r.converged);
        CHECK(r.status != FitStatus::Converged);
    }
    SUBCASE("recovers parameters, monotone trace, pinned baseline")
    {
        Vector a(3), b(3);
        a << 1, 0.5, -0.5;
        b << 1, 0.5, 1;
        const ThetaParam truth(1.0, a, b, 0);
        const MatrixDataset d = random_dataset(3000, 3, 3, rng, &truth);
        FitConfig cfg;
        cfg.baseline_row = 0;
        const FitResult r = fit(d, cfg);
        CHECK(r.converged);
        CHECK(r.last_step < cfg.tol);
        CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations));
        for (std::size_t k = 1; k < r.trace.size(); ++k)
            CHECK(r.trace[k] >= r.trace[k - 1] - 1e-12 * (1.0 + std::abs(r.trace[k - 1])));
        CHECK(r.theta.alpha()(0) == 1.0);
        CHECK((r.theta.free_parameters() - truth.free_parameters()).cwiseAbs().maxCoeff() < 0.15);
        CHECK(r.final_gradient_norm < 1e-5);
    }
    SUBCASE("huge lambda leaves the intercept-only model")
    {
        const ThetaParam t = random_theta(3, 2, rng);
        const MatrixDataset d = random_dataset(80, 3, 2, rng, &t);
        FitConfig cfg;
        cfg.lambda = 1e9;
        cfg.penalty = PenaltyKind::NoIntercept;
        const FitResult r = fit(d, cfg);
        CHECK(r.converged);
        const double ybar = d.label_vector().mean();
        CHECK(r.theta.gamma() == doctest::Approx(std::log(ybar / (1.0 - ybar))).epsilon(1e-6));
        CHECK(r.theta.alpha_star().cwiseAbs().maxCoeff() < 1e-6);
        CHECK(r.theta.beta().cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("baseline comes from the correlation rule when not configured")
    {
        Vector a(4), b(2);
        a << 0.1, 0.1, 1.0, 0.1;
        b << 2, -2;
        const ThetaParam truth(0.0, a, b, 2);
        const MatrixDataset d = random_dataset(400, 4, 2, rng, &truth);
        const FitResult r = fit(d, FitConfig{});
        CHECK(r.theta.baseline_row() == select_baseline_row(d));
        CHECK(r.theta.baseline_row() == 2);
    }
    SUBCASE("constrained manifold matches the conventional likelihood")
    {
        for (int rep = 0; rep < 20; ++rep) {
            const ThetaParam t = random_theta(4, 3, rng, 1.0);
            const MatrixDataset d = random_dataset(30, 4, 3, rng, &t);
            const auto [g, xi] = vectorized_coefficient(t);
            CHECK(std::abs(log_likelihood(t, d) - conventional_log_likelihood(g, xi, d)) < 1e-10);
        }
    }
    SUBCASE("row permutation permutes alpha and nothing else")
    {
        const ThetaParam t = random_theta(4, 3, rng, 0.8);
        const MatrixDataset d = random_dataset(120, 4, 3, rng, &t);
        const std::vector<Index> perm{2, 0, 3, 1};  // new row k holds old row perm[k]
        std::vector<Matrix> permuted;
        for (const Matrix& m : d.matrices()) {
            Matrix x(4, 3);
            for (Index k = 0; k < 4; ++k) x.row(k) = m.row(perm[static_cast<std::size_t>(k)]);
            permuted.push_back(x);
        }
        for (PenaltyKind kind : {PenaltyKind::NoIntercept, PenaltyKind::AllTheta}) {
            FitConfig cfg;
            cfg.lambda = 0.5;
            cfg.penalty = kind;
            cfg.tol = 1e-11;
            cfg.max_iter = 500;
            cfg.baseline_row = 0;
            const FitResult base = fit(d, cfg);
            cfg.baseline_row = 1;  // old row 0 now sits at position 1
            const FitResult perm_fit = fit(d.with_matrices(permuted), cfg);
            CHECK(perm_fit.converged);
            for (Index k = 0; k < 4; ++k)
                CHECK(perm_fit.theta.alpha()(k) ==
                      doctest::Approx(base.theta.alpha()(perm[static_cast<std::size_t>(k)])).epsilon(1e-7));
            CHECK((perm_fit.theta.beta() - base.theta.beta()).cwiseAbs().maxCoeff() < 1e-7);
            CHECK(perm_fit.theta.gamma() == doctest::Approx(base.theta.gamma()).epsilon(1e-7));
            CHECK(perm_fit.loglik == doctest::Approx(base.loglik).epsilon(1e-10));
        }
    }
    SUBCASE("invalid configuration")
    {
        const MatrixDataset d = random_dataset(10, 2, 2, rng);
        FitConfig cfg;
        cfg.lambda = -1.0;
        CHECK_THROWS_AS(fit(d, cfg), ValidationError);
        cfg.lambda = 0.0;
        cfg.max_iter = 0;
        CHECK_THROWS_AS(fit(d, cfg), ValidationError);
        cfg.max_iter = 10;
        cfg.baseline_row = 5;
        CHECK_THROWS_AS(fit(d, cfg), ValidationError);
    }
}

TEST_CASE("fit_conventional")
{
    std::mt19937_64 rng(17);
    SUBCASE("1x1 covariate matches a hand-rolled scalar Newton solve")
    {
        std::vector<Matrix> xs;
        std::vector<int> ys;
        std::vector<double> raw;
        std::normal_distribution<double> z(0.0, 1.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 60; ++i) {
            const double x = z(rng);
            const int y = u(rng) < 1.0 / (1.0 + std::exp(-(0.3 + 1.2 * x))) ? 1 : 0;
            raw.push_back(x);
            ys.push_back(y);
            xs.push_back(Matrix::Constant(1, 1, x));
        }
        const MatrixDataset d(xs, ys);
        for (double lambda : {0.0, 0.5, 5.0}) {
            const ConventionalFit c = fit_conventional(d, lambda, PenaltyKind::NoIntercept);
            const auto [a, b] = scalar_ridge_logistic(raw, ys, lambda);
            CHECK(c.converged);
            CHECK(c.gamma == doctest::Approx(a).epsilon(1e-8));
            CHECK(c.xi(0) == doctest::Approx(b).epsilon(1e-8));
        }
    }
    SUBCASE("row-space refit equals the direct fit when pq > n")
    {
        const MatrixDataset d = random_dataset(25, 6, 6, rng);
        for (PenaltyKind kind : {PenaltyKind::NoIntercept, PenaltyKind::AllTheta}) {
            RidgeOptions direct;
            direct.allow_row_space_reduction = false;
            direct.tol = 1e-12;
            RidgeOptions reduced = direct;
            reduced.allow_row_space_reduction = true;
            const ConventionalFit a = fit_conventional(d, 1.5, kind, direct);
            const ConventionalFit b = fit_conventional(d, 1.5, kind, reduced);
            CHECK(a.converged);
            CHECK(b.converged);
            CHECK(a.gamma == doctest::Approx(b.gamma).epsilon(1e-8));
            CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(a.penalized_loglik == doctest::Approx(b.penalized_loglik).epsilon(1e-10));
        }
    }
    SUBCASE("gradient of the conventional objective vanishes at the optimum")
    {
        const MatrixDataset d = random_dataset(50, 3, 3, rng);
        const ConventionalFit c = fit_conventional(d, 0.8, PenaltyKind::AllTheta);
        Vector coef(10);
        coef(0) = c.gamma;
        coef.tail(9) = c.xi;
        const Vector g = testutil::fd_gradient(
            [&](const Vector& w) {
                return conventional_log_likelihood(w(0), w.tail(9), d) - 0.4 * w.squaredNorm();
            },
            coef);
        CHECK(g.cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("folds")
{
    std::vector<int> labels;
    for (int i = 0; i < 23; ++i) labels.push_back(i % 3 == 0 ? 1 : 0);
    const CvScheme loo{CvScheme::Kind::LeaveOneOut, 0, 1};
    const auto f = make_folds(labels, loo);
    for (int i = 0; i < 23; ++i) CHECK(f[static_cast<std::size_t>(i)] == i);

    const CvScheme k5{CvScheme::Kind::KFold, 5, 99};
    const auto a = make_folds(labels, k5);
    CHECK(a == make_folds(labels, k5));
    for (int fold = 0; fold < 5; ++fold) {
        int ones = 0, total = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (a[i] == fold) {
                ++total;
                ones += labels[i];
            }
        CHECK(total >= 4);
        CHECK(total <= 5);
        CHECK(ones >= 1);
        CHECK(ones <= 2);
    }
    CHECK_THROWS_AS(make_folds(labels, CvScheme{CvScheme::Kind::KFold, 1, 1}), ValidationError);
    CHECK_THROWS_AS(make_folds(labels, CvScheme{CvScheme::Kind::KFold, 30, 1}), ValidationError);
}

TEST_CASE("select_lambda_cv")
{
    std::mt19937_64 rng(18);
    Vector a(3), b(3);
    a << 1, -1, 0.5;
    b << 2, 1, -2;
    const ThetaParam truth(0.0, a, b, 0);
    const MatrixDataset d = random_dataset(60, 3, 3, rng, &truth);

    SUBCASE("single grid value")
    {
        const CvResult r = select_lambda_cv(d, {3.0}, CvScheme{CvScheme::Kind::KFold, 5, 1});
        CHECK(r.best_lambda == 3.0);
        CHECK(r.table.size() == 1);
    }
    SUBCASE("huge lambda destroys the signal")
    {
        const std::vector<double> grid{0.01, 0.1, 1.0, 1e6};
        CvOptions opt;
        opt.penalty = PenaltyKind::NoIntercept;
        const CvResult r = select_lambda_cv(d, grid, CvScheme{}, opt);
        CHECK(r.best_lambda < 1e6);
        CHECK(r.best_accuracy > 0.75);
        CHECK(r.table.back().accuracy < r.best_accuracy);
        CHECK(r.held_out_probability.size() == 60);
    }
    SUBCASE("conventional arm and thread count do not change results")
    {
        CvOptions opt;
        opt.arm = Arm::Conventional;
        const CvScheme k{CvScheme::Kind::KFold, 6, 3};
        const CvResult one = select_lambda_cv(d, {0.1, 1.0, 10.0}, k, opt);
        opt.threads = 4;
        const CvResult four = select_lambda_cv(d, {0.1, 1.0, 10.0}, k, opt);
        CHECK(one.best_lambda == four.best_lambda);
        for (std::size_t g = 0; g < 3; ++g) CHECK(one.table[g].correct == four.table[g].correct);
        CHECK(one.held_out_probability == four.held_out_probability);
    }
    SUBCASE("ties go to the smallest lambda")
    {
        const CvResult r = select_lambda_cv(d, {5.0, 4.0, 4.0 + 1e-12}, CvScheme{CvScheme::Kind::KFold, 4, 2});
        if (r.table[0].correct == r.table[1].correct && r.table[1].correct == r.table[2].correct)
            CHECK(r.best_lambda == 4.0);
    }
    SUBCASE("empty grid")
    {
        CHECK_THROWS_AS(select_lambda_cv(d, {}, CvScheme{}), ValidationError);
    }
}

TEST_CASE("observed and Fisher curvature reach the same optimum")
{
    // labels from a full-rank coefficient, so the rank-1 fit is misspecified
    // and the cross block stays far from zero at the optimum
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Matrix xi = testutil::random_matrix(4, 3, rng, 0.8);
    std::vector<Matrix> xs;
    std::vector<int> ys;
    for (int i = 0; i < 200; ++i) {
        Matrix x = testutil::random_matrix(4, 3, rng);
        ys.push_back(u(rng) < 1.0 / (1.0 + std::exp(-(0.3 + xi.cwiseProduct(x).sum()))) ? 1 : 0);
        xs.push_back(std::move(x));
    }
    const MatrixDataset d(xs, ys);
    FitConfig fisher;
    fisher.lambda = 0.5;
    fisher.baseline_row = 0;
    fisher.curvature = Curvature::Fisher;
    fisher.max_iter = 20000;
    FitConfig observed = fisher;
    observed.curvature = Curvature::Observed;
    observed.max_iter = 100;

    const FitResult a = fit(d, fisher);
    const FitResult b = fit(d, observed);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(b.iterations < a.iterations);
    CHECK((a.theta.free_parameters() - b.theta.free_parameters()).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(gradient(b.theta, d, observed).lpNorm<Eigen::Infinity>() < 1e-6);

    CHECK(curvature_from_string(to_string(Curvature::Fisher)) == Curvature::Fisher);
    CHECK(curvature_from_string("observed") == Curvature::Observed);
    CHECK_THROWS_AS(curvature_from_string("exact"), ValidationError);
}
