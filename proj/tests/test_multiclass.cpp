#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvlogit/multiclass.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mvlogit;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

struct Truth {
    std::vector<double> gamma;
    std::vector<Vector> alpha, beta;
};

// blocks for classes 1..H-1, alpha_h[0] = 1
Truth random_truth(int classes, Index p, Index q, std::mt19937_64& rng, double sd = 0.6)
{
    Truth t;
    std::normal_distribution<double> z(0.0, sd);
    for (int h = 0; h + 1 < classes; ++h) {
        t.gamma.push_back(z(rng));
        Vector a = random_vector(p, rng, sd);
        a(0) = 1.0;
        t.alpha.push_back(a);
        t.beta.push_back(random_vector(q, rng, sd));
    }
    return t;
}

double brute_eta(const Truth& t, std::size_t h, const Matrix& x)
{
    double eta = t.gamma[h];
    for (Index r = 0; r < x.rows(); ++r)
        for (Index c = 0; c < x.cols(); ++c) eta += t.alpha[h](r) * t.beta[h](c) * x(r, c);
    return eta;
}

MultiClassDataset draw(const Truth& t, int classes, Index n, Index p, Index q, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Matrix> xs;
    std::vector<int> ys;
    for (Index i = 0; i < n; ++i) {
        Matrix x = random_matrix(p, q, rng);
        std::vector<double> w{};
        double total = 1.0;  // reference class H
        for (std::size_t h = 0; h + 1 < static_cast<std::size_t>(classes); ++h) {
            w.push_back(std::exp(brute_eta(t, h, x)));
            total += w.back();
        }
        double r = u(rng) * total;
        int label = classes;
        for (std::size_t h = 0; h < w.size(); ++h) {
            if (r < w[h]) {
                label = static_cast<int>(h) + 1;
                break;
            }
            r -= w[h];
        }
        xs.push_back(std::move(x));
        ys.push_back(label);
    }
    for (int h = 1; h <= classes; ++h) ys[static_cast<std::size_t>(h - 1)] = h;  // every class present
    return MultiClassDataset(std::move(xs), std::move(ys), classes);
}

ThetaMulti truth_theta(const Truth& t, const MultiClassDataset& d)
{
    ThetaMulti th;
    th.num_classes = d.num_classes();
    th.reference_class = d.reference_class();
    th.block_classes = d.non_reference_classes();
    for (std::size_t h = 0; h < t.gamma.size(); ++h) th.blocks.emplace_back(t.gamma[h], t.alpha[h], t.beta[h], 0);
    return th;
}

ThetaMulti random_multi(const MultiClassDataset& d, Index baseline, std::mt19937_64& rng)
{
    const auto classes = d.non_reference_classes();
    return ThetaMulti::from_free(random_vector((d.p() + d.q()) * static_cast<Index>(classes.size()), rng, 0.5),
                                 d.p(), d.q(), baseline, classes, d.num_classes(), d.reference_class());
}

}  // namespace

TEST_CASE("dataset validation")
{
    const std::vector<Matrix> xs{Matrix::Zero(2, 2), Matrix::Ones(2, 2)};
    CHECK_NOTHROW(MultiClassDataset(xs, {1, 3}, 3));
    CHECK_THROWS_AS(MultiClassDataset(xs, {0, 1}, 3), ValidationError);
    CHECK_THROWS_AS(MultiClassDataset(xs, {1, 4}, 3), ValidationError);
    CHECK_THROWS_AS(MultiClassDataset(xs, {1, 1}, 1), ValidationError);
    CHECK_THROWS_AS(MultiClassDataset(xs, {1, 2}, 3, 4), ValidationError);
    CHECK_THROWS_AS(MultiClassDataset({Matrix::Zero(2, 2), Matrix::Zero(3, 2)}, {1, 2}, 2), ValidationError);
    const MultiClassDataset d(xs, {1, 3}, 3);
    CHECK(d.reference_class() == 3);
    CHECK(d.non_reference_classes() == std::vector<int>{1, 2});
    CHECK(MultiClassDataset(xs, {1, 3}, 3, 1).non_reference_classes() == std::vector<int>{2, 3});
}

TEST_CASE("class_probabilities")
{
    std::mt19937_64 rng(1);
    const Truth t = random_truth(4, 3, 2, rng);
    const MultiClassDataset d = draw(t, 4, 20, 3, 2, rng);
    SUBCASE("zero predictors give the uniform distribution")
    {
        const ThetaMulti z = ThetaMulti::zero(d, 0);
        const Vector pr = class_probabilities(z, Matrix::Zero(3, 2));
        for (Index h = 0; h < 4; ++h) CHECK(pr(h) == doctest::Approx(0.25).epsilon(1e-15));
    }
    SUBCASE("normalized, positive, and against a direct softmax")
    {
        for (int rep = 0; rep < 50; ++rep) {
            const ThetaMulti th = random_multi(d, rep % 3, rng);
            const Matrix x = random_matrix(3, 2, rng, 1.0 + rep % 4);
            const Vector pr = class_probabilities(th, x);
            CHECK(std::abs(pr.sum() - 1.0) < 1e-12);
            CHECK(pr.minCoeff() > 0.0);
            double denom = 1.0;
            for (const auto& b : th.blocks) denom += std::exp(b.gamma() + b.alpha().dot(x * b.beta()));
            CHECK(pr(3) == doctest::Approx(1.0 / denom).epsilon(1e-12));
        }
    }
    SUBCASE("huge predictors stay finite")
    {
        ThetaMulti th = ThetaMulti::zero(d, 0);
        th.blocks[1] = ThetaParam(900.0, th.blocks[1].alpha(), th.blocks[1].beta(), 0);
        const Vector pr = class_probabilities(th, Matrix::Zero(3, 2));
        CHECK(pr.allFinite());
        CHECK(pr(1) == doctest::Approx(1.0));
        CHECK(std::abs(pr.sum() - 1.0) < 1e-12);
    }
    SUBCASE("moving one intercept changes the distribution")
    {
        const ThetaMulti th = random_multi(d, 0, rng);
        ThetaMulti moved = th;
        const auto& b = th.blocks[0];
        moved.blocks[0] = ThetaParam(b.gamma() + 0.3, b.alpha(), b.beta(), 0);
        const Matrix x = random_matrix(3, 2, rng);
        CHECK((class_probabilities(th, x) - class_probabilities(moved, x)).cwiseAbs().maxCoeff() > 1e-3);
    }
    SUBCASE("two classes reduce to the binary probability")
    {
        const MultiClassDataset d2({Matrix::Zero(3, 2)}, {1}, 2);
        for (int rep = 0; rep < 50; ++rep) {
            const ThetaMulti th = random_multi(d2, 1, rng);
            const Matrix x = random_matrix(3, 2, rng, 3.0);
            CHECK(class_probabilities(th, x)(0) == doctest::Approx(success_probability(th.blocks[0], x)).epsilon(1e-15));
        }
    }
    SUBCASE("reference class 1 puts the normalizer first")
    {
        const MultiClassDataset d1(d.matrices(), d.labels(), 4, 1);
        const ThetaMulti th = ThetaMulti::zero(d1, 0);
        CHECK(th.block_classes == std::vector<int>{2, 3, 4});
        CHECK(class_probabilities(th, Matrix::Zero(3, 2)).sum() == doctest::Approx(1.0));
    }
    SUBCASE("dimension mismatch")
    {
        CHECK_THROWS_AS(class_probabilities(ThetaMulti::zero(d, 0), Matrix::Zero(2, 2)), ValidationError);
    }
}

TEST_CASE("multiclass_log_likelihood")
{
    std::mt19937_64 rng(2);
    SUBCASE("one observation in the reference class at x = 0 is log(1/H)")
    {
        for (int classes : {2, 3, 5}) {
            const MultiClassDataset d({Matrix::Zero(2, 3)}, {classes}, classes);
            CHECK(multiclass_log_likelihood(ThetaMulti::zero(d, 0), d) == doctest::Approx(std::log(1.0 / classes)));
        }
    }
    SUBCASE("per-term oracle")
    {
        const Truth t = random_truth(3, 4, 3, rng);
        const MultiClassDataset d = draw(t, 3, 60, 4, 3, rng);
        const ThetaMulti th = truth_theta(t, d);
        double want = 0.0;
        for (Index i = 0; i < d.n(); ++i) {
            double denom = 1.0;
            for (std::size_t h = 0; h < 2; ++h) denom += std::exp(brute_eta(t, h, d.x(i)));
            const int y = d.label(i);
            const double num = y == 3 ? 1.0 : std::exp(brute_eta(t, static_cast<std::size_t>(y - 1), d.x(i)));
            want += std::log(num / denom);
        }
        CHECK(multiclass_log_likelihood(th, d) == doctest::Approx(want).epsilon(1e-12));
    }
    SUBCASE("two classes equal the binary log-likelihood")
    {
        for (int rep = 0; rep < 10; ++rep) {
            const Truth t = random_truth(2, 3, 3, rng);
            const MultiClassDataset d = draw(t, 2, 40, 3, 3, rng);
            const ThetaMulti th = random_multi(d, rep % 3, rng);
            CHECK(multiclass_log_likelihood(th, d) ==
                  doctest::Approx(log_likelihood(th.blocks[0], d.one_vs_rest(1))).epsilon(1e-12));
        }
    }
}

TEST_CASE("gradient and information")
{
    std::mt19937_64 rng(3);
    SUBCASE("three-class gradient matches finite differences")
    {
        for (int rep = 0; rep < 20; ++rep) {
            const Index p = 2 + rep % 4, q = 1 + rep % 3;
            const Truth t = random_truth(3, p, q, rng);
            const MultiClassDataset d = draw(t, 3, 50, p, q, rng);
            const Index b = rep % p;
            const ThetaMulti th = random_multi(d, b, rng);
            FitConfig cfg;
            cfg.lambda = (rep % 3) * 0.7;
            cfg.penalty = rep % 2 ? PenaltyKind::AllTheta : PenaltyKind::NoIntercept;
            const auto f = [&](const Vector& free) {
                const ThetaMulti x = ThetaMulti::from_free(free, p, q, b, th.block_classes, 3, 3);
                return multiclass_log_likelihood(x, d) - multiclass_penalty(x, cfg.penalty, cfg.lambda);
            };
            const Vector g = multiclass_gradient(th, d, cfg);
            CHECK(testutil::rel_error(g, testutil::fd_gradient(f, th.free_parameters())) < 1e-6);
        }
    }
    SUBCASE("information is the sum of per-subject multinomial blocks")
    {
        const Truth t = random_truth(4, 3, 2, rng);
        const MultiClassDataset d = draw(t, 4, 30, 3, 2, rng);
        const ThetaMulti th = random_multi(d, 2, rng);
        const Index dim = 5;
        Matrix want = Matrix::Zero(3 * dim, 3 * dim);
        for (Index i = 0; i < d.n(); ++i) {
            // J_i: rows of the working design per block, V_i = diag(pi) - pi pi'
            Matrix jac = Matrix::Zero(3, 3 * dim);
            Vector pi(3);
            const Vector all = class_probabilities(th, d.x(i));
            for (Index h = 0; h < 3; ++h) {
                const ThetaParam& blk = th.blocks[static_cast<std::size_t>(h)];
                const Vector xb = d.x(i) * blk.beta();
                Vector row(dim);
                row << 1.0, xb(0), xb(1), d.x(i).transpose() * blk.alpha();
                jac.block(h, h * dim, 1, dim) = row.transpose();
                pi(h) = all(h);
            }
            const Matrix v = Matrix(pi.asDiagonal()) - pi * pi.transpose();
            Eigen::SelfAdjointEigenSolver<Matrix> es(v);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
            want += jac.transpose() * v * jac;
        }
        const Matrix got = multiclass_information(th, d);
        CHECK(testutil::rel_error(got, want) < 1e-12);
        Eigen::SelfAdjointEigenSolver<Matrix> es(got);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
    }
    SUBCASE("two classes equal the binary gradient and Hessian")
    {
        const Truth t = random_truth(2, 4, 2, rng);
        const MultiClassDataset d = draw(t, 2, 40, 4, 2, rng);
        const ThetaMulti th = random_multi(d, 1, rng);
        FitConfig cfg;
        cfg.lambda = 0.4;
        const MatrixDataset bin = d.one_vs_rest(1);
        CHECK(testutil::rel_error(multiclass_gradient(th, d, cfg), gradient(th.blocks[0], bin, cfg)) < 1e-12);
        CHECK(testutil::rel_error(multiclass_fisher_hessian(th, d, cfg), fisher_hessian(th.blocks[0], bin, cfg)) <
              1e-12);
    }
}

TEST_CASE("two-class fit reproduces the binary fit")
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 10; ++rep) {
        const Index p = 2 + rep % 3, q = 2 + rep % 2;
        const Truth t = random_truth(2, p, q, rng);
        const MultiClassDataset d = draw(t, 2, 120, p, q, rng);
        FitConfig cfg;
        cfg.lambda = 0.5 * (rep % 3);
        const MultiFitResult m = multiclass_fit(d, cfg);
        const FitResult b = fit(d.one_vs_rest(1), cfg);
        REQUIRE(m.converged);
        REQUIRE(b.converged);
        CHECK(m.theta.baseline_row() == b.theta.baseline_row());
        CHECK((m.theta.free_parameters() - b.theta.free_parameters()).lpNorm<Eigen::Infinity>() < 1e-8);
        CHECK(m.loglik == doctest::Approx(b.loglik).epsilon(1e-10));

        const CovarianceEstimate mc = multiclass_covariance(m, d, cfg);
        const CovarianceEstimate bc = covariance_estimate(b, d.one_vs_rest(1), cfg);
        CHECK(testutil::rel_error(mc.sigma_hat, bc.sigma_hat) < 1e-6);
    }
}

TEST_CASE("three-class fit against a black-box maximizer")
{
    std::mt19937_64 rng(5);
    Truth t;
    t.gamma = {0.4, -0.3};
    Vector a1(4), a2(4), b1(3), b2(3);
    a1 << 1.0, 0.5, -0.5, 0.3;
    a2 << 1.0, -0.6, 0.2, 0.4;
    b1 << 1.0, -0.8, 0.5;
    b2 << -0.7, 0.6, 0.9;
    t.alpha = {a1, a2};
    t.beta = {b1, b2};
    const MultiClassDataset d = draw(t, 3, 500, 4, 3, rng);

    FitConfig cfg;
    cfg.lambda = 0.05;
    cfg.baseline_row = 0;
    const MultiFitResult r = multiclass_fit(d, cfg);
    REQUIRE(r.converged);

    const auto f = [&](const Vector& free) {
        const ThetaMulti x = ThetaMulti::from_free(free, 4, 3, 0, {1, 2}, 3, 3);
        return multiclass_log_likelihood(x, d) - multiclass_penalty(x, cfg.penalty, cfg.lambda);
    };
    const Vector oracle = testutil::bfgs_maximize(f, ThetaMulti::zero(d, 0).free_parameters());
    CHECK((r.theta.free_parameters() - oracle).lpNorm<Eigen::Infinity>() < 1e-4);
    CHECK(r.penalized_loglik >= f(oracle) - 1e-8);
    CHECK(multiclass_gradient(r.theta, d, cfg).lpNorm<Eigen::Infinity>() < 1e-6);

    const Vector truth = truth_theta(t, d).free_parameters();
    MESSAGE("sup error to the truth: " << (r.theta.free_parameters() - truth).lpNorm<Eigen::Infinity>());
    CHECK((r.theta.free_parameters() - truth).lpNorm<Eigen::Infinity>() < 0.5);
}

TEST_CASE("multiclass covariance")
{
    std::mt19937_64 rng(6);
    const Truth t = random_truth(3, 3, 2, rng, 0.4);
    const MultiClassDataset d = draw(t, 3, 400, 3, 2, rng);
    for (double lambda : {0.0, 0.3}) {
        FitConfig cfg;
        cfg.lambda = lambda;
        const MultiFitResult r = multiclass_fit(d, cfg);
        REQUIRE(r.converged);
        const CovarianceEstimate cov = multiclass_covariance(r, d, cfg);
        CHECK(cov.sigma_hat.rows() == 10);
        CHECK((cov.sigma_hat - cov.sigma_hat.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> es(cov.sigma_hat);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        if (lambda == 0.0) {
            const Matrix inv = (multiclass_information(r.theta, d) / 400.0).inverse();
            CHECK((cov.sigma_hat - inv).cwiseAbs().maxCoeff() < 1e-9 * inv.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("fit configuration errors and prediction")
{
    std::mt19937_64 rng(7);
    const Truth t = random_truth(3, 2, 2, rng);
    const MultiClassDataset d = draw(t, 3, 60, 2, 2, rng);
    FitConfig cfg;
    cfg.baseline_row = 5;
    CHECK_THROWS_AS(multiclass_fit(d, cfg), ValidationError);
    cfg.baseline_row.reset();
    cfg.init = ThetaParam::zero(2, 2, 0);
    CHECK_THROWS_AS(multiclass_fit(d, cfg), ValidationError);
    cfg.init.reset();
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(multiclass_fit(d, cfg), ValidationError);

    const ThetaMulti z = ThetaMulti::zero(d, 0);
    CHECK(predict_class(z, Matrix::Zero(2, 2)) == 1);  // uniform ties go to the smallest label
    ThetaMulti up = z;
    up.blocks[1] = ThetaParam(2.0, z.blocks[1].alpha(), z.blocks[1].beta(), 0);
    CHECK(predict_class(up, Matrix::Zero(2, 2)) == 2);
    ThetaMulti down = z;
    down.blocks[0] = ThetaParam(-2.0, z.blocks[0].alpha(), z.blocks[0].beta(), 0);
    down.blocks[1] = ThetaParam(-2.0, z.blocks[1].alpha(), z.blocks[1].beta(), 0);
    CHECK(predict_class(down, Matrix::Zero(2, 2)) == 3);
}
