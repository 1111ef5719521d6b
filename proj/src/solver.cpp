#include "mvlogit/solver.hpp"

#include "mvlogit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mvlogit {

std::string to_string(Curvature c)
{
    return c == Curvature::Fisher ? "fisher" : "observed";
}

Curvature curvature_from_string(const std::string& name)
{
    if (name == "fisher") return Curvature::Fisher;
    if (name == "observed") return Curvature::Observed;
    throw ValidationError("unknown curvature '" + name + "' (expected fisher or observed)");
}

void FitConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be a finite value >= 0");
    if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
    if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
    if (max_halvings < 0) throw ValidationError("max_halvings must be >= 0");
}

NewtonOptions FitConfig::newton_options() const
{
    NewtonOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.step_halving = step_halving;
    o.max_halvings = max_halvings;
    o.separation_bound = lambda == 0.0 ? separation_bound : 0.0;
    return o;
}

namespace {

void check_dims(const ThetaParam& theta, const MatrixDataset& data)
{
    if (theta.p() != data.p() || theta.q() != data.q())
        throw ValidationError("model is " + std::to_string(theta.p()) + "x" + std::to_string(theta.q()) +
                              " but the data are " + std::to_string(data.p()) + "x" + std::to_string(data.q()));
}

Vector predictors(const ThetaParam& theta, const MatrixDataset& data)
{
    Vector eta(data.n());
    for (Index i = 0; i < data.n(); ++i) eta(i) = theta.gamma() + theta.alpha().dot(data.x(i) * theta.beta());
    return eta;
}

Vector probabilities(const Vector& eta)
{
    return eta.unaryExpr([](double e) { return sigmoid(e); });
}

struct Derivatives {
    Vector gradient;
    Matrix hessian;
};

Derivatives mv_derivatives(const ThetaParam& theta, const MatrixDataset& data, double lambda, PenaltyKind kind)
{
    const Matrix w = working_covariates(theta, data);
    const Vector pi = probabilities(predictors(theta, data));
    const Vector resid = data.label_vector() - pi;
    const Vector v = pi.array() * (1.0 - pi.array());
    const Vector mask = penalty_mask(theta.p(), theta.q(), kind);

    Derivatives d;
    d.gradient = w.transpose() * resid - lambda * mask.cwiseProduct(theta.free_parameters());
    d.hessian = w.transpose() * v.asDiagonal() * w;
    d.hessian.diagonal() += lambda * mask;
    return d;
}

double ridge_objective(const Matrix& z, const Vector& y, const Vector& mask, double lambda, const Vector& w)
{
    const Vector eta = z * w;
    double ll = 0.0;
    for (Index i = 0; i < eta.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
    return ll - 0.5 * lambda * mask.cwiseProduct(w).squaredNorm();
}

NewtonOutcome fit_design(const Matrix& z, const Vector& y, const Vector& mask, double lambda,
                         const NewtonOptions& options)
{
    NewtonProblem problem;
    problem.objective = [&](const Vector& w) { return ridge_objective(z, y, mask, lambda, w); };
    problem.derivatives = [&](const Vector& w, Vector& g, Matrix& h) {
        const Vector pi = probabilities(z * w);
        const Vector v = pi.array() * (1.0 - pi.array());
        g = z.transpose() * (y - pi) - lambda * mask.cwiseProduct(w);
        h = z.transpose() * v.asDiagonal() * z;
        h.diagonal() += lambda * mask;
    };
    return run_newton(problem, Vector::Zero(z.cols()), options);
}

}  // namespace

double log_likelihood(const ThetaParam& theta, const MatrixDataset& data)
{
    check_dims(theta, data);
    double ll = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        const double eta = theta.gamma() + theta.alpha().dot(data.x(i) * theta.beta());
        ll += data.y(i) * eta - softplus(eta);
    }
    return ll;
}

Vector penalty_mask(Index p, Index q, PenaltyKind kind)
{
    Vector mask = Vector::Ones(p + q);
    if (kind == PenaltyKind::NoIntercept) mask(0) = 0.0;
    return mask;
}

double penalty(const ThetaParam& theta, PenaltyKind kind, double lambda)
{
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    if (lambda == 0.0) return 0.0;
    double j = theta.alpha_star().squaredNorm() + theta.beta().squaredNorm();
    if (kind == PenaltyKind::AllTheta) j += theta.gamma() * theta.gamma();
    return lambda * 0.5 * j;
}

Matrix working_covariates(const ThetaParam& theta, const MatrixDataset& data)
{
    check_dims(theta, data);
    return working_covariates(theta, data.matrices());
}

Matrix working_covariates(const ThetaParam& theta, const std::vector<Matrix>& matrices)
{
    const Index p = theta.p();
    const Index q = theta.q();
    const Index b = theta.baseline_row();
    const Index n = static_cast<Index>(matrices.size());
    Matrix w(n, p + q);
    for (Index i = 0; i < n; ++i) {
        const Matrix& x = matrices[static_cast<std::size_t>(i)];
        if (x.rows() != p || x.cols() != q) throw ValidationError("covariate matrix does not match the model size");
        const Vector xb = x * theta.beta();
        w(i, 0) = 1.0;
        // beta' X_i' C: X_i beta with the baseline row dropped
        w.row(i).segment(1, b) = xb.head(b).transpose();
        w.row(i).segment(1 + b, p - 1 - b) = xb.tail(p - 1 - b).transpose();
        w.row(i).tail(q) = (x.transpose() * theta.alpha()).transpose();
    }
    return w;
}

Vector gradient(const ThetaParam& theta, const MatrixDataset& data, const FitConfig& config)
{
    config.validate();
    return mv_derivatives(theta, data, config.lambda, config.penalty).gradient;
}

Matrix fisher_hessian(const ThetaParam& theta, const MatrixDataset& data, const FitConfig& config)
{
    config.validate();
    return mv_derivatives(theta, data, config.lambda, config.penalty).hessian;
}

Matrix empirical_information(const ThetaParam& theta, const MatrixDataset& data)
{
    const Matrix w = working_covariates(theta, data);
    const Vector pi = probabilities(predictors(theta, data));
    const Vector v = pi.array() * (1.0 - pi.array());
    return w.transpose() * v.asDiagonal() * w;
}

Matrix hessian_cross_block(const ThetaParam& theta, const MatrixDataset& data)
{
    check_dims(theta, data);
    const Index p = theta.p();
    const Index b = theta.baseline_row();
    const Vector pi = probabilities(predictors(theta, data));
    Matrix sum = Matrix::Zero(p, theta.q());
    for (Index i = 0; i < data.n(); ++i) sum += (data.y(i) - pi(i)) * data.x(i);
    Matrix out(p - 1, theta.q());
    out.topRows(b) = sum.topRows(b);
    out.bottomRows(p - 1 - b) = sum.bottomRows(p - 1 - b);
    return out;
}

FitResult fit(const MatrixDataset& data, const FitConfig& config)
{
    config.validate();
    const Index p = data.p();
    const Index q = data.q();

    Index baseline = 0;
    if (config.baseline_row) {
        baseline = *config.baseline_row;
    } else if (config.init) {
        baseline = config.init->baseline_row();
    } else {
        try {
            baseline = select_baseline_row(data);
        } catch (const ValidationError&) {
            baseline = 0;  // single-class data: every row is equally (un)informative
        }
    }
    if (baseline < 0 || baseline >= p) throw ValidationError("baseline row out of range");

    Vector x0;
    if (config.init) {
        check_dims(*config.init, data);
        if (config.init->baseline_row() != baseline)
            throw ValidationError("initial theta pins a different baseline row than the config");
        x0 = config.init->free_parameters();
    } else {
        x0 = ThetaParam::zero(p, q, baseline).free_parameters();
    }

    NewtonProblem problem;
    problem.objective = [&](const Vector& free) {
        const ThetaParam t = ThetaParam::from_free(free, p, q, baseline);
        return log_likelihood(t, data) - penalty(t, config.penalty, config.lambda);
    };
    problem.derivatives = [&](const Vector& free, Vector& g, Matrix& h) {
        const ThetaParam t = ThetaParam::from_free(free, p, q, baseline);
        Derivatives d = mv_derivatives(t, data, config.lambda, config.penalty);
        g = std::move(d.gradient);
        h = std::move(d.hessian);
        if (config.curvature == Curvature::Observed && p > 1) {
            Matrix observed = h;
            const Matrix c = hessian_cross_block(t, data);
            observed.block(1, p, p - 1, q) -= c;
            observed.block(p, 1, q, p - 1) -= c.transpose();
            if (Eigen::LLT<Matrix>(observed).info() == Eigen::Success) h = std::move(observed);
        }
    };

    const NewtonOutcome outcome = run_newton(problem, std::move(x0), config.newton_options());

    FitResult r;
    r.theta = ThetaParam::from_free(outcome.x, p, q, baseline);
    r.status = outcome.status;
    r.converged = outcome.converged();
    r.iterations = outcome.iterations;
    r.final_gradient_norm = outcome.gradient_norm;
    r.loglik = log_likelihood(r.theta, data);
    r.penalized_loglik = outcome.objective;
    r.last_step = outcome.last_step;
    r.ridge_used = outcome.max_ridge;
    r.trace = outcome.trace;
    return r;
}

// ---------------------------------------------------------------------------
// conventional arm

Matrix vectorized_design(const MatrixDataset& data)
{
    Matrix out(data.n(), data.p() * data.q());
    for (Index i = 0; i < data.n(); ++i) out.row(i) = vec(data.x(i)).transpose();
    return out;
}

ConventionalFit fit_ridge_logistic(const Matrix& features, const Vector& y, double lambda, PenaltyKind kind,
                                   const RidgeOptions& options)
{
    if (features.rows() != y.size()) throw ValidationError("feature rows and label count differ");
    if (features.rows() < 1) throw ValidationError("need at least one sample");
    if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
    const Index n = features.rows();
    const Index d = features.cols();

    NewtonOptions no;
    no.tol = options.tol;
    no.max_iter = options.max_iter;
    no.separation_bound = lambda == 0.0 ? options.separation_bound : 0.0;

    // columns: intercept first, then the features
    Matrix z(n, d + 1);
    z.col(0).setOnes();
    z.rightCols(d) = features;
    Vector mask = Vector::Ones(d + 1);
    if (kind == PenaltyKind::NoIntercept) mask(0) = 0.0;
    const Index penalized = static_cast<Index>(mask.sum());

    NewtonOutcome outcome;
    Vector coef;
    if (options.allow_row_space_reduction && lambda > 0.0 && penalized > n) {
        // The penalized coefficients of the optimum lie in the row space of
        // the penalized block P = U S W'; fit on U S and map back through W.
        const Index first = d + 1 - penalized;
        const Matrix block = z.rightCols(penalized);
        Eigen::BDCSVD<Matrix> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& s = svd.singularValues();
        Index rank = 0;
        while (rank < s.size() && s(rank) > 1e-12 * s(0)) ++rank;
        Matrix reduced(n, first + rank);
        reduced.leftCols(first) = z.leftCols(first);
        reduced.rightCols(rank) = svd.matrixU().leftCols(rank) * s.head(rank).asDiagonal();
        Vector rmask = Vector::Ones(first + rank);
        rmask.head(first).setZero();
        outcome = fit_design(reduced, y, rmask, lambda, no);
        coef.resize(d + 1);
        coef.head(first) = outcome.x.head(first);
        coef.tail(penalized) = svd.matrixV().leftCols(rank) * outcome.x.tail(rank);
    } else {
        outcome = fit_design(z, y, mask, lambda, no);
        coef = outcome.x;
    }

    ConventionalFit r;
    r.gamma = coef(0);
    r.xi = coef.tail(d);
    r.status = outcome.status;
    r.converged = outcome.converged();
    r.iterations = outcome.iterations;
    r.penalized_loglik = outcome.objective;
    r.loglik = ridge_objective(z, y, Vector::Zero(d + 1), 0.0, coef);
    r.trace = outcome.trace;
    return r;
}

ConventionalFit fit_conventional(const MatrixDataset& data, double lambda, PenaltyKind kind,
                                 const RidgeOptions& options)
{
    return fit_ridge_logistic(vectorized_design(data), data.label_vector(), lambda, kind, options);
}

double conventional_log_likelihood(double gamma, const Vector& xi, const MatrixDataset& data)
{
    if (xi.size() != data.p() * data.q()) throw ValidationError("xi length does not equal p*q");
    double ll = 0.0;
    for (Index i = 0; i < data.n(); ++i) {
        const double eta = gamma + xi.dot(vec(data.x(i)));
        ll += data.y(i) * eta - softplus(eta);
    }
    return ll;
}

// ---------------------------------------------------------------------------
// cross-validation

std::vector<int> make_folds(const std::vector<int>& labels, const CvScheme& scheme)
{
    const std::size_t n = labels.size();
    std::vector<int> fold(n, 0);
    if (scheme.kind == CvScheme::Kind::LeaveOneOut) {
        std::iota(fold.begin(), fold.end(), 0);
        return fold;
    }
    if (scheme.folds < 2) throw ValidationError("k-fold CV needs k >= 2");
    if (static_cast<std::size_t>(scheme.folds) > n)
        throw ValidationError("k-fold CV with k=" + std::to_string(scheme.folds) + " needs at least k samples");

    std::vector<int> classes(labels);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());

    std::mt19937_64 rng(scheme.seed);
    int next = 0;
    for (int c : classes) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i)
            if (labels[i] == c) members.push_back(i);
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t i : members) {
            fold[i] = next;
            next = (next + 1) % scheme.folds;
        }
    }
    return fold;
}

namespace {

// Shared driver: `predict(lambda, train, test)` returns held-out probabilities.
template <class Predict>
CvResult run_cv(const std::vector<int>& labels, const std::vector<double>& grid, const CvScheme& scheme,
                int threads, Predict&& predict)
{
    if (grid.empty()) throw ValidationError("lambda grid is empty");
    for (double l : grid)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("lambda grid values must be finite and >= 0");
    const std::vector<int> fold = make_folds(labels, scheme);
    const int nfolds = *std::max_element(fold.begin(), fold.end()) + 1;
    const std::size_t n = labels.size();

    std::vector<std::vector<Index>> train(static_cast<std::size_t>(nfolds)), test(static_cast<std::size_t>(nfolds));
    for (std::size_t i = 0; i < n; ++i)
        for (int f = 0; f < nfolds; ++f)
            (fold[i] == f ? test : train)[static_cast<std::size_t>(f)].push_back(static_cast<Index>(i));

    std::vector<std::vector<double>> prob(grid.size(), std::vector<double>(n, 0.0));
    parallel_for(grid.size() * static_cast<std::size_t>(nfolds), threads, [&](std::size_t task) {
        const std::size_t g = task / static_cast<std::size_t>(nfolds);
        const std::size_t f = task % static_cast<std::size_t>(nfolds);
        const std::vector<double> out = predict(grid[g], train[f], test[f]);
        for (std::size_t k = 0; k < test[f].size(); ++k) prob[g][static_cast<std::size_t>(test[f][k])] = out[k];
    });

    CvResult result;
    std::size_t best = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        CvPoint pt;
        pt.lambda = grid[g];
        for (std::size_t i = 0; i < n; ++i)
            if ((prob[g][i] > 0.5 ? 1 : 0) == labels[i]) ++pt.correct;
        pt.accuracy = static_cast<double>(pt.correct) / static_cast<double>(n);
        result.table.push_back(pt);
    }
    for (std::size_t g = 1; g < grid.size(); ++g) {
        const CvPoint& a = result.table[g];
        const CvPoint& b = result.table[best];
        if (a.correct > b.correct || (a.correct == b.correct && a.lambda < b.lambda)) best = g;
    }
    result.best_lambda = result.table[best].lambda;
    result.best_accuracy = result.table[best].accuracy;
    result.held_out_probability = prob[best];
    return result;
}

}  // namespace

CvResult select_lambda_cv(const MatrixDataset& data, const std::vector<double>& grid, const CvScheme& scheme,
                          const CvOptions& options)
{
    if (options.arm == Arm::Conventional)
        return select_lambda_cv_features(vectorized_design(data), data.labels(), grid, scheme, options);

    Index baseline = 0;
    if (options.baseline_row) {
        baseline = *options.baseline_row;
    } else {
        try {
            baseline = select_baseline_row(data);
        } catch (const ValidationError&) {
            baseline = 0;
        }
    }
    return run_cv(data.labels(), grid, scheme, options.threads,
                  [&](double lambda, const std::vector<Index>& train, const std::vector<Index>& test) {
                      FitConfig cfg;
                      cfg.lambda = lambda;
                      cfg.penalty = options.penalty;
                      cfg.tol = options.tol;
                      cfg.max_iter = options.max_iter;
                      cfg.baseline_row = baseline;
                      cfg.curvature = options.curvature;
                      const FitResult fr = fit(data.subset(train), cfg);
                      std::vector<double> out;
                      out.reserve(test.size());
                      for (Index i : test) out.push_back(success_probability(fr.theta, data.x(i)));
                      return out;
                  });
}

CvResult select_lambda_cv_features(const Matrix& features, const std::vector<int>& labels,
                                   const std::vector<double>& grid, const CvScheme& scheme,
                                   const CvOptions& options)
{
    if (features.rows() != static_cast<Index>(labels.size()))
        throw ValidationError("feature rows and label count differ");
    return run_cv(labels, grid, scheme, options.threads,
                  [&](double lambda, const std::vector<Index>& train, const std::vector<Index>& test) {
                      Matrix f(static_cast<Index>(train.size()), features.cols());
                      Vector y(static_cast<Index>(train.size()));
                      for (std::size_t k = 0; k < train.size(); ++k) {
                          f.row(static_cast<Index>(k)) = features.row(train[k]);
                          y(static_cast<Index>(k)) = labels[static_cast<std::size_t>(train[k])];
                      }
                      RidgeOptions ro;
                      ro.tol = options.tol;
                      ro.max_iter = options.max_iter;
                      const ConventionalFit cf = fit_ridge_logistic(f, y, lambda, options.penalty, ro);
                      std::vector<double> out;
                      out.reserve(test.size());
                      for (Index i : test) out.push_back(sigmoid(cf.linear_predictor(features.row(i).transpose())));
                      return out;
                  });
}

}  // namespace mvlogit
