#include "mvlogit/multiclass.hpp"

#include "mvlogit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvlogit {

MultiClassDataset::MultiClassDataset(std::vector<Matrix> matrices, std::vector<int> labels, int num_classes,
                                     int reference_class)
    : num_classes_(num_classes), reference_(reference_class == 0 ? num_classes : reference_class),
      matrices_(std::move(matrices)), labels_(std::move(labels))
{
    if (num_classes_ < 2) throw ValidationError("need at least 2 classes");
    if (reference_ < 1 || reference_ > num_classes_)
        throw ValidationError("reference class " + std::to_string(reference_) + " is not in 1.." +
                              std::to_string(num_classes_));
    if (matrices_.empty()) throw ValidationError("dataset has no samples");
    if (matrices_.size() != labels_.size()) throw ValidationError("matrix count and label count differ");
    p_ = matrices_.front().rows();
    q_ = matrices_.front().cols();
    if (p_ < 1 || q_ < 1) throw ValidationError("covariate matrices must be at least 1x1");
    for (std::size_t i = 0; i < matrices_.size(); ++i) {
        if (matrices_[i].rows() != p_ || matrices_[i].cols() != q_)
            throw ValidationError("sample " + std::to_string(i) + " is not " + std::to_string(p_) + "x" +
                                  std::to_string(q_));
        if (!matrices_[i].allFinite()) throw ValidationError("sample " + std::to_string(i) + " has non-finite entries");
        if (labels_[i] < 1 || labels_[i] > num_classes_)
            throw ValidationError("label of sample " + std::to_string(i) + " is outside 1.." +
                                  std::to_string(num_classes_));
    }
}

std::vector<int> MultiClassDataset::non_reference_classes() const
{
    std::vector<int> out;
    for (int h = 1; h <= num_classes_; ++h)
        if (h != reference_) out.push_back(h);
    return out;
}

MatrixDataset MultiClassDataset::one_vs_rest(int cls) const
{
    std::vector<int> y(labels_.size());
    std::transform(labels_.begin(), labels_.end(), y.begin(), [cls](int l) { return l == cls ? 1 : 0; });
    return MatrixDataset(matrices_, std::move(y));
}

Matrix MultiClassDataset::indicators() const
{
    Matrix out = Matrix::Zero(n(), num_classes_);
    for (Index i = 0; i < n(); ++i) out(i, label(i) - 1) = 1.0;
    return out;
}

MultiClassDataset MultiClassDataset::subset(const std::vector<Index>& rows) const
{
    std::vector<Matrix> xs;
    std::vector<int> ys;
    for (Index r : rows) {
        if (r < 0 || r >= n()) throw ValidationError("subset row out of range");
        xs.push_back(x(r));
        ys.push_back(label(r));
    }
    return MultiClassDataset(std::move(xs), std::move(ys), num_classes_, reference_);
}

Vector ThetaMulti::free_parameters() const
{
    const Index d = block_size();
    Vector out(d * static_cast<Index>(blocks.size()));
    for (std::size_t h = 0; h < blocks.size(); ++h) out.segment(static_cast<Index>(h) * d, d) = blocks[h].free_parameters();
    return out;
}

ThetaMulti ThetaMulti::from_free(const Vector& free, Index p, Index q, Index baseline_row,
                                 const std::vector<int>& block_classes, int num_classes, int reference_class)
{
    const Index d = p + q;
    if (free.size() != d * static_cast<Index>(block_classes.size()))
        throw ValidationError("free parameter vector has the wrong length");
    ThetaMulti t;
    t.block_classes = block_classes;
    t.num_classes = num_classes;
    t.reference_class = reference_class;
    for (std::size_t h = 0; h < block_classes.size(); ++h)
        t.blocks.push_back(ThetaParam::from_free(free.segment(static_cast<Index>(h) * d, d), p, q, baseline_row));
    return t;
}

ThetaMulti ThetaMulti::zero(const MultiClassDataset& data, Index baseline_row)
{
    const auto classes = data.non_reference_classes();
    return from_free(Vector::Zero((data.p() + data.q()) * static_cast<Index>(classes.size())), data.p(), data.q(),
                     baseline_row, classes, data.num_classes(), data.reference_class());
}

namespace {

void check_model(const ThetaMulti& theta, Index p, Index q)
{
    if (theta.blocks.empty() || theta.blocks.size() != theta.block_classes.size())
        throw ValidationError("multi-class model has no blocks or mismatched class list");
    for (const ThetaParam& b : theta.blocks) {
        if (b.p() != p || b.q() != q) throw ValidationError("model block does not match the covariate size");
        if (b.baseline_row() != theta.baseline_row()) throw ValidationError("blocks pin different baseline rows");
    }
}

void check_model(const ThetaMulti& theta, const MultiClassDataset& data)
{
    check_model(theta, data.p(), data.q());
    if (theta.num_classes != data.num_classes() || theta.reference_class != data.reference_class())
        throw ValidationError("model and data disagree on the class layout");
}

// n x (H-1) block predictors
Matrix block_predictors(const ThetaMulti& theta, const std::vector<Matrix>& xs)
{
    Matrix eta(static_cast<Index>(xs.size()), static_cast<Index>(theta.blocks.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t h = 0; h < theta.blocks.size(); ++h)
            eta(static_cast<Index>(i), static_cast<Index>(h)) = linear_predictor(theta.blocks[h], xs[i]);
    return eta;
}

// log(1 + sum exp(eta)) with a max shift
double log_normalizer(const Eigen::Ref<const Vector>& eta)
{
    const double m = std::max(0.0, eta.maxCoeff());
    return m + std::log(std::exp(-m) + (eta.array() - m).exp().sum());
}

// Block probabilities pi_h, one row per sample.
Matrix block_probabilities(const Matrix& eta)
{
    Matrix pi(eta.rows(), eta.cols());
    for (Index i = 0; i < eta.rows(); ++i) {
        const double m = std::max(0.0, eta.row(i).maxCoeff());
        const Eigen::RowVectorXd e = (eta.row(i).array() - m).exp().matrix();
        pi.row(i) = e / (std::exp(-m) + e.sum());
    }
    return pi;
}

Vector block_mask(const ThetaMulti& theta, PenaltyKind kind)
{
    const Index d = theta.block_size();
    const Vector one = penalty_mask(theta.blocks.front().p(), theta.blocks.front().q(), kind);
    Vector mask(d * static_cast<Index>(theta.blocks.size()));
    for (std::size_t h = 0; h < theta.blocks.size(); ++h) mask.segment(static_cast<Index>(h) * d, d) = one;
    return mask;
}

// Y*, restricted to the non-reference classes: n x (H-1)
Matrix block_responses(const ThetaMulti& theta, const MultiClassDataset& data)
{
    const Matrix ind = data.indicators();
    Matrix y(data.n(), static_cast<Index>(theta.block_classes.size()));
    for (std::size_t h = 0; h < theta.block_classes.size(); ++h)
        y.col(static_cast<Index>(h)) = ind.col(theta.block_classes[h] - 1);
    return y;
}

struct Derivatives {
    Vector gradient;
    Matrix information;
};

Derivatives multi_derivatives(const ThetaMulti& theta, const MultiClassDataset& data, double lambda,
                              PenaltyKind kind, bool with_gradient)
{
    const std::size_t blocks = theta.blocks.size();
    const Index d = theta.block_size();
    const Matrix pi = block_probabilities(block_predictors(theta, data.matrices()));
    std::vector<Matrix> w;
    for (const ThetaParam& b : theta.blocks) w.push_back(working_covariates(b, data.matrices()));

    Derivatives out;
    out.information = Matrix::Zero(d * static_cast<Index>(blocks), d * static_cast<Index>(blocks));
    for (std::size_t h = 0; h < blocks; ++h) {
        const Index hh = static_cast<Index>(h);
        for (std::size_t k = h; k < blocks; ++k) {
            const Index kk = static_cast<Index>(k);
            Vector v;
            if (h == k)
                v = pi.col(hh).array() * (1.0 - pi.col(hh).array());
            else
                v = -(pi.col(hh).array() * pi.col(kk).array());
            const Matrix block = w[h].transpose() * v.asDiagonal() * w[k];
            out.information.block(hh * d, kk * d, d, d) = block;
            if (h != k) out.information.block(kk * d, hh * d, d, d) = block.transpose();
        }
    }
    if (with_gradient) {
        const Matrix resid = block_responses(theta, data) - pi;
        out.gradient.resize(d * static_cast<Index>(blocks));
        for (std::size_t h = 0; h < blocks; ++h)
            out.gradient.segment(static_cast<Index>(h) * d, d) = w[h].transpose() * resid.col(static_cast<Index>(h));
        out.gradient -= lambda * block_mask(theta, kind).cwiseProduct(theta.free_parameters());
    }
    return out;
}

// Per-block cross terms sum_i (y_hi - pi_hi) X_i without the baseline row,
// subtracted from the alpha*/beta blocks of h when that stays positive definite.
void apply_observed_curvature(const ThetaMulti& theta, const MultiClassDataset& data, Matrix& h)
{
    const Index p = data.p();
    const Index q = data.q();
    if (p < 2) return;
    const Index d = theta.block_size();
    const Index b = theta.baseline_row();
    const Matrix resid = block_responses(theta, data) - block_probabilities(block_predictors(theta, data.matrices()));
    Matrix observed = h;
    for (std::size_t k = 0; k < theta.blocks.size(); ++k) {
        const Index kk = static_cast<Index>(k);
        Matrix sum = Matrix::Zero(p, q);
        for (Index i = 0; i < data.n(); ++i) sum += resid(i, kk) * data.x(i);
        Matrix c(p - 1, q);
        c.topRows(b) = sum.topRows(b);
        c.bottomRows(p - 1 - b) = sum.bottomRows(p - 1 - b);
        observed.block(kk * d + 1, kk * d + p, p - 1, q) -= c;
        observed.block(kk * d + p, kk * d + 1, q, p - 1) -= c.transpose();
    }
    if (Eigen::LLT<Matrix>(observed).info() == Eigen::Success) h = std::move(observed);
}

}  // namespace

Vector class_probabilities(const ThetaMulti& theta, const Matrix& x)
{
    check_model(theta, x.rows(), x.cols());
    Vector eta(static_cast<Index>(theta.blocks.size()));
    for (std::size_t h = 0; h < theta.blocks.size(); ++h) eta(static_cast<Index>(h)) = linear_predictor(theta.blocks[h], x);
    const double m = std::max(0.0, eta.maxCoeff());
    const Vector e = (eta.array() - m).exp().matrix();
    const double denom = std::exp(-m) + e.sum();

    Vector out(theta.num_classes);
    out(theta.reference_class - 1) = std::exp(-m) / denom;
    for (std::size_t h = 0; h < theta.block_classes.size(); ++h)
        out(theta.block_classes[h] - 1) = e(static_cast<Index>(h)) / denom;
    return out;
}

double multiclass_log_likelihood(const ThetaMulti& theta, const MultiClassDataset& data)
{
    check_model(theta, data);
    const Matrix eta = block_predictors(theta, data.matrices());
    const Matrix y = block_responses(theta, data);
    double ll = 0.0;
    for (Index i = 0; i < data.n(); ++i) ll += y.row(i).dot(eta.row(i)) - log_normalizer(eta.row(i).transpose());
    return ll;
}

double multiclass_penalty(const ThetaMulti& theta, PenaltyKind kind, double lambda)
{
    double total = 0.0;
    for (const ThetaParam& b : theta.blocks) total += penalty(b, kind, lambda);
    return total;
}

Vector multiclass_gradient(const ThetaMulti& theta, const MultiClassDataset& data, const FitConfig& config)
{
    config.validate();
    check_model(theta, data);
    return multi_derivatives(theta, data, config.lambda, config.penalty, true).gradient;
}

Matrix multiclass_information(const ThetaMulti& theta, const MultiClassDataset& data)
{
    check_model(theta, data);
    return multi_derivatives(theta, data, 0.0, PenaltyKind::NoIntercept, false).information;
}

Matrix multiclass_fisher_hessian(const ThetaMulti& theta, const MultiClassDataset& data, const FitConfig& config)
{
    config.validate();
    Matrix h = multiclass_information(theta, data);
    h.diagonal() += config.lambda * block_mask(theta, config.penalty);
    return h;
}

Index multiclass_baseline_row(const MultiClassDataset& data)
{
    try {
        return select_baseline_row(data.one_vs_rest(1));
    } catch (const ValidationError&) {
        return 0;
    }
}

MultiFitResult multiclass_fit(const MultiClassDataset& data, const FitConfig& config)
{
    config.validate();
    if (config.init) throw ValidationError("a binary initial value does not apply to the multi-class fit");
    const Index baseline = config.baseline_row ? *config.baseline_row : multiclass_baseline_row(data);
    if (baseline < 0 || baseline >= data.p()) throw ValidationError("baseline row out of range");

    const ThetaMulti start = ThetaMulti::zero(data, baseline);
    const auto rebuild = [&](const Vector& free) {
        return ThetaMulti::from_free(free, data.p(), data.q(), baseline, start.block_classes, data.num_classes(),
                                     data.reference_class());
    };

    NewtonProblem problem;
    problem.objective = [&](const Vector& free) {
        const ThetaMulti t = rebuild(free);
        return multiclass_log_likelihood(t, data) - multiclass_penalty(t, config.penalty, config.lambda);
    };
    problem.derivatives = [&](const Vector& free, Vector& g, Matrix& h) {
        const ThetaMulti t = rebuild(free);
        Derivatives d = multi_derivatives(t, data, config.lambda, config.penalty, true);
        g = std::move(d.gradient);
        h = std::move(d.information);
        h.diagonal() += config.lambda * block_mask(t, config.penalty);
        if (config.curvature == Curvature::Observed) apply_observed_curvature(t, data, h);
    };

    const NewtonOutcome outcome = run_newton(problem, start.free_parameters(), config.newton_options());

    MultiFitResult r;
    r.theta = rebuild(outcome.x);
    r.status = outcome.status;
    r.converged = outcome.converged();
    r.iterations = outcome.iterations;
    r.final_gradient_norm = outcome.gradient_norm;
    r.loglik = multiclass_log_likelihood(r.theta, data);
    r.penalized_loglik = outcome.objective;
    r.ridge_used = outcome.max_ridge;
    r.trace = outcome.trace;
    return r;
}

CovarianceEstimate multiclass_covariance(const MultiFitResult& fit, const MultiClassDataset& data,
                                         const FitConfig& config)
{
    config.validate();
    const Matrix meat = multiclass_information(fit.theta, data);
    Matrix bread = meat;
    bread.diagonal() += config.lambda * block_mask(fit.theta, config.penalty);
    const RidgedCholesky chol = factor_with_ridge(bread);

    CovarianceEstimate cov;
    cov.n = data.n();
    cov.ridge_used = chol.ridge;
    cov.sigma_hat = sandwich(chol, meat, static_cast<double>(data.n()));
    return cov;
}

int predict_class(const ThetaMulti& theta, const Matrix& x)
{
    const Vector pr = class_probabilities(theta, x);
    Index best = 0;
    for (Index h = 1; h < pr.size(); ++h)
        if (pr(h) > pr(best)) best = h;
    return static_cast<int>(best) + 1;
}

}  // namespace mvlogit
