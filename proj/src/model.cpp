#include "mvlogit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvlogit {

std::string to_string(PenaltyKind kind)
{
    return kind == PenaltyKind::AllTheta ? "all-theta" : "no-intercept";
}

PenaltyKind penalty_kind_from_string(const std::string& name)
{
    if (name == "all-theta" || name == "all" || name == "ALL_THETA") return PenaltyKind::AllTheta;
    if (name == "no-intercept" || name == "NO_INTERCEPT") return PenaltyKind::NoIntercept;
    throw ValidationError("unknown penalty kind '" + name + "' (expected all-theta or no-intercept)");
}

// ---------------------------------------------------------------------------
// MatrixDataset

MatrixDataset::MatrixDataset(std::vector<Matrix> matrices, std::vector<int> labels,
                             std::vector<std::string> subject_ids)
    : matrices_(std::move(matrices)), labels_(std::move(labels)), subject_ids_(std::move(subject_ids))
{
    if (matrices_.empty()) throw ValidationError("dataset must contain at least one sample");
    if (matrices_.size() != labels_.size())
        throw ValidationError("dataset has " + std::to_string(matrices_.size()) + " matrices but " +
                              std::to_string(labels_.size()) + " labels");
    if (!subject_ids_.empty() && subject_ids_.size() != matrices_.size())
        throw ValidationError("subject id count does not match sample count");
    p_ = matrices_.front().rows();
    q_ = matrices_.front().cols();
    if (p_ < 1 || q_ < 1) throw ValidationError("covariate matrices must be non-empty");
    for (std::size_t i = 0; i < matrices_.size(); ++i) {
        const Matrix& m = matrices_[i];
        if (m.rows() != p_ || m.cols() != q_)
            throw ValidationError("sample " + std::to_string(i) + " is " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected " + std::to_string(p_) + "x" +
                                  std::to_string(q_));
        if (!m.allFinite()) throw ValidationError("sample " + std::to_string(i) + " has non-finite entries");
        if (labels_[i] != 0 && labels_[i] != 1)
            throw ValidationError("sample " + std::to_string(i) + " has label " + std::to_string(labels_[i]) +
                                  ", expected 0 or 1");
    }
}

Vector MatrixDataset::label_vector() const
{
    Vector out(n());
    for (Index i = 0; i < n(); ++i) out(i) = static_cast<double>(labels_[static_cast<std::size_t>(i)]);
    return out;
}

MatrixDataset MatrixDataset::subset(const std::vector<Index>& rows) const
{
    std::vector<Matrix> m;
    std::vector<int> l;
    std::vector<std::string> ids;
    m.reserve(rows.size());
    l.reserve(rows.size());
    for (Index r : rows) {
        if (r < 0 || r >= n()) throw ValidationError("subset index out of range");
        m.push_back(x(r));
        l.push_back(y(r));
        if (!subject_ids_.empty()) ids.push_back(subject_ids_[static_cast<std::size_t>(r)]);
    }
    return MatrixDataset(std::move(m), std::move(l), std::move(ids));
}

MatrixDataset MatrixDataset::with_matrices(std::vector<Matrix> matrices) const
{
    return MatrixDataset(std::move(matrices), labels_, subject_ids_);
}

// ---------------------------------------------------------------------------
// ThetaParam

ThetaParam::ThetaParam(double gamma, Vector alpha, Vector beta, Index baseline_row)
    : gamma_(gamma), alpha_(std::move(alpha)), beta_(std::move(beta)), baseline_row_(baseline_row)
{
    if (alpha_.size() < 1 || beta_.size() < 1) throw ValidationError("alpha and beta must be non-empty");
    if (baseline_row_ < 0 || baseline_row_ >= alpha_.size())
        throw ValidationError("baseline row " + std::to_string(baseline_row_) + " out of range for p=" +
                              std::to_string(alpha_.size()));
    if (alpha_(baseline_row_) != 1.0)
        throw ValidationError("alpha[baseline_row] must be exactly 1");
}

ThetaParam ThetaParam::repinned(double gamma, const Vector& alpha, const Vector& beta, Index baseline_row)
{
    if (baseline_row < 0 || baseline_row >= alpha.size()) throw ValidationError("baseline row out of range");
    const double c = alpha(baseline_row);
    if (c == 0.0) throw ValidationError("cannot pin a zero alpha entry to 1");
    Vector a = alpha / c;
    a(baseline_row) = 1.0;
    return ThetaParam(gamma, std::move(a), beta * c, baseline_row);
}

ThetaParam ThetaParam::zero(Index p, Index q, Index baseline_row)
{
    Vector a = Vector::Zero(p);
    if (baseline_row >= 0 && baseline_row < p) a(baseline_row) = 1.0;
    return ThetaParam(0.0, std::move(a), Vector::Zero(q), baseline_row);
}

ThetaParam ThetaParam::from_free(const Vector& free, Index p, Index q, Index baseline_row)
{
    if (free.size() != p + q)
        throw ValidationError("free parameter vector has length " + std::to_string(free.size()) +
                              ", expected p+q=" + std::to_string(p + q));
    Vector a(p);
    Index k = 1;
    for (Index i = 0; i < p; ++i) a(i) = (i == baseline_row) ? 1.0 : free(k++);
    return ThetaParam(free(0), std::move(a), free.tail(q), baseline_row);
}

Vector ThetaParam::alpha_star() const
{
    Vector out(p() - 1);
    Index k = 0;
    for (Index i = 0; i < p(); ++i)
        if (i != baseline_row_) out(k++) = alpha_(i);
    return out;
}

Vector ThetaParam::free_parameters() const
{
    Vector out(free_count());
    out(0) = gamma_;
    out.segment(1, p() - 1) = alpha_star();
    out.tail(q()) = beta_;
    return out;
}

// ---------------------------------------------------------------------------
// scalar helpers

double sigmoid(double eta)
{
    // clamped to the representable open interval so probabilities never hit 0 or 1
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    double out;
    if (eta >= 0.0) {
        out = 1.0 / (1.0 + std::exp(-eta));
    } else {
        const double e = std::exp(eta);
        out = e / (1.0 + e);
    }
    return std::clamp(out, lo, hi);
}

double softplus(double eta)
{
    return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta)));
}

Vector vec(const Matrix& x)
{
    return Eigen::Map<const Vector>(x.data(), x.size());
}

Matrix unvec(const Vector& v, Index p, Index q)
{
    if (v.size() != p * q) throw ValidationError("unvec: length does not equal p*q");
    return Eigen::Map<const Matrix>(v.data(), p, q);
}

namespace {

void check_dims(const ThetaParam& theta, const Matrix& x)
{
    if (x.rows() != theta.p() || x.cols() != theta.q())
        throw ValidationError("covariate is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                              " but the model is " + std::to_string(theta.p()) + "x" +
                              std::to_string(theta.q()));
}

}  // namespace

double linear_predictor(const ThetaParam& theta, const Matrix& x)
{
    check_dims(theta, x);
    return theta.gamma() + theta.alpha().dot(x * theta.beta());
}

double success_probability(const ThetaParam& theta, const Matrix& x)
{
    return sigmoid(linear_predictor(theta, x));
}

double odds_ratio(const ThetaParam& theta, Index i, Index j)
{
    if (i < 0 || i >= theta.p() || j < 0 || j >= theta.q())
        throw ValidationError("odds_ratio: index (" + std::to_string(i) + "," + std::to_string(j) +
                              ") out of range");
    return std::exp(theta.alpha()(i) * theta.beta()(j));
}

std::pair<double, Vector> vectorized_coefficient(const ThetaParam& theta)
{
    const Matrix outer = theta.alpha() * theta.beta().transpose();
    return {theta.gamma(), vec(outer)};
}

int classify(const ThetaParam& theta, const Matrix& x, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValidationError("classification threshold must lie in (0,1)");
    return success_probability(theta, x) > threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------
// baseline selection and standardization

Index select_baseline_row(const MatrixDataset& data)
{
    const Index n = data.n();
    if (data.p() == 1) return 0;
    if (n < 2) throw ValidationError("baseline selection needs at least two samples");
    const Vector y = data.label_vector();
    const double ybar = y.mean();
    const Vector yc = y.array() - ybar;
    const double syy = yc.squaredNorm();
    if (syy == 0.0) throw ValidationError("baseline selection: labels are all identical, correlation undefined");

    Matrix mean = Matrix::Zero(data.p(), data.q());
    for (const Matrix& m : data.matrices()) mean += m;
    mean /= static_cast<double>(n);

    Matrix sxy = Matrix::Zero(data.p(), data.q());
    Matrix sxx = Matrix::Zero(data.p(), data.q());
    for (Index i = 0; i < n; ++i) {
        const Matrix d = data.x(i) - mean;
        sxy += yc(i) * d;
        sxx += d.cwiseAbs2();
    }

    Index best = 0;
    double best_score = -1.0;
    for (Index k = 0; k < data.p(); ++k) {
        double score = 0.0;
        for (Index j = 0; j < data.q(); ++j) {
            if (sxx(k, j) <= 1e-24 * std::max(1.0, mean(k, j) * mean(k, j) * n)) continue;
            score += std::abs(sxy(k, j)) / std::sqrt(sxx(k, j) * syy);
        }
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    return best;
}

Matrix StandardizationStats::apply(const Matrix& x) const
{
    if (x.rows() != means.rows() || x.cols() != means.cols())
        throw ValidationError("standardization stats are " + std::to_string(means.rows()) + "x" +
                              std::to_string(means.cols()) + " but the covariate is " +
                              std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    Matrix out = x - means;
    for (Index j = 0; j < out.cols(); ++j)
        for (Index i = 0; i < out.rows(); ++i)
            if (!constant(i, j)) out(i, j) /= sds(i, j);
    return out;
}

StandardizedDataset standardize(const MatrixDataset& data)
{
    const Index n = data.n();
    if (n < 2) throw ValidationError("standardization needs at least two samples");
    StandardizationStats stats;
    stats.means = Matrix::Zero(data.p(), data.q());
    for (const Matrix& m : data.matrices()) stats.means += m;
    stats.means /= static_cast<double>(n);

    Matrix ss = Matrix::Zero(data.p(), data.q());
    for (const Matrix& m : data.matrices()) ss += (m - stats.means).cwiseAbs2();
    stats.sds = (ss / static_cast<double>(n - 1)).cwiseSqrt();
    // relative threshold: a constant column accumulates only rounding noise
    stats.constant = stats.sds.array() <= 1e-12 * stats.means.array().abs().max(1.0);
    for (Index j = 0; j < data.q(); ++j)
        for (Index i = 0; i < data.p(); ++i)
            if (stats.constant(i, j)) stats.sds(i, j) = 0.0;

    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const Matrix& m : data.matrices()) out.push_back(stats.apply(m));
    return {data.with_matrices(std::move(out)), std::move(stats)};
}

}  // namespace mvlogit
