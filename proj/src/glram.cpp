#include "mvlogit/glram.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace mvlogit {

namespace {

// Top-k eigenvectors of a symmetric matrix, largest first.
Matrix top_eigenvectors(const Matrix& s, Index k)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in GLRAM");
    const Index d = s.rows();
    Matrix out(d, k);
    for (Index j = 0; j < k; ++j) {
        Vector v = es.eigenvectors().col(d - 1 - j);
        Index at = 0;
        v.cwiseAbs().maxCoeff(&at);
        if (v(at) < 0.0) v = -v;
        out.col(j) = v;
    }
    return out;
}

void check_dims(const GlramBases& bases, const Matrix& x)
{
    if (x.rows() != bases.p() || x.cols() != bases.q())
        throw ValidationError("matrix is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                              " but the bases expect " + std::to_string(bases.p()) + "x" + std::to_string(bases.q()));
}

}  // namespace

GlramBases glram_fit(const std::vector<Matrix>& matrices, const GlramOptions& options)
{
    if (matrices.empty()) throw ValidationError("GLRAM needs at least one matrix");
    const Index p = matrices.front().rows();
    const Index q = matrices.front().cols();
    if (options.p0 < 1 || options.p0 > p) throw ValidationError("p0 must lie in 1.." + std::to_string(p));
    if (options.q0 < 1 || options.q0 > q) throw ValidationError("q0 must lie in 1.." + std::to_string(q));
    if (!(options.tol >= 0.0) || options.max_iter < 1) throw ValidationError("invalid GLRAM tolerance or iteration cap");

    GlramBases bases;
    bases.center = Matrix::Zero(p, q);
    for (const Matrix& x : matrices) {
        if (x.rows() != p || x.cols() != q) throw ValidationError("GLRAM inputs must share one shape");
        if (!x.allFinite()) throw ValidationError("GLRAM input has non-finite entries");
        if (options.center) bases.center += x;
    }
    bases.center /= static_cast<double>(matrices.size());

    std::vector<Matrix> centered;
    centered.reserve(matrices.size());
    for (const Matrix& x : matrices) centered.push_back(x - bases.center);

    bases.B = Matrix::Identity(q, options.q0);
    double previous = 0.0;
    for (int it = 1; it <= options.max_iter; ++it) {
        Matrix sa = Matrix::Zero(p, p);
        for (const Matrix& x : centered) {
            const Matrix xb = x * bases.B;
            sa.noalias() += xb * xb.transpose();
        }
        bases.A = top_eigenvectors(sa, options.p0);

        Matrix sb = Matrix::Zero(q, q);
        for (const Matrix& x : centered) {
            const Matrix xa = x.transpose() * bases.A;
            sb.noalias() += xa * xa.transpose();
        }
        bases.B = top_eigenvectors(sb, options.q0);

        const double objective = (bases.B.transpose() * sb * bases.B).trace();
        bases.objective_trace.push_back(objective);
        bases.iterations = it;
        if (it > 1 && std::abs(objective - previous) <= options.tol * std::max(std::abs(objective), 1e-300)) {
            bases.converged = true;
            break;
        }
        previous = objective;
    }
    return bases;
}

Matrix glram_project(const GlramBases& bases, const Matrix& x)
{
    check_dims(bases, x);
    return bases.A.transpose() * (x - bases.center) * bases.B;
}

MatrixDataset glram_project(const GlramBases& bases, const MatrixDataset& data)
{
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(data.n()));
    for (const Matrix& x : data.matrices()) out.push_back(glram_project(bases, x));
    return data.with_matrices(std::move(out));
}

Matrix glram_reconstruct(const GlramBases& bases, const Matrix& x)
{
    return bases.A * glram_project(bases, x) * bases.B.transpose() + bases.center;
}

double captured_energy(const GlramBases& bases, const std::vector<Matrix>& matrices)
{
    double total = 0.0;
    for (const Matrix& x : matrices) total += glram_project(bases, x).squaredNorm();
    return total;
}

double reconstruction_error(const GlramBases& bases, const std::vector<Matrix>& matrices)
{
    double total = 0.0;
    for (const Matrix& x : matrices) total += (x - glram_reconstruct(bases, x)).squaredNorm();
    return total;
}

}  // namespace mvlogit
