#pragma once

#include "mvlogit/model.hpp"

#include <vector>

namespace mvlogit {

struct GlramOptions {
    Index p0 = 1;
    Index q0 = 1;
    double tol = 1e-10;  // relative change of the captured energy
    int max_iter = 200;
    bool center = true;  // subtract the per-entry mean matrix first
};

/// Shared orthonormal side bases of a collection of matrices (Ye, 2005).
struct GlramBases {
    Matrix A;       // p x p0
    Matrix B;       // q x q0
    Matrix center;  // p x q, zero when centering was off
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;

    Index p() const { return A.rows(); }
    Index q() const { return B.rows(); }
    Index p0() const { return A.cols(); }
    Index q0() const { return B.cols(); }
};

/// Alternating maximization of sum_i ||A'(X_i - C) B||_F^2 starting from
/// B = the first q0 columns of the identity. Each eigenvector's sign is
/// fixed so its largest-magnitude entry is positive.
GlramBases glram_fit(const std::vector<Matrix>& matrices, const GlramOptions& options);

/// A'(X - C)B.
Matrix glram_project(const GlramBases& bases, const Matrix& x);
MatrixDataset glram_project(const GlramBases& bases, const MatrixDataset& data);

/// A A'(X - C) B B' + C.
Matrix glram_reconstruct(const GlramBases& bases, const Matrix& x);

/// sum_i ||A'(X_i - C)B||_F^2.
double captured_energy(const GlramBases& bases, const std::vector<Matrix>& matrices);

/// sum_i ||(X_i - C) - A A'(X_i - C) B B'||_F^2.
double reconstruction_error(const GlramBases& bases, const std::vector<Matrix>& matrices);

}  // namespace mvlogit
