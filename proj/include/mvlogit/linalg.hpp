#pragma once

#include "mvlogit/common.hpp"

namespace mvlogit {

/// Cholesky factor of a symmetric matrix with an escalating diagonal ridge.
///
/// Tries H first; on failure adds 1e-8 * 2^k * trace(H) / dim for
/// k = 0, 1, ... until the factorization succeeds. `ridge` is the amount
/// added (0 when H itself was positive definite).
struct RidgedCholesky {
    Eigen::LLT<Matrix> llt;
    double ridge = 0.0;

    Vector solve(const Vector& rhs) const { return llt.solve(rhs); }
    Matrix solve(const Matrix& rhs) const { return llt.solve(rhs); }
};

/// Throws NumericalError when no ridge within the escalation budget works
/// (the matrix is not finite, or hopelessly indefinite).
RidgedCholesky factor_with_ridge(const Matrix& h, int max_escalations = 60);

/// Bread^-1 * meat * bread^-1 with both factors scaled by 1/n, i.e.
/// (H/n)^-1 (M/n) (H/n)^-1. Symmetrized on return.
Matrix sandwich(const RidgedCholesky& bread, const Matrix& meat, double n);

}  // namespace mvlogit
