#include "mvlogit/linalg.hpp"

#include <cmath>
#include <string>

namespace mvlogit {

RidgedCholesky factor_with_ridge(const Matrix& h, int max_escalations)
{
    if (h.rows() != h.cols()) throw ValidationError("factor_with_ridge: matrix is not square");
    if (!h.allFinite()) throw NumericalError("Hessian has non-finite entries");

    RidgedCholesky out;
    out.llt.compute(h);
    if (out.llt.info() == Eigen::Success) return out;

    const double dim = static_cast<double>(h.rows());
    double scale = h.trace() / dim;
    if (!(scale > 0.0)) scale = 1.0;
    Matrix shifted = h;
    for (int k = 0; k < max_escalations; ++k) {
        const double ridge = 1e-8 * std::ldexp(1.0, k) * scale;
        shifted.diagonal() = h.diagonal().array() + ridge;
        out.llt.compute(shifted);
        if (out.llt.info() == Eigen::Success) {
            out.ridge = ridge;
            return out;
        }
    }
    throw NumericalError("Hessian is singular or indefinite: no ridge up to 1e-8*2^" +
                         std::to_string(max_escalations) + "*trace/dim made it positive definite");
}

Matrix sandwich(const RidgedCholesky& bread, const Matrix& meat, double n)
{
    // (H/n)^-1 M/n (H/n)^-1 = n * H^-1 M H^-1
    const Matrix left = bread.solve(meat);
    const Matrix right = bread.solve(Matrix(left.transpose()));
    Matrix out = n * right;
    return 0.5 * (out + out.transpose());
}

}  // namespace mvlogit
