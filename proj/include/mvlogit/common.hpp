#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mvlogit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Bad input: wrong dimensions, malformed files, out-of-range options.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The numerics gave up (singular system, non-finite likelihood).
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Which coordinates the quadratic ridge penalty touches.
///   AllTheta    J = (gamma^2 + |alpha*|^2 + |beta|^2) / 2
///   NoIntercept J = (|alpha*|^2 + |beta|^2) / 2
/// The pinned alpha entry is never penalized.
enum class PenaltyKind { AllTheta, NoIntercept };

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& name);

}  // namespace mvlogit
