#pragma once

#include "mvlogit/common.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mvlogit {

enum class FitStatus {
    Converged,
    MaxIterations,
    Diverged,  // parameters ran past the separation bound (MLE does not exist)
    Stalled,   // step-halving could not find an ascent step
};

std::string to_string(FitStatus status);

struct NewtonOptions {
    double tol = 1e-8;           // sup-norm of the accepted step
    int max_iter = 100;
    bool step_halving = true;
    int max_halvings = 30;
    double separation_bound = 0.0;  // 0 disables the divergence check
};

/// A concave maximization problem in Fisher-scoring form.
///
/// `objective` returns the (penalized) log-likelihood. `derivatives` fills
/// the gradient and a positive semidefinite curvature matrix H so that the
/// update is x + H^-1 g.
struct NewtonProblem {
    std::function<double(const Vector&)> objective;
    std::function<void(const Vector&, Vector&, Matrix&)> derivatives;
};

struct NewtonOutcome {
    Vector x;
    FitStatus status = FitStatus::MaxIterations;
    int iterations = 0;
    double objective = 0.0;
    double gradient_norm = 0.0;
    double last_step = 0.0;   // sup-norm of the last accepted step
    double max_ridge = 0.0;   // largest ridge the factorization needed
    double final_ridge = 0.0; // ridge needed at the last iteration
    std::vector<double> trace;

    bool converged() const { return status == FitStatus::Converged; }
};

/// Iterates x <- x + t H(x)^-1 g(x), t = 1, 1/2, 1/4, ... chosen so the
/// objective does not decrease (up to 1e-12 relative rounding slack).
/// Throws NumericalError if the starting objective is not finite.
NewtonOutcome run_newton(const NewtonProblem& problem, Vector x0, const NewtonOptions& options);

}  // namespace mvlogit
