#include "mvlogit/newton.hpp"

#include "mvlogit/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mvlogit {

std::string to_string(FitStatus status)
{
    switch (status) {
    case FitStatus::Converged: return "converged";
    case FitStatus::MaxIterations: return "max-iterations";
    case FitStatus::Diverged: return "diverged";
    case FitStatus::Stalled: return "stalled";
    }
    return "unknown";
}

NewtonOutcome run_newton(const NewtonProblem& problem, Vector x0, const NewtonOptions& options)
{
    if (!(options.tol > 0.0)) throw ValidationError("tolerance must be positive");
    if (options.max_iter < 1) throw ValidationError("max_iter must be at least 1");

    NewtonOutcome out;
    out.x = std::move(x0);
    double f = problem.objective(out.x);
    if (!std::isfinite(f)) throw NumericalError("log-likelihood is not finite at the starting point");

    Vector g;
    Matrix h;
    for (int iter = 0; iter < options.max_iter; ++iter) {
        problem.derivatives(out.x, g, h);
        if (!g.allFinite()) throw NumericalError("gradient is not finite at iteration " + std::to_string(iter));
        const RidgedCholesky chol = factor_with_ridge(h);
        out.max_ridge = std::max(out.max_ridge, chol.ridge);
        out.final_ridge = chol.ridge;
        const Vector direction = chol.solve(g);

        double t = 1.0;
        Vector candidate = out.x + direction;
        double f_new = problem.objective(candidate);
        const double slack = 1e-12 * (1.0 + std::abs(f));
        if (options.step_halving) {
            int halvings = 0;
            while (!(std::isfinite(f_new) && f_new >= f - slack) && halvings < options.max_halvings) {
                t *= 0.5;
                candidate = out.x + t * direction;
                f_new = problem.objective(candidate);
                ++halvings;
            }
        }
        ++out.iterations;
        if (!std::isfinite(f_new)) {
            if (options.step_halving) {
                out.status = FitStatus::Stalled;
                out.trace.push_back(f);
                break;
            }
            throw NumericalError("log-likelihood became non-finite at iteration " + std::to_string(iter));
        }
        if (options.step_halving && f_new < f - slack) {
            // full halving budget spent without ascent; stay put
            out.status = FitStatus::Stalled;
            out.trace.push_back(f);
            break;
        }

        out.last_step = (candidate - out.x).lpNorm<Eigen::Infinity>();
        out.x = std::move(candidate);
        f = f_new;
        out.trace.push_back(f);

        if (out.last_step < options.tol) {
            out.status = FitStatus::Converged;
            break;
        }
        if (options.separation_bound > 0.0 && out.x.lpNorm<Eigen::Infinity>() > options.separation_bound) {
            out.status = FitStatus::Diverged;
            break;
        }
    }
    out.objective = f;
    problem.derivatives(out.x, g, h);
    out.gradient_norm = g.norm();
    return out;
}

}  // namespace mvlogit
