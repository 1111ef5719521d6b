#pragma once

#include "mvlogit/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mvlogit {

/// One Monte-Carlo cell: true gamma = 1, alpha = (1, 0.5, -0.5, ..., -0.5),
/// beta = (1, 0.5, 1, -1, ..., -1), with optional rank violation sigma.
struct SimDesign {
    Index p = 12;
    Index q = 10;
    Index n = 150;
    Index test_n = 0;  // 0 means n
    double sigma = 0.0;
    int replicates = 200;
    std::uint64_t seed = 7;
    std::optional<double> lambda_mv;
    std::optional<double> lambda_conventional;
    PenaltyKind penalty = PenaltyKind::NoIntercept;
    double level = 0.95;
    bool run_conventional = true;
    int threads = 1;

    void validate() const;
    Index test_size() const { return test_n > 0 ? test_n : n; }
    ThetaParam theta_true() const;
};

/// Per-replicate seed derived from a master seed (splitmix64 mixing), so
/// replicate i sees the same stream regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// n samples with iid N(0,1) covariate entries and labels from the
/// bilinear model at design.theta_true(). sigma is ignored.
MatrixDataset generate_mv_data(const SimDesign& design, std::uint64_t replicate_seed);

/// Labels from the unconstrained model gamma + vec(xi)'vec(X).
MatrixDataset generate_from_coefficient(double gamma, const Matrix& xi, Index n, std::uint64_t seed);

struct PerturbedSample {
    MatrixDataset data;
    Matrix xi;
};

/// xi = alpha beta' + delta, delta iid N(0, sigma^2) drawn from the
/// replicate seed, then n samples from the unconstrained model with gamma = 1.
/// The covariates coincide with generate_mv_data's for the same seed.
PerturbedSample generate_perturbed_data(const SimDesign& design, std::uint64_t replicate_seed);

/// Top singular value over the sum of all singular values.
double explained_proportion(const Matrix& xi);

/// Cosine between (gamma, vec(alpha beta')) of the two parameters.
double similarity(const ThetaParam& truth, const ThetaParam& estimate);
double similarity(double gamma, const Matrix& xi, const ThetaParam& estimate);

/// Mean over the matrices of KL(Bern(pi_full) || Bern(pi_rank1)).
double empirical_kl(double gamma, const Matrix& xi, const ThetaParam& rank1, const std::vector<Matrix>& matrices);

struct CoordinateSummary {
    std::string name;
    double truth = 0.0;
    double mean = 0.0;
    double sd = 0.0;       // Monte-Carlo SD of the estimates
    double mean_se = 0.0;  // average sandwich standard error
    double coverage = 0.0; // fraction of Wald intervals containing the truth
};

struct SimReport {
    SimDesign design;
    double lambda_mv = 0.0;
    double lambda_conventional = 0.0;
    int replicates_used = 0;
    int excluded_mv = 0;
    int excluded_conventional = 0;
    std::vector<CoordinateSummary> coordinates;
    double similarity_mean = 0.0;
    double similarity_sd = 0.0;
    double accuracy_mv = 0.0;
    double accuracy_conventional = 0.0;
    double winning_proportion = 0.0;  // strictly higher MV test accuracy
    double tie_proportion = 0.0;
    double rho_mean = 0.0;
    double kl_mean = 0.0;
};

/// Fits both arms on every replicate, scores them on an independent test
/// set of size test_size(), and aggregates. Replicates where either arm
/// fails to converge are excluded and counted. Lambdas must be set.
SimReport run_study(const SimDesign& design);

struct LambdaTuning {
    double lambda_mv = 0.0;
    double lambda_conventional = 0.0;
    std::vector<std::pair<double, double>> mv_table;            // (lambda, mean test accuracy)
    std::vector<std::pair<double, double>> conventional_table;
};

/// Independent pre-study: mean test accuracy over `replicates` fresh
/// replicates for each grid value; argmax per arm, ties to the smaller lambda.
LambdaTuning tune_lambdas(const SimDesign& design, const std::vector<double>& mv_grid,
                          const std::vector<double>& conventional_grid, int replicates, std::uint64_t seed);

/// name,true,mean,sd,se rows followed by a SIM row.
std::string render_table1_csv(const SimReport& report);

/// sigma,p,q,rho,accuracy_mv,accuracy_conventional,winning_proportion, one row per report.
std::string render_table2_csv(const std::vector<SimReport>& reports);

}  // namespace mvlogit
