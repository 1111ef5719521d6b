#include "mvlogit/simulation.hpp"

#include "mvlogit/inference.hpp"
#include "mvlogit/parallel.hpp"

#include <Eigen/SVD>

#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace mvlogit {

void SimDesign::validate() const
{
    if (p < 2) throw ValidationError("simulation design needs p >= 2");
    if (q < 3) throw ValidationError("simulation design needs q >= 3");
    if (n < 2) throw ValidationError("simulation design needs n >= 2");
    if (test_n < 0) throw ValidationError("test_n must be >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be finite and >= 0");
    if (replicates < 1) throw ValidationError("replicates must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie in (0,1)");
    for (const auto& l : {lambda_mv, lambda_conventional})
        if (l && (!(*l >= 0.0) || !std::isfinite(*l))) throw ValidationError("lambda must be finite and >= 0");
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

ThetaParam SimDesign::theta_true() const
{
    Vector alpha = Vector::Constant(p, -0.5);
    alpha(0) = 1.0;
    alpha(1) = 0.5;
    Vector beta = Vector::Constant(q, -1.0);
    beta(0) = 1.0;
    beta(1) = 0.5;
    beta(2) = 1.0;
    return ThetaParam(1.0, alpha, beta, 0);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    // splitmix64 finalizer over master + (index + 1) * golden gamma
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

std::vector<Matrix> draw_covariates(Index n, Index p, Index q, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<Matrix> xs(static_cast<std::size_t>(n), Matrix(p, q));
    for (Matrix& x : xs)
        for (Index j = 0; j < q; ++j)
            for (Index i = 0; i < p; ++i) x(i, j) = z(rng);
    return xs;
}

std::vector<int> draw_labels(const std::vector<double>& prob, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> y(prob.size());
    for (std::size_t i = 0; i < prob.size(); ++i) y[i] = u(rng) < prob[i] ? 1 : 0;
    return y;
}

// substreams of one replicate seed
enum Stream : std::uint64_t { Covariates = 1, Labels = 2, Delta = 3, TestSet = 4 };

double accuracy(const std::vector<double>& prob, const std::vector<int>& labels)
{
    std::size_t hit = 0;
    for (std::size_t i = 0; i < prob.size(); ++i)
        if ((prob[i] > 0.5 ? 1 : 0) == labels[i]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(prob.size());
}

struct Replicate {
    bool mv_ok = false;
    bool conventional_ok = false;
    Vector theta;
    Vector se;
    std::vector<bool> covered;
    double similarity = 0.0;
    double accuracy_mv = 0.0;
    double accuracy_conventional = 0.0;
    double rho = 1.0;
    double kl = 0.0;
};

Replicate run_replicate(const SimDesign& design, std::uint64_t seed, double lambda_mv, double lambda_conv,
                        bool with_inference)
{
    const ThetaParam truth = design.theta_true();
    PerturbedSample train = generate_perturbed_data(design, seed);
    const MatrixDataset test =
        generate_from_coefficient(1.0, train.xi, design.test_size(), derive_seed(seed, Stream::TestSet));

    Replicate r;
    r.rho = explained_proportion(train.xi);

    FitConfig cfg;
    cfg.lambda = lambda_mv;
    cfg.penalty = design.penalty;
    cfg.baseline_row = 0;
    try {
        const FitResult fit_mv = fit(train.data, cfg);
        r.mv_ok = fit_mv.converged;
        if (r.mv_ok) {
            r.theta = fit_mv.theta.free_parameters();
            std::vector<double> prob;
            for (const Matrix& x : test.matrices()) prob.push_back(success_probability(fit_mv.theta, x));
            r.accuracy_mv = accuracy(prob, test.labels());
            r.similarity = similarity(1.0, train.xi, fit_mv.theta);
            r.kl = empirical_kl(1.0, train.xi, fit_mv.theta, test.matrices());
            if (with_inference) {
                const CovarianceEstimate cov = covariance_estimate(fit_mv, train.data, cfg);
                r.se = cov.standard_errors();
                const Vector t = truth.free_parameters();
                const double z = normal_quantile_two_sided(design.level);
                for (Index i = 0; i < t.size(); ++i) r.covered.push_back(std::abs(r.theta(i) - t(i)) <= z * r.se(i));
            }
        }
    } catch (const NumericalError&) {
        r.mv_ok = false;
    }

    if (design.run_conventional) {
        try {
            const ConventionalFit fit_conv = fit_conventional(train.data, lambda_conv, design.penalty);
            r.conventional_ok = fit_conv.converged;
            if (r.conventional_ok) {
                std::vector<double> prob;
                for (const Matrix& x : test.matrices()) prob.push_back(sigmoid(fit_conv.linear_predictor(vec(x))));
                r.accuracy_conventional = accuracy(prob, test.labels());
            }
        } catch (const NumericalError&) {
            r.conventional_ok = false;
        }
    } else {
        r.conventional_ok = true;
    }
    return r;
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

MatrixDataset generate_mv_data(const SimDesign& design, std::uint64_t replicate_seed)
{
    design.validate();
    const ThetaParam truth = design.theta_true();
    std::vector<Matrix> xs = draw_covariates(design.n, design.p, design.q, derive_seed(replicate_seed, Stream::Covariates));
    std::vector<double> prob;
    for (const Matrix& x : xs) prob.push_back(success_probability(truth, x));
    return MatrixDataset(std::move(xs), draw_labels(prob, derive_seed(replicate_seed, Stream::Labels)));
}

MatrixDataset generate_from_coefficient(double gamma, const Matrix& xi, Index n, std::uint64_t seed)
{
    std::vector<Matrix> xs = draw_covariates(n, xi.rows(), xi.cols(), derive_seed(seed, Stream::Covariates));
    std::vector<double> prob;
    for (const Matrix& x : xs) prob.push_back(sigmoid(gamma + xi.cwiseProduct(x).sum()));
    return MatrixDataset(std::move(xs), draw_labels(prob, derive_seed(seed, Stream::Labels)));
}

PerturbedSample generate_perturbed_data(const SimDesign& design, std::uint64_t replicate_seed)
{
    design.validate();
    const ThetaParam truth = design.theta_true();
    Matrix xi = truth.alpha() * truth.beta().transpose();
    if (design.sigma > 0.0) {
        std::mt19937_64 rng(derive_seed(replicate_seed, Stream::Delta));
        std::normal_distribution<double> z(0.0, design.sigma);
        for (Index j = 0; j < xi.cols(); ++j)
            for (Index i = 0; i < xi.rows(); ++i) xi(i, j) += z(rng);
    }
    MatrixDataset data = generate_from_coefficient(1.0, xi, design.n, replicate_seed);
    return {std::move(data), std::move(xi)};
}

double explained_proportion(const Matrix& xi)
{
    if (xi.size() == 0 || xi.isZero(0.0)) throw ValidationError("explained proportion of a zero matrix");
    Eigen::JacobiSVD<Matrix> svd(xi);
    const Vector& s = svd.singularValues();
    return s(0) / s.sum();
}

double similarity(double gamma, const Matrix& xi, const ThetaParam& estimate)
{
    if (xi.rows() != estimate.p() || xi.cols() != estimate.q()) throw ValidationError("similarity: dimension mismatch");
    const auto [g, v] = vectorized_coefficient(estimate);
    const double nu = std::sqrt(gamma * gamma + xi.squaredNorm());
    const double nv = std::sqrt(g * g + v.squaredNorm());
    if (nu == 0.0 || nv == 0.0) throw ValidationError("similarity of a zero vector");
    return (gamma * g + vec(xi).dot(v)) / (nu * nv);
}

double similarity(const ThetaParam& truth, const ThetaParam& estimate)
{
    return similarity(truth.gamma(), truth.alpha() * truth.beta().transpose(), estimate);
}

double empirical_kl(double gamma, const Matrix& xi, const ThetaParam& rank1, const std::vector<Matrix>& matrices)
{
    if (matrices.empty()) throw ValidationError("empirical KL needs at least one matrix");
    if (xi.rows() != rank1.p() || xi.cols() != rank1.q()) throw ValidationError("empirical KL: dimension mismatch");
    double total = 0.0;
    for (const Matrix& x : matrices) {
        if (x.rows() != xi.rows() || x.cols() != xi.cols()) throw ValidationError("empirical KL: dimension mismatch");
        const double e0 = gamma + xi.cwiseProduct(x).sum();
        const double e1 = linear_predictor(rank1, x);
        // KL(Bern(s(e0)) || Bern(s(e1))) = s(e0)(e0 - e1) + softplus(e1) - softplus(e0)
        const double kl = sigmoid(e0) * (e0 - e1) + softplus(e1) - softplus(e0);
        total += std::max(kl, 0.0);
    }
    return total / static_cast<double>(matrices.size());
}

SimReport run_study(const SimDesign& design)
{
    design.validate();
    if (!design.lambda_mv || (design.run_conventional && !design.lambda_conventional))
        throw ValidationError("run_study needs lambda_mv and lambda_conventional; run tune_lambdas first");
    const double lmv = *design.lambda_mv;
    const double lconv = design.lambda_conventional.value_or(0.0);

    std::vector<Replicate> reps(static_cast<std::size_t>(design.replicates));
    parallel_for(reps.size(), design.threads, [&](std::size_t i) {
        reps[i] = run_replicate(design, derive_seed(design.seed, i), lmv, lconv, true);
    });

    SimReport report;
    report.design = design;
    report.lambda_mv = lmv;
    report.lambda_conventional = lconv;

    const ThetaParam truth = design.theta_true();
    const Vector t = truth.free_parameters();
    const auto names = free_parameter_names(design.p, design.q, 0);
    const std::size_t d = static_cast<std::size_t>(t.size());

    std::vector<std::vector<double>> est(d), se(d);
    std::vector<int> covered(d, 0);
    std::vector<double> sims, acc_mv, acc_conv, rhos, kls;
    int wins = 0;
    int ties = 0;
    for (const Replicate& r : reps) {
        if (!r.mv_ok) ++report.excluded_mv;
        if (!r.conventional_ok) ++report.excluded_conventional;
        if (!r.mv_ok || !r.conventional_ok) continue;
        for (std::size_t k = 0; k < d; ++k) {
            est[k].push_back(r.theta(static_cast<Index>(k)));
            se[k].push_back(r.se(static_cast<Index>(k)));
            if (r.covered[k]) ++covered[k];
        }
        sims.push_back(r.similarity);
        acc_mv.push_back(r.accuracy_mv);
        acc_conv.push_back(r.accuracy_conventional);
        rhos.push_back(r.rho);
        kls.push_back(r.kl);
        if (r.accuracy_mv > r.accuracy_conventional) ++wins;
        if (r.accuracy_mv == r.accuracy_conventional) ++ties;
    }
    report.replicates_used = static_cast<int>(sims.size());
    for (std::size_t k = 0; k < d; ++k) {
        CoordinateSummary c;
        c.name = names[k];
        c.truth = t(static_cast<Index>(k));
        c.mean = mean_of(est[k]);
        c.sd = sd_of(est[k]);
        c.mean_se = mean_of(se[k]);
        c.coverage = sims.empty() ? 0.0 : static_cast<double>(covered[k]) / static_cast<double>(sims.size());
        report.coordinates.push_back(c);
    }
    report.similarity_mean = mean_of(sims);
    report.similarity_sd = sd_of(sims);
    report.accuracy_mv = mean_of(acc_mv);
    report.accuracy_conventional = mean_of(acc_conv);
    report.winning_proportion = sims.empty() ? 0.0 : static_cast<double>(wins) / static_cast<double>(sims.size());
    report.tie_proportion = sims.empty() ? 0.0 : static_cast<double>(ties) / static_cast<double>(sims.size());
    report.rho_mean = mean_of(rhos);
    report.kl_mean = mean_of(kls);
    return report;
}

LambdaTuning tune_lambdas(const SimDesign& design, const std::vector<double>& mv_grid,
                          const std::vector<double>& conventional_grid, int replicates, std::uint64_t seed)
{
    design.validate();
    if (mv_grid.empty() || (design.run_conventional && conventional_grid.empty()))
        throw ValidationError("lambda grid is empty");
    if (replicates < 1) throw ValidationError("tuning needs at least one replicate");

    // every grid point sees the same replicates
    const std::size_t width = std::max(mv_grid.size(), conventional_grid.size());
    std::vector<double> acc_mv(mv_grid.size() * static_cast<std::size_t>(replicates), 0.0);
    std::vector<double> acc_conv(conventional_grid.size() * static_cast<std::size_t>(replicates), 0.0);
    parallel_for(width * static_cast<std::size_t>(replicates), design.threads, [&](std::size_t task) {
        const std::size_t g = task / static_cast<std::size_t>(replicates);
        const std::size_t rep = task % static_cast<std::size_t>(replicates);
        const std::uint64_t s = derive_seed(seed, rep);
        SimDesign one = design;
        one.run_conventional = design.run_conventional && g < conventional_grid.size();
        const double lmv = mv_grid[std::min(g, mv_grid.size() - 1)];
        const double lconv = one.run_conventional ? conventional_grid[g] : 0.0;
        const Replicate r = run_replicate(one, s, lmv, lconv, false);
        if (g < mv_grid.size()) acc_mv[g * static_cast<std::size_t>(replicates) + rep] = r.mv_ok ? r.accuracy_mv : 0.0;
        if (one.run_conventional)
            acc_conv[g * static_cast<std::size_t>(replicates) + rep] = r.conventional_ok ? r.accuracy_conventional : 0.0;
    });

    const auto pick = [&](const std::vector<double>& grid, const std::vector<double>& acc,
                          std::vector<std::pair<double, double>>& table) {
        std::size_t best = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double s = 0.0;
            for (int rep = 0; rep < replicates; ++rep) s += acc[g * static_cast<std::size_t>(replicates) + static_cast<std::size_t>(rep)];
            table.emplace_back(grid[g], s / replicates);
            const auto& b = table[best];
            if (table[g].second > b.second || (table[g].second == b.second && grid[g] < b.first)) best = g;
        }
        return grid[best];
    };

    LambdaTuning out;
    out.lambda_mv = pick(mv_grid, acc_mv, out.mv_table);
    if (design.run_conventional) out.lambda_conventional = pick(conventional_grid, acc_conv, out.conventional_table);
    return out;
}

std::string render_table1_csv(const SimReport& report)
{
    std::ostringstream out;
    out << "name,true,mean,sd,se,coverage\n";
    for (const CoordinateSummary& c : report.coordinates)
        out << c.name << ',' << number(c.truth) << ',' << number(c.mean) << ',' << number(c.sd) << ','
            << number(c.mean_se) << ',' << number(c.coverage) << '\n';
    out << "SIM,," << number(report.similarity_mean) << ',' << number(report.similarity_sd) << ",,\n";
    return out.str();
}

std::string render_table2_csv(const std::vector<SimReport>& reports)
{
    std::ostringstream out;
    out << "sigma,p,q,n,rho,accuracy_mv,accuracy_conventional,winning_proportion\n";
    for (const SimReport& r : reports)
        out << number(r.design.sigma) << ',' << r.design.p << ',' << r.design.q << ',' << r.design.n << ','
            << number(r.rho_mean) << ',' << number(r.accuracy_mv) << ',' << number(r.accuracy_conventional) << ','
            << number(r.winning_proportion) << '\n';
    return out.str();
}

}  // namespace mvlogit
