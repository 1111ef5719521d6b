#include "mvlogit/pipeline.hpp"

#include "mvlogit/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvlogit {

std::vector<double> default_lambda_grid()
{
    return {0.25, 0.5, 1, 2, 4, 8, 12, 16, 20, 24, 28, 32, 40, 48, 64};
}

std::vector<double> parse_lambda_grid(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) throw ValidationError("empty entry in lambda grid '" + text + "'");
        const auto e = item.find_last_not_of(" \t");
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item.substr(b, e - b + 1), &used);
        } catch (const std::exception&) {
            throw ValidationError("bad lambda '" + item + "'");
        }
        if (used != e - b + 1) throw ValidationError("bad lambda '" + item + "'");
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("lambda values must be finite and >= 0");
        out.push_back(v);
    }
    if (out.empty()) throw ValidationError("lambda grid is empty");
    return out;
}

void PipelineConfig::validate() const
{
    if (p0 < 1 || q0 < 1) throw ValidationError("p0 and q0 must be >= 1");
    if (grid.empty()) throw ValidationError("lambda grid is empty");
    for (double l : grid)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("lambda values must be finite and >= 0");
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("level must lie in (0,1)");
    if (scheme.kind == CvScheme::Kind::KFold && scheme.folds < 2) throw ValidationError("k-fold needs k >= 2");
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

namespace {

Index resolve_baseline(const MatrixDataset& data)
{
    try {
        return select_baseline_row(data);
    } catch (const ValidationError&) {
        return 0;
    }
}

PreprocessOptions preprocess_options(const PipelineConfig& c)
{
    PreprocessOptions o;
    GlramOptions g;
    g.p0 = c.p0;
    g.q0 = c.q0;
    g.center = c.center;
    o.glram = g;
    o.standardize = c.standardize;
    return o;
}

CvOptions cv_options(const PipelineConfig& c, Arm arm, std::optional<Index> baseline, int threads)
{
    CvOptions o;
    o.arm = arm;
    o.penalty = c.penalty;
    o.baseline_row = baseline;
    o.curvature = c.curvature;
    o.threads = threads;
    return o;
}

FitConfig fit_config(const PipelineConfig& c, double lambda, Index baseline)
{
    FitConfig f;
    f.lambda = lambda;
    f.penalty = c.penalty;
    f.baseline_row = baseline;
    f.curvature = c.curvature;
    return f;
}

std::optional<CovarianceEstimate> try_covariance(const FitResult& fit, const MatrixDataset& data,
                                                 const FitConfig& cfg)
{
    try {
        return covariance_estimate(fit, data, cfg);
    } catch (const NumericalError&) {
        return std::nullopt;
    }
}

IntervalEstimate interval_or_nan(const FitResult& fit, const std::optional<CovarianceEstimate>& cov,
                                 const Matrix& x, double level)
{
    if (cov) return probability_ci(fit, *cov, x, level);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, level};
}

Index count_correct(const std::vector<double>& prob, const std::vector<int>& labels)
{
    Index hit = 0;
    for (std::size_t i = 0; i < prob.size(); ++i)
        if ((prob[i] > 0.5 ? 1 : 0) == labels[i]) ++hit;
    return hit;
}

std::vector<std::vector<Index>> fold_members(const std::vector<int>& fold)
{
    const int k = *std::max_element(fold.begin(), fold.end()) + 1;
    std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < fold.size(); ++i) out[static_cast<std::size_t>(fold[i])].push_back(static_cast<Index>(i));
    return out;
}

std::vector<Index> complement(const std::vector<Index>& test, Index n)
{
    std::vector<Index> out;
    std::size_t k = 0;
    for (Index i = 0; i < n; ++i) {
        if (k < test.size() && test[k] == i) {
            ++k;
            continue;
        }
        out.push_back(i);
    }
    return out;
}

CoefficientCurve curve(const std::string& name, const Vector& est, Index offset, std::optional<Index> pinned,
                       const std::vector<CoefficientRow>& rows)
{
    CoefficientCurve c;
    c.name = name;
    c.estimate = est;
    c.lower.resize(est.size());
    c.upper.resize(est.size());
    Index k = offset;
    for (Index i = 0; i < est.size(); ++i) {
        if (pinned && *pinned == i) {
            c.lower(i) = c.upper(i) = est(i);
            continue;
        }
        if (rows.empty()) {
            c.lower(i) = c.upper(i) = std::numeric_limits<double>::quiet_NaN();
        } else {
            c.lower(i) = rows[static_cast<std::size_t>(k)].interval.lower;
            c.upper(i) = rows[static_cast<std::size_t>(k)].interval.upper;
        }
        ++k;
    }
    return c;
}

}  // namespace

PipelineReport eeg_pipeline(const MatrixDataset& data, const PipelineConfig& config,
                            const std::vector<std::string>& channels)
{
    config.validate();
    if (config.p0 > data.p() || config.q0 > data.q())
        throw ValidationError("GLRAM target " + std::to_string(config.p0) + "x" + std::to_string(config.q0) +
                              " exceeds the data shape " + std::to_string(data.p()) + "x" + std::to_string(data.q()));
    if (data.n() < 3) throw ValidationError("the pipeline needs at least three subjects");
    const Index n = data.n();

    PipelineReport r;
    r.config = config;
    r.n = n;
    for (int y : data.labels()) r.positives += y;
    r.p = data.p();
    r.q = data.q();
    r.channels = channels;
    r.protocol = config.nested ? "nested" : "non-nested";

    // preprocessing, baseline and lambda selection on all subjects
    const PreprocessedData pre = fit_preprocessing(data, preprocess_options(config), channels);
    const GlramBases& bases = *pre.preprocessing.bases;
    r.glram_iterations = bases.iterations;
    r.glram_converged = bases.converged;
    double total = 0.0;
    for (const Matrix& m : data.matrices()) total += (m - bases.center).squaredNorm();
    r.captured_fraction = total > 0.0 ? captured_energy(bases, data.matrices()) / total : 1.0;
    r.baseline_row = resolve_baseline(pre.data);

    r.mv.cv = select_lambda_cv(pre.data, config.grid, config.scheme,
                               cv_options(config, Arm::MatrixVariate, r.baseline_row, config.threads));
    if (config.run_conventional) {
        ArmSummary conv;
        conv.cv = select_lambda_cv(pre.data, config.grid, config.scheme,
                                   cv_options(config, Arm::Conventional, std::nullopt, config.threads));
        r.conventional = std::move(conv);
    }
    r.lambda = r.mv.cv.best_lambda;

    // final fit and its intervals
    const FitConfig final_cfg = fit_config(config, r.lambda, r.baseline_row);
    r.final_fit = fit(pre.data, final_cfg);
    r.covariance = try_covariance(r.final_fit, pre.data, final_cfg);
    if (r.covariance) r.coefficients = coefficient_table(r.final_fit, *r.covariance, config.level);
    const ThetaParam& th = r.final_fit.theta;
    r.alpha = curve("alpha", th.alpha(), 1, th.baseline_row(), r.coefficients);
    r.beta = curve("beta", th.beta(), th.p(), std::nullopt, r.coefficients);

    r.model.preprocessing = pre.preprocessing;
    r.model.lambda = r.lambda;
    r.model.penalty = config.penalty;
    r.model.curvature = config.curvature;
    r.model.binary = r.final_fit;
    r.model.covariance = r.covariance;

    // held-out predictions, one refit per fold
    const std::vector<int> fold = make_folds(data.labels(), config.scheme);
    const auto members = fold_members(fold);
    r.subjects.resize(static_cast<std::size_t>(n));
    std::vector<double> mv_prob(static_cast<std::size_t>(n)), conv_prob(static_cast<std::size_t>(n));
    std::vector<double> mv_lambda(members.size()), conv_lambda(members.size());

    parallel_for(members.size(), config.threads, [&](std::size_t f) {
        const std::vector<Index>& test = members[f];
        const std::vector<Index> train = complement(test, n);
        if (!config.nested) {
            const MatrixDataset tr = pre.data.subset(train);
            const FitConfig cfg = fit_config(config, r.lambda, r.baseline_row);
            const FitResult fr = fit(tr, cfg);
            const auto cov = try_covariance(fr, tr, cfg);
            for (Index i : test) {
                const std::size_t s = static_cast<std::size_t>(i);
                mv_prob[s] = success_probability(fr.theta, pre.data.x(i));
                r.subjects[s].held_out_interval = interval_or_nan(fr, cov, pre.data.x(i), config.level);
            }
            mv_lambda[f] = r.lambda;
            return;
        }
        const PreprocessedData inner = fit_preprocessing(data.subset(train), preprocess_options(config), channels);
        const Index b = resolve_baseline(inner.data);
        CvScheme inner_scheme = config.scheme;
        if (inner_scheme.kind == CvScheme::Kind::KFold)
            inner_scheme.folds = std::min<int>(inner_scheme.folds, static_cast<int>(train.size()));
        const CvResult cv =
            select_lambda_cv(inner.data, config.grid, inner_scheme, cv_options(config, Arm::MatrixVariate, b, 1));
        mv_lambda[f] = cv.best_lambda;
        const FitConfig cfg = fit_config(config, cv.best_lambda, b);
        const FitResult fr = fit(inner.data, cfg);
        const auto cov = try_covariance(fr, inner.data, cfg);
        for (Index i : test) {
            const std::size_t s = static_cast<std::size_t>(i);
            const Matrix x = inner.preprocessing.apply(data.x(i));
            mv_prob[s] = success_probability(fr.theta, x);
            r.subjects[s].held_out_interval = interval_or_nan(fr, cov, x, config.level);
        }
        if (config.run_conventional) {
            const CvResult cc =
                select_lambda_cv(inner.data, config.grid, inner_scheme, cv_options(config, Arm::Conventional, {}, 1));
            conv_lambda[f] = cc.best_lambda;
            const ConventionalFit cf = fit_conventional(inner.data, cc.best_lambda, config.penalty);
            for (Index i : test)
                conv_prob[static_cast<std::size_t>(i)] =
                    sigmoid(cf.linear_predictor(vec(inner.preprocessing.apply(data.x(i)))));
        }
    });

    for (Index i = 0; i < n; ++i) {
        SubjectPrediction& s = r.subjects[static_cast<std::size_t>(i)];
        s.id = data.subject_ids().empty() ? std::to_string(i + 1) : data.subject_ids()[static_cast<std::size_t>(i)];
        s.label = data.y(i);
        s.held_out = mv_prob[static_cast<std::size_t>(i)];
        s.fitted = success_probability(r.final_fit.theta, pre.data.x(i));
        s.fitted_interval = interval_or_nan(r.final_fit, r.covariance, pre.data.x(i), config.level);
    }
    if (config.nested) {
        r.mv.correct = count_correct(mv_prob, data.labels());
        r.mv.fold_lambdas = mv_lambda;
        if (r.conventional) {
            r.conventional->correct = count_correct(conv_prob, data.labels());
            r.conventional->fold_lambdas = conv_lambda;
        }
    } else {
        r.mv.correct = count_correct(mv_prob, data.labels());
        if (r.conventional) {
            const CvPoint* best = nullptr;
            for (const CvPoint& pt : r.conventional->cv.table)
                if (pt.lambda == r.conventional->cv.best_lambda) best = &pt;
            r.conventional->correct = best->correct;
        }
    }
    r.mv.accuracy = static_cast<double>(r.mv.correct) / static_cast<double>(n);
    if (r.conventional)
        r.conventional->accuracy = static_cast<double>(r.conventional->correct) / static_cast<double>(n);
    return r;
}

namespace {

Json interval_json(const IntervalEstimate& iv)
{
    return {{"lower", number_or_null(iv.lower)}, {"upper", number_or_null(iv.upper)}};
}

Json arm_json(const ArmSummary& a, bool nested)
{
    Json j;
    j["accuracy"] = a.accuracy;
    j["correct"] = a.correct;
    j["selected_lambda"] = a.cv.best_lambda;
    j["cv"] = cv_result_to_json(a.cv);
    if (nested) j["fold_lambdas"] = a.fold_lambdas;
    return j;
}

Json curve_json(const CoefficientCurve& c)
{
    Json out = Json::array();
    for (Index i = 0; i < c.estimate.size(); ++i)
        out.push_back({{"index", i + 1},
                       {"estimate", c.estimate(i)},
                       {"lower", number_or_null(c.lower(i))},
                       {"upper", number_or_null(c.upper(i))}});
    return out;
}

}  // namespace

Json pipeline_report_to_json(const PipelineReport& r)
{
    const PipelineConfig& c = r.config;
    Json j;
    j["report"] = "eeg-pipeline";
    j["protocol"] = r.protocol;
    Json cfg;
    cfg["p0"] = c.p0;
    cfg["q0"] = c.q0;
    cfg["grid"] = c.grid;
    cfg["penalty"] = to_string(c.penalty);
    cfg["scheme"] = c.scheme.kind == CvScheme::Kind::LeaveOneOut ? "loo" : "kfold";
    if (c.scheme.kind == CvScheme::Kind::KFold) {
        cfg["folds"] = c.scheme.folds;
        cfg["seed"] = c.scheme.seed;
    }
    cfg["center"] = c.center;
    cfg["standardize"] = c.standardize;
    cfg["level"] = c.level;
    cfg["curvature"] = to_string(c.curvature);
    cfg["condition"] = c.condition;
    j["config"] = std::move(cfg);
    j["data"] = {{"n", r.n}, {"positives", r.positives}, {"p", r.p}, {"q", r.q}};
    j["glram"] = {{"iterations", r.glram_iterations},
                  {"converged", r.glram_converged},
                  {"captured_fraction", r.captured_fraction}};
    j["baseline_row"] = r.baseline_row + 1;
    j["mv"] = arm_json(r.mv, c.nested);
    j["conventional"] = r.conventional ? arm_json(*r.conventional, c.nested) : Json(nullptr);
    j["lambda"] = r.lambda;
    j["fit"] = fit_summary_to_json(r.final_fit);
    j["gamma"] = r.final_fit.theta.gamma();
    j["coefficients"] = coefficient_table_to_json(r.coefficients);
    j["alpha"] = curve_json(r.alpha);
    j["beta"] = curve_json(r.beta);
    Json subjects = Json::array();
    for (const SubjectPrediction& s : r.subjects)
        subjects.push_back({{"id", s.id},
                            {"label", s.label},
                            {"held_out", s.held_out},
                            {"held_out_interval", interval_json(s.held_out_interval)},
                            {"fitted", s.fitted},
                            {"fitted_interval", interval_json(s.fitted_interval)}});
    j["subjects"] = std::move(subjects);
    return j;
}

std::vector<std::string> pipeline_report_schema_errors(const Json& j)
{
    std::vector<std::string> errs;
    auto need = [&](const Json& obj, const char* key, auto pred, const char* what) {
        if (!obj.is_object() || !obj.contains(key)) {
            errs.push_back(std::string("missing ") + key);
            return false;
        }
        if (!pred(obj[key])) {
            errs.push_back(std::string(key) + " is not " + what);
            return false;
        }
        return true;
    };
    auto is_num = [](const Json& v) { return v.is_number(); };
    auto is_unit = [](const Json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
    auto is_unit_or_null = [&](const Json& v) { return v.is_null() || is_unit(v); };
    auto is_obj = [](const Json& v) { return v.is_object(); };
    auto is_arr = [](const Json& v) { return v.is_array(); };
    auto is_str = [](const Json& v) { return v.is_string(); };
    auto is_int = [](const Json& v) { return v.is_number_integer(); };

    if (!j.is_object()) return {"report is not an object"};
    need(j, "report", is_str, "a string");
    if (need(j, "protocol", is_str, "a string") && j["protocol"] != "nested" && j["protocol"] != "non-nested")
        errs.push_back("protocol must be nested or non-nested");
    need(j, "config", is_obj, "an object");
    Index n = -1;
    if (need(j, "data", is_obj, "an object") && need(j["data"], "n", is_int, "an integer")) n = j["data"]["n"].get<Index>();
    if (need(j, "glram", is_obj, "an object")) need(j["glram"], "captured_fraction", is_unit, "in [0,1]");
    need(j, "baseline_row", is_int, "an integer");
    for (const char* arm : {"mv", "conventional"}) {
        if (!j.contains(arm)) {
            errs.push_back(std::string("missing ") + arm);
            continue;
        }
        if (j[arm].is_null() && std::string(arm) == "conventional") continue;
        if (!j[arm].is_object()) {
            errs.push_back(std::string(arm) + " is not an object");
            continue;
        }
        need(j[arm], "accuracy", is_unit, "in [0,1]");
        need(j[arm], "selected_lambda", is_num, "a number");
        if (need(j[arm], "cv", is_obj, "an object") && need(j[arm]["cv"], "table", is_arr, "an array"))
            for (const Json& row : j[arm]["cv"]["table"]) need(row, "accuracy", is_unit, "in [0,1]");
    }
    need(j, "lambda", is_num, "a number");
    need(j, "fit", is_obj, "an object");
    need(j, "coefficients", is_arr, "an array");
    for (const char* side : {"alpha", "beta"})
        if (need(j, side, is_arr, "an array"))
            for (const Json& e : j[side]) need(e, "estimate", is_num, "a number");
    if (need(j, "subjects", is_arr, "an array")) {
        if (n >= 0 && static_cast<Index>(j["subjects"].size()) != n) errs.push_back("subject count differs from n");
        for (const Json& s : j["subjects"]) {
            need(s, "id", is_str, "a string");
            need(s, "held_out", is_unit, "in [0,1]");
            need(s, "fitted", is_unit, "in [0,1]");
            for (const char* iv : {"held_out_interval", "fitted_interval"})
                if (need(s, iv, is_obj, "an object")) {
                    const bool ok_l = need(s[iv], "lower", is_unit_or_null, "in [0,1]");
                    const bool ok_u = need(s[iv], "upper", is_unit_or_null, "in [0,1]");
                    if (ok_l && ok_u && s[iv]["lower"].is_number() && s[iv]["upper"].is_number() &&
                        s[iv]["lower"].get<double>() > s[iv]["upper"].get<double>())
                        errs.push_back("interval with lower > upper");
                }
        }
    }
    return errs;
}

std::string pipeline_subjects_csv(const PipelineReport& r)
{
    std::string out = "id,label,held_out,held_out_lower,held_out_upper,fitted,fitted_lower,fitted_upper\n";
    for (const SubjectPrediction& s : r.subjects)
        out += s.id + "," + std::to_string(s.label) + "," + format_number(s.held_out) + "," +
               format_number(s.held_out_interval.lower) + "," + format_number(s.held_out_interval.upper) + "," +
               format_number(s.fitted) + "," + format_number(s.fitted_interval.lower) + "," +
               format_number(s.fitted_interval.upper) + "\n";
    return out;
}

std::string pipeline_coefficients_csv(const PipelineReport& r)
{
    std::string out = "coefficient,index,estimate,lower,upper\n";
    for (const CoefficientCurve* c : {&r.alpha, &r.beta})
        for (Index i = 0; i < c->estimate.size(); ++i)
            out += c->name + "," + std::to_string(i + 1) + "," + format_number(c->estimate(i)) + "," +
                   format_number(c->lower(i)) + "," + format_number(c->upper(i)) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// PCA arm

PcaScores pca_scores(const MatrixDataset& data, Index r)
{
    const Index n = data.n();
    Matrix z = vectorized_design(data);
    if (r < 1 || r > std::min(n - 1, z.cols()))
        throw ValidationError("PCA rank must lie in 1.." + std::to_string(std::min(n - 1, z.cols())));
    z.rowwise() -= z.colwise().mean();

    // n x n Gram eigenproblem; cheaper than an SVD of the n x pq design when pq >> n
    Eigen::SelfAdjointEigenSolver<Matrix> eig(z * z.transpose());
    if (eig.info() != Eigen::Success) throw NumericalError("PCA eigen-decomposition failed");
    const Vector values = eig.eigenvalues().reverse().cwiseMax(0.0);
    Matrix u = eig.eigenvectors().rowwise().reverse().leftCols(r);
    if (values(r - 1) <= 1e-12 * values(0))
        throw ValidationError("PCA rank " + std::to_string(r) + " exceeds the numerical rank of the data");

    PcaScores out;
    out.singular_values = values.head(r).cwiseSqrt();
    out.explained = values.head(r).sum() / values.sum();
    for (Index k = 0; k < r; ++k) {
        Index arg = 0;
        u.col(k).cwiseAbs().maxCoeff(&arg);
        if (u(arg, k) < 0.0) u.col(k) = -u.col(k);
    }
    // unit sample SD per component
    out.scores = u * std::sqrt(static_cast<double>(n - 1));
    return out;
}

PcaBaselineResult pca_baseline(const MatrixDataset& data, Index r, const std::vector<double>& grid,
                               const CvScheme& scheme, const CvOptions& options)
{
    const PcaScores s = pca_scores(data, r);
    PcaBaselineResult out;
    out.rank = r;
    out.explained = s.explained;
    CvOptions o = options;
    o.arm = Arm::Conventional;
    out.cv = select_lambda_cv_features(s.scores, data.labels(), grid, scheme, o);
    return out;
}

Json pca_baseline_to_json(const std::vector<PcaBaselineResult>& results)
{
    Json j;
    j["report"] = "pca-baseline";
    Json rows = Json::array();
    for (const PcaBaselineResult& r : results) {
        Json row;
        row["rank"] = r.rank;
        row["explained"] = r.explained;
        row["accuracy"] = r.cv.best_accuracy;
        row["selected_lambda"] = r.cv.best_lambda;
        row["cv"] = cv_result_to_json(r.cv);
        rows.push_back(std::move(row));
    }
    j["results"] = std::move(rows);
    return j;
}

}  // namespace mvlogit
