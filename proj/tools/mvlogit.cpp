// mvlogit: command-line front end for fitting, inference, simulation and the EEG analysis.

#include "mvlogit/eeg.hpp"
#include "mvlogit/io.hpp"
#include "mvlogit/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mvlogit;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string out;
    std::string format = "json";
};

Globals g;

std::optional<fs::path> data_root()
{
    const char* env = std::getenv("MVLOGIT_DATA_DIR");
    if (env == nullptr || *env == '\0') return std::nullopt;
    return fs::path(env);
}

// Relative paths that do not exist here are looked up under MVLOGIT_DATA_DIR.
fs::path resolve_input(const std::string& name)
{
    fs::path p(name);
    if (fs::exists(p) || p.is_absolute()) return p;
    if (auto root = data_root(); root && fs::exists(*root / p)) return *root / p;
    return p;
}

fs::path resolve_data_dir(const std::string& dir)
{
    if (!dir.empty()) return resolve_input(dir);
    if (auto root = data_root()) return *root;
    throw ValidationError("no EEG directory given (use --data-dir or set MVLOGIT_DATA_DIR)");
}

void emit(const std::string& text, const std::string& path = g.out)
{
    if (path.empty() || path == "-")
        std::cout << text << std::flush;
    else
        write_text_file(path, text);
}

bool csv() { return g.format == "csv"; }

CvScheme make_scheme(const std::string& scheme, int folds)
{
    CvScheme s;
    if (scheme == "loo") {
        s.kind = CvScheme::Kind::LeaveOneOut;
    } else if (scheme == "kfold") {
        s.kind = CvScheme::Kind::KFold;
        s.folds = folds;
    } else {
        throw ValidationError("unknown scheme '" + scheme + "' (expected loo or kfold)");
    }
    if (g.seed) s.seed = *g.seed;
    return s;
}

// Optional GLRAM projection from a bases file, then optional standardization.
PreprocessedData preprocess_for_fit(const DatasetDocument& doc, const std::string& bases_path, bool standardize)
{
    PreprocessedData out;
    out.preprocessing.input_p = doc.data.p();
    out.preprocessing.input_q = doc.data.q();
    out.preprocessing.channels = doc.channels;
    out.data = doc.data;
    if (!bases_path.empty()) {
        GlramBases b = bases_from_json(read_json_file(resolve_input(bases_path)));
        if (b.p() != doc.data.p() || b.q() != doc.data.q())
            throw ValidationError("bases are for " + std::to_string(b.p()) + "x" + std::to_string(b.q()) +
                                  " matrices but the data is " + std::to_string(doc.data.p()) + "x" +
                                  std::to_string(doc.data.q()));
        out.data = glram_project(b, doc.data);
        out.preprocessing.bases = std::move(b);
    }
    if (standardize) {
        StandardizedDataset s = mvlogit::standardize(out.data);
        out.data = std::move(s.data);
        out.preprocessing.standardization = std::move(s.stats);
    }
    return out;
}

std::string coefficient_csv(const std::vector<CoefficientRow>& rows)
{
    std::string s = "name,estimate,se,lower,upper\n";
    for (const CoefficientRow& r : rows)
        s += r.name + "," + format_number(r.estimate) + "," + format_number(r.standard_error) + "," +
             format_number(r.interval.lower) + "," + format_number(r.interval.upper) + "\n";
    return s;
}

std::vector<CoefficientRow> multiclass_coefficients(const MultiFitResult& fit, const CovarianceEstimate& cov,
                                                    double level)
{
    std::vector<CoefficientRow> rows;
    const double z = normal_quantile_two_sided(level);
    const Vector theta = fit.theta.free_parameters();
    const Index block = fit.theta.block_size();
    for (std::size_t h = 0; h < fit.theta.blocks.size(); ++h) {
        const ThetaParam& b = fit.theta.blocks[h];
        const auto names = free_parameter_names(b.p(), b.q(), b.baseline_row());
        for (Index k = 0; k < block; ++k) {
            const Index idx = static_cast<Index>(h) * block + k;
            CoefficientRow r;
            r.name = "class" + std::to_string(fit.theta.block_classes[h]) + "." + names[static_cast<std::size_t>(k)];
            r.estimate = theta(idx);
            r.standard_error = cov.standard_error(idx);
            r.interval = {r.estimate - z * r.standard_error, r.estimate + z * r.standard_error, level};
            rows.push_back(r);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------

void cmd_ingest(const std::string& dir, const std::string& condition, bool keep_err, bool strict)
{
    EegIngestOptions o;
    o.condition = eeg_condition_from_string(condition);
    o.keep_error_trials = keep_err;
    o.strict = strict;
    o.threads = g.threads;
    const EegIngest in = ingest_eeg(resolve_data_dir(dir), o);
    Index alc = 0;
    for (const auto& s : in.subjects) alc += s.alcoholic ? 1 : 0;
    std::cerr << "ingested " << in.subjects.size() << " subjects (" << alc << " alcoholic, "
              << in.subjects.size() - static_cast<std::size_t>(alc) << " control) from " << in.files_read
              << " files\n";
    for (const auto& s : in.subjects) std::cerr << "  " << s.subject << ": " << s.retained << " trials\n";
    for (const auto& r : in.rejected)
        std::cerr << "  rejected " << r.source << " trial " << r.trial << ": " << r.reason << "\n";
    for (const auto& f : in.skipped_files) std::cerr << "  skipped " << f << "\n";
    emit(csv() ? dataset_to_csv(in.data) : dump_json(dataset_to_json(in.data, in.channels), true));
}

struct GlramArgs {
    std::string data;
    Index p0 = 15;
    Index q0 = 15;
    bool no_center = false;
    double tol = 1e-10;
    int max_iter = 200;
    std::string projected;
};

void cmd_glram(const GlramArgs& a)
{
    const DatasetDocument doc = load_dataset(resolve_input(a.data));
    GlramOptions o;
    o.p0 = a.p0;
    o.q0 = a.q0;
    o.center = !a.no_center;
    o.tol = a.tol;
    o.max_iter = a.max_iter;
    const GlramBases b = glram_fit(doc.data.matrices(), o);
    if (!a.projected.empty()) write_text_file(a.projected, dump_json(dataset_to_json(glram_project(b, doc.data))));
    if (csv()) {
        std::string s = "iteration,objective\n";
        for (std::size_t i = 0; i < b.objective_trace.size(); ++i)
            s += std::to_string(i) + "," + format_number(b.objective_trace[i]) + "\n";
        emit(s);
    } else {
        emit(dump_json(bases_to_json(b)));
    }
}

struct FitArgs {
    std::string data;
    double lambda = 0.0;
    std::string penalty = "no-intercept";
    double tol = 1e-8;
    int max_iter = 100;
    std::optional<Index> baseline_row;
    std::string curvature = "observed";
    bool standardize = false;
    std::string bases;
    std::string trace;
    std::string report;
    double level = 0.95;
};

void cmd_fit(const FitArgs& a)
{
    FitConfig cfg;
    cfg.lambda = a.lambda;
    cfg.penalty = penalty_kind_from_string(a.penalty);
    cfg.tol = a.tol;
    cfg.max_iter = a.max_iter;
    cfg.curvature = curvature_from_string(a.curvature);
    if (a.baseline_row) cfg.baseline_row = *a.baseline_row - 1;
    cfg.validate();

    const fs::path path = resolve_input(a.data);
    Json report;
    report["report"] = "fit";
    ModelArtifact model;
    model.lambda = cfg.lambda;
    model.penalty = cfg.penalty;
    model.curvature = cfg.curvature;
    std::vector<double> trace;
    std::vector<CoefficientRow> rows;

    const Json raw = path.extension() == ".csv" ? Json() : read_json_file(path);
    if (!raw.is_null() && is_multiclass_document(raw)) {
        if (!a.bases.empty() || a.standardize)
            throw ValidationError("--bases and --standardize are not supported for multi-class data");
        const MultiClassDataset data = multiclass_dataset_from_json(raw);
        MultiFitResult f = multiclass_fit(data, cfg);
        model.preprocessing.input_p = data.p();
        model.preprocessing.input_q = data.q();
        try {
            model.covariance = multiclass_covariance(f, data, cfg);
            rows = multiclass_coefficients(f, *model.covariance, a.level);
        } catch (const NumericalError& e) {
            std::cerr << "warning: no covariance estimate (" << e.what() << ")\n";
        }
        Index hit = 0;
        for (Index i = 0; i < data.n(); ++i) hit += predict_class(f.theta, data.x(i)) == data.label(i) ? 1 : 0;
        report["kind"] = "multiclass";
        report["n"] = data.n();
        report["status"] = to_string(f.status);
        report["converged"] = f.converged;
        report["iterations"] = f.iterations;
        report["loglik"] = number_or_null(f.loglik);
        report["in_sample_accuracy"] = static_cast<double>(hit) / static_cast<double>(data.n());
        trace = f.trace;
        model.multiclass = std::move(f);
    } else {
        const DatasetDocument doc = raw.is_null() ? load_dataset(path) : dataset_from_json(raw);
        if (!doc.has_labels) throw ValidationError("fitting needs labels");
        const PreprocessedData pre = preprocess_for_fit(doc, a.bases, a.standardize);
        FitResult f = fit(pre.data, cfg);
        FitConfig used = cfg;
        used.baseline_row = f.theta.baseline_row();
        try {
            model.covariance = covariance_estimate(f, pre.data, used);
            rows = coefficient_table(f, *model.covariance, a.level);
        } catch (const NumericalError& e) {
            std::cerr << "warning: no covariance estimate (" << e.what() << ")\n";
        }
        Index hit = 0;
        for (Index i = 0; i < pre.data.n(); ++i) hit += classify(f.theta, pre.data.x(i)) == pre.data.y(i) ? 1 : 0;
        report["kind"] = "binary";
        report["n"] = pre.data.n();
        report["baseline_row"] = f.theta.baseline_row() + 1;
        report["fit"] = fit_summary_to_json(f);
        report["in_sample_accuracy"] = static_cast<double>(hit) / static_cast<double>(pre.data.n());
        trace = f.trace;
        model.preprocessing = pre.preprocessing;
        model.binary = std::move(f);
    }
    report["lambda"] = cfg.lambda;
    report["penalty"] = to_string(cfg.penalty);
    report["curvature"] = to_string(cfg.curvature);
    report["level"] = a.level;
    report["coefficients"] = coefficient_table_to_json(rows);

    if (!g.out.empty()) write_text_file(g.out, dump_json(model_to_json(model)));
    if (!a.trace.empty()) {
        std::string s = "iteration,penalized_loglik\n";
        for (std::size_t i = 0; i < trace.size(); ++i) s += std::to_string(i) + "," + format_number(trace[i]) + "\n";
        write_text_file(a.trace, s);
    }
    emit(csv() ? coefficient_csv(rows) : dump_json(report), a.report);
    const bool ok = model.binary ? model.binary->converged : model.multiclass->converged;
    if (!ok) std::cerr << "warning: the fit did not converge\n";
}

struct CvArgs {
    std::string data;
    std::string grid = "0.5,1,2,4,8,16,32,64";
    std::string scheme = "loo";
    int folds = 10;
    std::string arm = "mv";
    std::string penalty = "no-intercept";
    std::string curvature = "observed";
    bool standardize = false;
    std::string bases;
};

void cmd_cv(const CvArgs& a)
{
    const DatasetDocument doc = load_dataset(resolve_input(a.data));
    const PreprocessedData pre = preprocess_for_fit(doc, a.bases, a.standardize);
    const std::vector<double> grid = parse_lambda_grid(a.grid);
    const CvScheme scheme = make_scheme(a.scheme, a.folds);
    std::vector<std::pair<std::string, Arm>> arms;
    if (a.arm == "mv" || a.arm == "both") arms.emplace_back("mv", Arm::MatrixVariate);
    if (a.arm == "conventional" || a.arm == "both") arms.emplace_back("conventional", Arm::Conventional);
    if (arms.empty()) throw ValidationError("--arm must be mv, conventional or both");

    Json report;
    report["report"] = "cv";
    report["scheme"] = a.scheme;
    std::string table = "arm,lambda,correct,accuracy\n";
    for (const auto& [name, arm] : arms) {
        CvOptions o;
        o.arm = arm;
        o.penalty = penalty_kind_from_string(a.penalty);
        o.curvature = curvature_from_string(a.curvature);
        o.threads = g.threads;
        const CvResult r = select_lambda_cv(pre.data, grid, scheme, o);
        report[name] = cv_result_to_json(r);
        for (const CvPoint& pt : r.table)
            table += name + "," + format_number(pt.lambda) + "," + std::to_string(pt.correct) + "," +
                     format_number(pt.accuracy) + "\n";
    }
    emit(csv() ? table : dump_json(report));
}

void cmd_infer(const std::string& model_path, const std::string& data_path, double level, bool probabilities)
{
    const ModelArtifact model = model_from_json(read_json_file(resolve_input(model_path)));
    const FitConfig cfg = model.fit_config();
    Json report;
    report["report"] = "infer";
    report["level"] = level;
    std::vector<CoefficientRow> rows;
    if (model.is_multiclass()) {
        const MultiClassDataset data = multiclass_dataset_from_json(read_json_file(resolve_input(data_path)));
        const CovarianceEstimate cov = multiclass_covariance(*model.multiclass, data, cfg);
        rows = multiclass_coefficients(*model.multiclass, cov, level);
        report["n"] = data.n();
        report["coefficients"] = coefficient_table_to_json(rows);
    } else {
        const DatasetDocument doc = load_dataset(resolve_input(data_path));
        if (!doc.has_labels) throw ValidationError("inference needs labels");
        const MatrixDataset data = model.preprocessing.apply(doc.data);
        const CovarianceEstimate cov = covariance_estimate(*model.binary, data, cfg);
        rows = coefficient_table(*model.binary, cov, level);
        report["n"] = data.n();
        report["covariance_ridge"] = cov.ridge_used;
        report["coefficients"] = coefficient_table_to_json(rows);
        if (probabilities) {
            Json subjects = Json::array();
            for (Index i = 0; i < data.n(); ++i) {
                const IntervalEstimate iv = probability_ci(*model.binary, cov, data.x(i), level);
                subjects.push_back({{"id", data.subject_ids().empty() ? std::to_string(i + 1)
                                                                      : data.subject_ids()[static_cast<std::size_t>(i)]},
                                    {"probability", success_probability(model.binary->theta, data.x(i))},
                                    {"lower", iv.lower},
                                    {"upper", iv.upper}});
            }
            report["subjects"] = std::move(subjects);
        }
    }
    emit(csv() ? coefficient_csv(rows) : dump_json(report));
}

void cmd_predict(const std::string& model_path, const std::string& data_path, double level)
{
    const ModelArtifact model = model_from_json(read_json_file(resolve_input(model_path)));
    Json report;
    report["report"] = "predict";
    Json rows = Json::array();
    std::string table;
    Index hit = 0;
    bool labeled = true;
    Index n = 0;
    if (model.is_multiclass()) {
        const MultiClassDataset data = multiclass_dataset_from_json(read_json_file(resolve_input(data_path)));
        const ThetaMulti& th = model.multiclass->theta;
        n = data.n();
        table = "id,predicted";
        for (int h = 1; h <= th.num_classes; ++h) table += ",p" + std::to_string(h);
        table += ",label\n";
        for (Index i = 0; i < n; ++i) {
            const Matrix x = model.preprocessing.apply(data.x(i));
            const Vector pr = class_probabilities(th, x);
            const int c = predict_class(th, x);
            hit += c == data.label(i) ? 1 : 0;
            rows.push_back({{"id", std::to_string(i + 1)},
                            {"predicted", c},
                            {"probabilities", vector_to_json(pr)},
                            {"label", data.label(i)}});
            table += std::to_string(i + 1) + "," + std::to_string(c);
            for (Index h = 0; h < pr.size(); ++h) table += "," + format_number(pr(h));
            table += "," + std::to_string(data.label(i)) + "\n";
        }
    } else {
        const DatasetDocument doc = load_dataset(resolve_input(data_path));
        labeled = doc.has_labels;
        const MatrixDataset data = model.preprocessing.apply(doc.data);
        const FitResult& f = *model.binary;
        if (!model.covariance) std::cerr << "warning: the model stores no covariance; intervals omitted\n";
        n = data.n();
        table = "id,probability,lower,upper,predicted,label\n";
        for (Index i = 0; i < n; ++i) {
            const double pr = success_probability(f.theta, data.x(i));
            const int c = classify(f.theta, data.x(i));
            hit += c == data.y(i) ? 1 : 0;
            IntervalEstimate iv{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                                level};
            if (model.covariance) iv = probability_ci(f, *model.covariance, data.x(i), level);
            const std::string id =
                data.subject_ids().empty() ? std::to_string(i + 1) : data.subject_ids()[static_cast<std::size_t>(i)];
            Json row = {{"id", id},
                        {"probability", pr},
                        {"lower", number_or_null(iv.lower)},
                        {"upper", number_or_null(iv.upper)},
                        {"predicted", c}};
            if (labeled) row["label"] = data.y(i);
            rows.push_back(std::move(row));
            table += id + "," + format_number(pr) + "," + format_number(iv.lower) + "," + format_number(iv.upper) +
                     "," + std::to_string(c) + "," + (labeled ? std::to_string(data.y(i)) : std::string()) + "\n";
        }
    }
    report["level"] = level;
    report["n"] = n;
    report["accuracy"] = labeled ? Json(static_cast<double>(hit) / static_cast<double>(n)) : Json(nullptr);
    report["predictions"] = std::move(rows);
    emit(csv() ? table : dump_json(report));
}

struct SimulateArgs {
    std::string design;
    std::optional<int> replicates;
    std::optional<double> sigma;
    std::optional<Index> n;
    std::optional<Index> test_n;
    std::optional<double> lambda_mv;
    std::optional<double> lambda_conventional;
    int tune_replicates = 200;
    std::optional<std::uint64_t> tune_seed;
    std::string mv_grid = "0.25,0.5,1,2,4,8,16";
    std::string conventional_grid = "0.5,1,2,4,8,16,32,64";
    int table = 0;
};

void cmd_simulate(const SimulateArgs& a)
{
    std::vector<SimDesign> cells;
    if (a.design.empty()) {
        cells.emplace_back();
    } else {
        const Json d = read_json_file(resolve_input(a.design));
        if (d.is_array()) {
            for (const Json& c : d) cells.push_back(sim_design_from_json(c));
        } else if (d.is_object() && d.contains("cells")) {
            for (const Json& c : d["cells"]) cells.push_back(sim_design_from_json(c));
        } else {
            cells.push_back(sim_design_from_json(d));
        }
        if (cells.empty()) throw ValidationError("design file has no cells");
    }
    const std::vector<double> mv_grid = parse_lambda_grid(a.mv_grid);
    const std::vector<double> conv_grid = parse_lambda_grid(a.conventional_grid);

    Json report;
    report["report"] = "simulate";
    Json out_cells = Json::array();
    std::vector<SimReport> reports;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        SimDesign d = cells[c];
        if (a.replicates) d.replicates = *a.replicates;
        if (a.sigma) d.sigma = *a.sigma;
        if (a.n) d.n = *a.n;
        if (a.test_n) d.test_n = *a.test_n;
        if (a.lambda_mv) d.lambda_mv = *a.lambda_mv;
        if (a.lambda_conventional) d.lambda_conventional = *a.lambda_conventional;
        if (g.seed) d.seed = *g.seed;
        d.threads = g.threads;
        d.validate();
        Json cell;
        if (!d.lambda_mv || (d.run_conventional && !d.lambda_conventional)) {
            // independent pre-study on a seed stream the study never uses
            const std::uint64_t ts = a.tune_seed ? *a.tune_seed : derive_seed(d.seed, 0x7475'6e65ULL + c);
            const LambdaTuning t = tune_lambdas(d, mv_grid, conv_grid, a.tune_replicates, ts);
            if (!d.lambda_mv) d.lambda_mv = t.lambda_mv;
            if (!d.lambda_conventional) d.lambda_conventional = t.lambda_conventional;
            Json tj = lambda_tuning_to_json(t);
            tj["replicates"] = a.tune_replicates;
            tj["seed"] = ts;
            cell["tuning"] = std::move(tj);
        }
        if (!d.run_conventional && !d.lambda_conventional) d.lambda_conventional = 0.0;
        const SimReport r = run_study(d);
        Json body = sim_report_to_json(r);
        for (auto it = body.begin(); it != body.end(); ++it) cell[it.key()] = it.value();
        out_cells.push_back(std::move(cell));
        reports.push_back(r);
    }
    report["cells"] = std::move(out_cells);

    if (!csv()) {
        emit(dump_json(report));
        return;
    }
    const int table = a.table != 0 ? a.table : (reports.size() == 1 ? 1 : 2);
    if (table == 1) {
        std::string s;
        for (std::size_t i = 0; i < reports.size(); ++i) s += (i ? "\n" : "") + render_table1_csv(reports[i]);
        emit(s);
    } else {
        emit(render_table2_csv(reports));
    }
}

struct PipelineArgs {
    std::string data;
    std::string data_dir;
    std::string condition = "s1";
    Index p0 = 15;
    Index q0 = 15;
    std::string grid;
    std::string penalty = "all-theta";
    std::string scheme = "loo";
    int folds = 10;
    bool nested = false;
    bool no_center = false;
    bool no_standardize = false;
    bool no_conventional = false;
    double level = 0.95;
    std::string curvature = "observed";
    std::string model_out;
    std::string subjects_csv;
    std::string coefficients_csv;
};

DatasetDocument load_eeg_input(const std::string& data, const std::string& dir, const std::string& condition)
{
    if (!data.empty()) return load_dataset(resolve_input(data));
    EegIngestOptions o;
    o.condition = eeg_condition_from_string(condition);
    o.threads = g.threads;
    const EegIngest in = ingest_eeg(resolve_data_dir(dir), o);
    std::cerr << "ingested " << in.data.n() << " subjects from " << in.files_read << " files ("
              << in.rejected.size() << " trials rejected)\n";
    return {in.data, in.channels, true};
}

void cmd_pipeline(const PipelineArgs& a)
{
    const DatasetDocument doc = load_eeg_input(a.data, a.data_dir, a.condition);
    PipelineConfig c;
    c.p0 = a.p0;
    c.q0 = a.q0;
    if (!a.grid.empty()) c.grid = parse_lambda_grid(a.grid);
    c.penalty = penalty_kind_from_string(a.penalty);
    c.scheme = make_scheme(a.scheme, a.folds);
    c.nested = a.nested;
    c.center = !a.no_center;
    c.standardize = !a.no_standardize;
    c.run_conventional = !a.no_conventional;
    c.level = a.level;
    c.curvature = curvature_from_string(a.curvature);
    c.threads = g.threads;
    const auto cond = eeg_condition_from_string(a.condition);
    c.condition = !a.data.empty() ? "from dataset file" : (cond ? to_string(*cond) : "all");
    const PipelineReport r = eeg_pipeline(doc.data, c, doc.channels);
    std::cerr << "MV accuracy " << r.mv.accuracy << " (lambda " << r.lambda << ")";
    if (r.conventional) std::cerr << ", conventional " << r.conventional->accuracy;
    std::cerr << ", protocol " << r.protocol << "\n";
    if (!a.model_out.empty()) write_text_file(a.model_out, dump_json(model_to_json(r.model)));
    if (!a.subjects_csv.empty()) write_text_file(a.subjects_csv, pipeline_subjects_csv(r));
    if (!a.coefficients_csv.empty()) write_text_file(a.coefficients_csv, pipeline_coefficients_csv(r));
    emit(csv() ? pipeline_subjects_csv(r) : dump_json(pipeline_report_to_json(r)));
}

struct PcaArgs {
    std::string data;
    std::string data_dir;
    std::string condition = "s1";
    std::string ranks = "1,2,3,4,5";
    std::string grid;
    std::string penalty = "all-theta";
    std::string scheme = "loo";
    int folds = 10;
};

void cmd_pca(const PcaArgs& a)
{
    const DatasetDocument doc = load_eeg_input(a.data, a.data_dir, a.condition);
    const std::vector<double> grid = a.grid.empty() ? default_lambda_grid() : parse_lambda_grid(a.grid);
    const CvScheme scheme = make_scheme(a.scheme, a.folds);
    CvOptions o;
    o.penalty = penalty_kind_from_string(a.penalty);
    o.threads = g.threads;
    std::vector<PcaBaselineResult> results;
    std::string table = "rank,explained,lambda,accuracy\n";
    for (double rv : parse_lambda_grid(a.ranks)) {
        if (rv != std::floor(rv) || rv < 1) throw ValidationError("ranks must be positive integers");
        results.push_back(pca_baseline(doc.data, static_cast<Index>(rv), grid, scheme, o));
        const auto& r = results.back();
        table += std::to_string(r.rank) + "," + format_number(r.explained) + "," + format_number(r.cv.best_lambda) +
                 "," + format_number(r.cv.best_accuracy) + "\n";
    }
    emit(csv() ? table : dump_json(pca_baseline_to_json(results)));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Matrix-variate (rank-one bilinear) logistic regression"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g.seed, "Seed for fold assignment, simulation and fixtures");
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

    std::function<void()> action;

    // ingest-eeg
    std::string ingest_dir, ingest_condition = "s1";
    bool ingest_keep_err = false, ingest_strict = false;
    auto* ingest = app.add_subcommand("ingest-eeg", "Average UCI EEG trials per subject into a dataset file");
    ingest->add_option("--data-dir,--dir", ingest_dir, "Directory of trial files (default $MVLOGIT_DATA_DIR)");
    ingest->add_option("--condition", ingest_condition, "s1, match, nomatch or all");
    ingest->add_flag("--keep-err", ingest_keep_err, "Keep trials the recording marked err");
    ingest->add_flag("--strict", ingest_strict, "Fail on the first rejected trial");
    ingest->callback([&] { action = [&] { cmd_ingest(ingest_dir, ingest_condition, ingest_keep_err, ingest_strict); }; });

    // glram
    GlramArgs ga;
    auto* glram = app.add_subcommand("glram", "Fit GLRAM bases");
    glram->add_option("--data", ga.data, "Dataset (JSON or CSV)")->required();
    glram->add_option("--p0", ga.p0)->check(CLI::PositiveNumber);
    glram->add_option("--q0", ga.q0)->check(CLI::PositiveNumber);
    glram->add_flag("--no-center", ga.no_center, "Do not subtract the mean matrix");
    glram->add_option("--tol", ga.tol);
    glram->add_option("--max-iter", ga.max_iter);
    glram->add_option("--projected", ga.projected, "Also write the projected dataset here");
    glram->callback([&] { action = [&] { cmd_glram(ga); }; });

    // fit
    FitArgs fa;
    auto* fitc = app.add_subcommand("fit", "Fit the penalized bilinear model; --out receives the model");
    fitc->add_option("--data", fa.data)->required();
    fitc->add_option("--lambda", fa.lambda);
    fitc->add_option("--penalty", fa.penalty, "no-intercept or all-theta");
    fitc->add_option("--tol", fa.tol);
    fitc->add_option("--max-iter", fa.max_iter);
    fitc->add_option("--baseline-row", fa.baseline_row, "1-based pinned row (default: correlation rule)");
    fitc->add_option("--curvature", fa.curvature, "observed or fisher");
    fitc->add_flag("--standardize", fa.standardize, "Standardize each covariate entry first");
    fitc->add_option("--bases", fa.bases, "GLRAM bases file to project with first");
    fitc->add_option("--trace", fa.trace, "CSV file for the iteration trace");
    fitc->add_option("--report", fa.report, "Fit report file (default stdout)");
    fitc->add_option("--level", fa.level);
    fitc->callback([&] { action = [&] { cmd_fit(fa); }; });

    // cv
    CvArgs ca;
    auto* cv = app.add_subcommand("cv", "Cross-validated lambda selection");
    cv->add_option("--data", ca.data)->required();
    cv->add_option("--grid", ca.grid, "Comma-separated lambdas");
    cv->add_option("--scheme", ca.scheme, "loo or kfold");
    cv->add_option("--folds", ca.folds);
    cv->add_option("--arm", ca.arm, "mv, conventional or both");
    cv->add_option("--penalty", ca.penalty);
    cv->add_option("--curvature", ca.curvature);
    cv->add_flag("--standardize", ca.standardize);
    cv->add_option("--bases", ca.bases);
    cv->callback([&] { action = [&] { cmd_cv(ca); }; });

    // infer
    std::string inf_model, inf_data;
    double inf_level = 0.95;
    bool inf_prob = false;
    auto* infer = app.add_subcommand("infer", "Sandwich standard errors and Wald intervals");
    infer->add_option("--model", inf_model)->required();
    infer->add_option("--data", inf_data)->required();
    infer->add_option("--level", inf_level);
    infer->add_flag("--probabilities", inf_prob, "Add per-subject probability intervals");
    infer->callback([&] { action = [&] { cmd_infer(inf_model, inf_data, inf_level, inf_prob); }; });

    // predict
    std::string pr_model, pr_data;
    double pr_level = 0.95;
    auto* predict = app.add_subcommand("predict", "Predict with a stored model");
    predict->add_option("--model", pr_model)->required();
    predict->add_option("--data", pr_data)->required();
    predict->add_option("--level", pr_level);
    predict->callback([&] { action = [&] { cmd_predict(pr_model, pr_data, pr_level); }; });

    // simulate
    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo study; missing lambdas are tuned on an independent seed");
    sim->add_option("--design", sa.design, "Design JSON (object, array, or {\"cells\": [...]})");
    sim->add_option("--replicates", sa.replicates);
    sim->add_option("--sigma", sa.sigma);
    sim->add_option("--n", sa.n);
    sim->add_option("--test-n", sa.test_n);
    sim->add_option("--lambda-mv", sa.lambda_mv);
    sim->add_option("--lambda-conventional", sa.lambda_conventional);
    sim->add_option("--tune-replicates", sa.tune_replicates);
    sim->add_option("--tune-seed", sa.tune_seed);
    sim->add_option("--mv-grid", sa.mv_grid);
    sim->add_option("--conventional-grid", sa.conventional_grid);
    sim->add_option("--table", sa.table, "CSV layout: 1 (coefficients) or 2 (accuracies)")->check(CLI::Range(1, 2));
    sim->callback([&] { action = [&] { cmd_simulate(sa); }; });

    // eeg-pipeline
    PipelineArgs pa;
    auto* pipe = app.add_subcommand("eeg-pipeline", "GLRAM, standardize, fit, held-out accuracy");
    pipe->add_option("--data", pa.data, "Ingested dataset (otherwise read --data-dir)");
    pipe->add_option("--data-dir", pa.data_dir, "Trial directory (default $MVLOGIT_DATA_DIR)");
    pipe->add_option("--condition", pa.condition);
    pipe->add_option("--p0", pa.p0)->check(CLI::PositiveNumber);
    pipe->add_option("--q0", pa.q0)->check(CLI::PositiveNumber);
    pipe->add_option("--grid", pa.grid);
    pipe->add_option("--penalty", pa.penalty);
    pipe->add_option("--scheme", pa.scheme);
    pipe->add_option("--folds", pa.folds);
    pipe->add_flag("--nested", pa.nested, "Refit GLRAM, standardization and lambda inside every fold");
    pipe->add_flag("--no-center", pa.no_center);
    pipe->add_flag("--no-standardize", pa.no_standardize);
    pipe->add_flag("--no-conventional", pa.no_conventional);
    pipe->add_option("--level", pa.level);
    pipe->add_option("--curvature", pa.curvature);
    pipe->add_option("--model-out", pa.model_out, "Write the final model here");
    pipe->add_option("--subjects-csv", pa.subjects_csv, "Per-subject probabilities for plotting");
    pipe->add_option("--coefficients-csv", pa.coefficients_csv, "alpha and beta with intervals for plotting");
    pipe->callback([&] { action = [&] { cmd_pipeline(pa); }; });

    // pca-baseline
    PcaArgs pca;
    auto* pcac = app.add_subcommand("pca-baseline", "PCA scores followed by ridge logistic regression");
    pcac->add_option("--data", pca.data);
    pcac->add_option("--data-dir", pca.data_dir);
    pcac->add_option("--condition", pca.condition);
    pcac->add_option("--rank,--ranks", pca.ranks, "Comma-separated ranks");
    pcac->add_option("--grid", pca.grid);
    pcac->add_option("--penalty", pca.penalty);
    pcac->add_option("--scheme", pca.scheme);
    pcac->add_option("--folds", pca.folds);
    pcac->callback([&] { action = [&] { cmd_pca(pca); }; });

    // make-eeg-fixture
    EegFixtureOptions fo;
    auto* fix = app.add_subcommand("make-eeg-fixture", "Write a synthetic recording set in the UCI layout to --out");
    fix->add_option("--alcoholic", fo.alcoholic);
    fix->add_option("--control", fo.control);
    fix->add_option("--trials", fo.trials);
    fix->add_option("--other-trials", fo.other_trials);
    fix->add_option("--effect", fo.effect);
    fix->callback([&] {
        action = [&] {
            if (g.out.empty()) throw ValidationError("make-eeg-fixture needs --out <directory>");
            if (g.seed) fo.seed = *g.seed;
            const int files = write_eeg_fixture(g.out, fo);
            std::cerr << "wrote " << files << " trial files under " << g.out << "\n";
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        action();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
