#include "mvlogit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace mvlogit {

namespace {

[[noreturn]] void bad(const std::string& what, const std::string& msg)
{
    throw ValidationError(what + ": " + msg);
}

const Json& field(const Json& j, const char* key, const std::string& what)
{
    if (!j.is_object()) bad(what, "expected a JSON object");
    auto it = j.find(key);
    if (it == j.end()) bad(what, std::string("missing field '") + key + "'");
    return *it;
}

double as_double(const Json& j, const std::string& what)
{
    if (!j.is_number()) bad(what, "expected a number");
    return j.get<double>();
}

long long as_integer(const Json& j, const std::string& what)
{
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float()) {
        const double d = j.get<double>();
        if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    bad(what, "expected an integer");
}

std::string as_string(const Json& j, const std::string& what)
{
    if (!j.is_string()) bad(what, "expected a string");
    return j.get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const std::string& what)
{
    if (!j.is_array()) bad(what, "expected an array of strings");
    std::vector<std::string> out;
    for (const Json& e : j) out.push_back(as_string(e, what));
    return out;
}

std::vector<int> label_list(const Json& j)
{
    if (!j.is_array()) bad("labels", "expected an array");
    std::vector<int> out;
    out.reserve(j.size());
    for (const Json& e : j) out.push_back(static_cast<int>(as_integer(e, "labels")));
    return out;
}

std::vector<Matrix> matrix_list(const Json& doc, Index p, Index q)
{
    const Json& ms = field(doc, "matrices", "dataset");
    if (!ms.is_array()) bad("matrices", "expected an array");
    std::vector<Matrix> out;
    out.reserve(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        Matrix m = matrix_from_json(ms[i], "matrices[" + std::to_string(i) + "]");
        if (m.rows() != p || m.cols() != q)
            bad("matrices[" + std::to_string(i) + "]", "is " + std::to_string(m.rows()) + "x" +
                                                          std::to_string(m.cols()) + ", declared " +
                                                          std::to_string(p) + "x" + std::to_string(q));
        out.push_back(std::move(m));
    }
    return out;
}

Index positive_dim(const Json& doc, const char* key)
{
    const long long v = as_integer(field(doc, key, "dataset"), key);
    if (v < 1) bad(key, "must be >= 1");
    return static_cast<Index>(v);
}

Index baseline_from_json(const Json& j, Index p)
{
    const long long b = as_integer(field(j, "baseline_row", "model"), "baseline_row");
    if (b < 1 || b > p) bad("baseline_row", "must lie in 1.." + std::to_string(p));
    return static_cast<Index>(b - 1);
}

ThetaParam theta_from_json(const Json& j, Index baseline)
{
    const Vector alpha = vector_from_json(field(j, "alpha", "model"), "alpha");
    const Vector beta = vector_from_json(field(j, "beta", "model"), "beta");
    if (baseline >= alpha.size()) bad("baseline_row", "exceeds the length of alpha");
    return ThetaParam(as_double(field(j, "gamma", "model"), "gamma"), alpha, beta, baseline);
}

void theta_into(Json& j, const ThetaParam& theta)
{
    j["gamma"] = theta.gamma();
    j["alpha"] = vector_to_json(theta.alpha());
    j["beta"] = vector_to_json(theta.beta());
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ValidationError(where + ": '" + s + "' is not a number");
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// primitives

Json matrix_to_json(const Matrix& m)
{
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& what)
{
    if (!j.is_array() || j.empty()) bad(what, "expected a non-empty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0) bad(what, "rows must be non-empty arrays");
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) bad(what, "ragged row " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = as_double(j[r][c], what);
    }
    return m;
}

Json vector_to_json(const Vector& v)
{
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Vector vector_from_json(const Json& j, const std::string& what)
{
    if (!j.is_array()) bad(what, "expected an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = as_double(j[i], what);
    return v;
}

Json number_or_null(double x)
{
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

std::string dump_json(const Json& j, bool compact)
{
    return j.dump(compact ? -1 : 2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json_file(const std::filesystem::path& path)
{
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + path.string());
}

std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// datasets

Json dataset_to_json(const MatrixDataset& data, const std::vector<std::string>& channels)
{
    Json j;
    j["p"] = data.p();
    j["q"] = data.q();
    if (!channels.empty()) j["channels"] = channels;
    if (!data.subject_ids().empty()) j["subject_ids"] = data.subject_ids();
    j["labels"] = data.labels();
    Json ms = Json::array();
    for (const Matrix& m : data.matrices()) ms.push_back(matrix_to_json(m));
    j["matrices"] = std::move(ms);
    return j;
}

DatasetDocument dataset_from_json(const Json& j)
{
    if (is_multiclass_document(j)) bad("dataset", "is a multi-class document (it has num_classes)");
    const Index p = positive_dim(j, "p");
    const Index q = positive_dim(j, "q");
    std::vector<Matrix> ms = matrix_list(j, p, q);
    const bool has_labels = j.contains("labels");
    std::vector<int> labels = has_labels ? label_list(j["labels"]) : std::vector<int>(ms.size(), 0);
    if (labels.size() != ms.size()) bad("dataset", "label count differs from matrix count");
    std::vector<std::string> ids;
    if (j.contains("subject_ids")) ids = string_list(j["subject_ids"], "subject_ids");
    DatasetDocument doc;
    doc.has_labels = has_labels;
    if (j.contains("channels")) {
        doc.channels = string_list(j["channels"], "channels");
        if (static_cast<Index>(doc.channels.size()) != q) bad("channels", "count must equal q");
    }
    doc.data = MatrixDataset(std::move(ms), std::move(labels), std::move(ids));
    return doc;
}

bool is_multiclass_document(const Json& j)
{
    return j.is_object() && j.contains("num_classes");
}

Json multiclass_dataset_to_json(const MultiClassDataset& data)
{
    Json j;
    j["p"] = data.p();
    j["q"] = data.q();
    j["num_classes"] = data.num_classes();
    j["reference_class"] = data.reference_class();
    j["labels"] = data.labels();
    Json ms = Json::array();
    for (const Matrix& m : data.matrices()) ms.push_back(matrix_to_json(m));
    j["matrices"] = std::move(ms);
    return j;
}

MultiClassDataset multiclass_dataset_from_json(const Json& j)
{
    const Index p = positive_dim(j, "p");
    const Index q = positive_dim(j, "q");
    const int h = static_cast<int>(as_integer(field(j, "num_classes", "dataset"), "num_classes"));
    const int ref = j.contains("reference_class") ? static_cast<int>(as_integer(j["reference_class"], "reference_class")) : 0;
    std::vector<int> labels = label_list(field(j, "labels", "dataset"));
    std::vector<Matrix> ms = matrix_list(j, p, q);
    if (labels.size() != ms.size()) bad("dataset", "label count differs from matrix count");
    return MultiClassDataset(std::move(ms), std::move(labels), h, ref);
}

DatasetDocument read_dataset_csv(std::istream& in, const std::string& source)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    if (!in && line.empty()) throw ValidationError(source + ": empty CSV");
    const std::vector<std::string> header = split_csv_line(line);

    std::size_t col = 0;
    bool has_id = false;
    if (!header.empty() && (header[0] == "id" || header[0] == "subject")) {
        has_id = true;
        ++col;
    }
    if (col >= header.size() || header[col] != "y")
        throw ValidationError(source + ": header must start with y (optionally after an id column)");
    const std::size_t first_x = col + 1;
    std::vector<std::pair<Index, Index>> cell;  // (row, col), 0-based
    Index p = 0;
    Index q = 0;
    for (std::size_t k = first_x; k < header.size(); ++k) {
        int i = 0;
        int jj = 0;
        char tail = 0;
        if (std::sscanf(header[k].c_str(), "x_%d_%d%c", &i, &jj, &tail) != 2 || i < 1 || jj < 1)
            throw ValidationError(source + ": bad covariate column name '" + header[k] + "'");
        cell.emplace_back(i - 1, jj - 1);
        p = std::max<Index>(p, i);
        q = std::max<Index>(q, jj);
    }
    if (cell.empty()) throw ValidationError(source + ": no covariate columns");
    if (static_cast<Index>(cell.size()) != p * q)
        throw ValidationError(source + ": expected " + std::to_string(p * q) + " covariate columns for " +
                              std::to_string(p) + "x" + std::to_string(q));
    for (std::size_t k = 0; k < cell.size(); ++k) {
        const Index expect_i = static_cast<Index>(k) % p;
        const Index expect_j = static_cast<Index>(k) / p;
        if (cell[k].first != expect_i || cell[k].second != expect_j)
            throw ValidationError(source + ": covariate columns must be in column-major order (x_1_1, x_2_1, ...)");
    }

    std::vector<Matrix> ms;
    std::vector<int> labels;
    std::vector<std::string> ids;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = source + ":" + std::to_string(lineno);
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
        if (has_id) ids.push_back(f[0]);
        const double y = parse_double(f[col], where);
        if (y != 0.0 && y != 1.0) throw ValidationError(where + ": label must be 0 or 1");
        labels.push_back(static_cast<int>(y));
        Matrix m(p, q);
        for (std::size_t k = 0; k < cell.size(); ++k)
            m(cell[k].first, cell[k].second) = parse_double(f[first_x + k], where);
        ms.push_back(std::move(m));
    }
    if (ms.empty()) throw ValidationError(source + ": no data rows");
    DatasetDocument doc;
    doc.data = MatrixDataset(std::move(ms), std::move(labels), std::move(ids));
    return doc;
}

std::string dataset_to_csv(const MatrixDataset& data)
{
    std::string out;
    const bool ids = !data.subject_ids().empty();
    if (ids) out += "id,";
    out += "y";
    for (Index j = 0; j < data.q(); ++j)
        for (Index i = 0; i < data.p(); ++i) out += ",x_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
    out += "\n";
    for (Index s = 0; s < data.n(); ++s) {
        if (ids) out += data.subject_ids()[static_cast<std::size_t>(s)] + ",";
        out += std::to_string(data.y(s));
        const Matrix& m = data.x(s);
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) out += "," + format_number(m(i, j));
        out += "\n";
    }
    return out;
}

DatasetDocument load_dataset(const std::filesystem::path& path)
{
    if (path.extension() == ".csv") {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open " + path.string());
        return read_dataset_csv(in, path.string());
    }
    return dataset_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// artifacts

Json bases_to_json(const GlramBases& bases)
{
    Json j;
    j["p"] = bases.p();
    j["q"] = bases.q();
    j["p0"] = bases.p0();
    j["q0"] = bases.q0();
    j["iterations"] = bases.iterations;
    j["converged"] = bases.converged;
    j["objective"] = bases.objective_trace.empty() ? Json(nullptr) : Json(bases.objective_trace.back());
    j["A"] = matrix_to_json(bases.A);
    j["B"] = matrix_to_json(bases.B);
    j["center"] = matrix_to_json(bases.center);
    return j;
}

GlramBases bases_from_json(const Json& j)
{
    GlramBases b;
    b.A = matrix_from_json(field(j, "A", "bases"), "bases.A");
    b.B = matrix_from_json(field(j, "B", "bases"), "bases.B");
    b.center = matrix_from_json(field(j, "center", "bases"), "bases.center");
    if (b.center.rows() != b.A.rows() || b.center.cols() != b.B.rows())
        bad("bases", "center must be " + std::to_string(b.A.rows()) + "x" + std::to_string(b.B.rows()));
    if (b.A.cols() > b.A.rows() || b.B.cols() > b.B.rows()) bad("bases", "reduced dimensions exceed the input");
    if (j.contains("iterations")) b.iterations = static_cast<int>(as_integer(j["iterations"], "iterations"));
    if (j.contains("converged") && j["converged"].is_boolean()) b.converged = j["converged"].get<bool>();
    if (j.contains("objective") && j["objective"].is_number()) b.objective_trace.push_back(j["objective"].get<double>());
    return b;
}

Json standardization_to_json(const StandardizationStats& stats)
{
    Json j;
    j["means"] = matrix_to_json(stats.means);
    j["sds"] = matrix_to_json(stats.sds);
    Json flagged = Json::array();
    for (Index c = 0; c < stats.constant.cols(); ++c)
        for (Index r = 0; r < stats.constant.rows(); ++r)
            if (stats.constant(r, c)) flagged.push_back(Json::array({r + 1, c + 1}));
    j["constant_entries"] = std::move(flagged);
    return j;
}

StandardizationStats standardization_from_json(const Json& j)
{
    StandardizationStats s;
    s.means = matrix_from_json(field(j, "means", "standardization"), "standardization.means");
    s.sds = matrix_from_json(field(j, "sds", "standardization"), "standardization.sds");
    if (s.sds.rows() != s.means.rows() || s.sds.cols() != s.means.cols())
        bad("standardization", "means and sds differ in shape");
    s.constant.setConstant(s.means.rows(), s.means.cols(), false);
    if (j.contains("constant_entries"))
        for (const Json& e : j["constant_entries"]) {
            if (!e.is_array() || e.size() != 2) bad("standardization.constant_entries", "expected [row, col] pairs");
            const long long r = as_integer(e[0], "constant_entries") - 1;
            const long long c = as_integer(e[1], "constant_entries") - 1;
            if (r < 0 || c < 0 || r >= s.means.rows() || c >= s.means.cols())
                bad("standardization.constant_entries", "index out of range");
            s.constant(r, c) = true;
        }
    for (Index c = 0; c < s.sds.cols(); ++c)
        for (Index r = 0; r < s.sds.rows(); ++r)
            if (!s.constant(r, c) && !(s.sds(r, c) > 0.0)) bad("standardization", "non-positive sd on a scaled entry");
    return s;
}

Json preprocessing_to_json(const Preprocessing& pre)
{
    Json j;
    j["input_p"] = pre.input_p;
    j["input_q"] = pre.input_q;
    if (!pre.channels.empty()) j["channels"] = pre.channels;
    j["glram"] = pre.bases ? bases_to_json(*pre.bases) : Json(nullptr);
    j["standardization"] = pre.standardization ? standardization_to_json(*pre.standardization) : Json(nullptr);
    return j;
}

Preprocessing preprocessing_from_json(const Json& j)
{
    Preprocessing pre;
    pre.input_p = static_cast<Index>(as_integer(field(j, "input_p", "preprocessing"), "input_p"));
    pre.input_q = static_cast<Index>(as_integer(field(j, "input_q", "preprocessing"), "input_q"));
    if (j.contains("channels")) pre.channels = string_list(j["channels"], "channels");
    if (j.contains("glram") && !j["glram"].is_null()) {
        pre.bases = bases_from_json(j["glram"]);
        if (pre.bases->p() != pre.input_p || pre.bases->q() != pre.input_q)
            bad("preprocessing", "GLRAM bases do not match the input shape");
    }
    if (j.contains("standardization") && !j["standardization"].is_null()) {
        pre.standardization = standardization_from_json(j["standardization"]);
        if (pre.standardization->means.rows() != pre.output_p() || pre.standardization->means.cols() != pre.output_q())
            bad("preprocessing", "standardization does not match the projected shape");
    }
    return pre;
}

FitConfig ModelArtifact::fit_config() const
{
    FitConfig c;
    c.lambda = lambda;
    c.penalty = penalty;
    c.curvature = curvature;
    if (binary) c.baseline_row = binary->theta.baseline_row();
    return c;
}

FitStatus fit_status_from_string(const std::string& name)
{
    for (FitStatus s : {FitStatus::Converged, FitStatus::MaxIterations, FitStatus::Diverged, FitStatus::Stalled})
        if (to_string(s) == name) return s;
    throw ValidationError("unknown fit status '" + name + "'");
}

Json model_to_json(const ModelArtifact& model)
{
    if (model.binary.has_value() == model.multiclass.has_value())
        throw ValidationError("a model artifact holds exactly one of a binary or multi-class fit");
    Json j;
    j["format"] = "mvlogit-model";
    j["version"] = 1;
    j["kind"] = model.is_multiclass() ? "multiclass" : "binary";
    j["lambda"] = model.lambda;
    j["penalty"] = to_string(model.penalty);
    j["curvature"] = to_string(model.curvature);
    if (model.binary) {
        const FitResult& f = *model.binary;
        j["baseline_row"] = f.theta.baseline_row() + 1;
        theta_into(j, f.theta);
        j["fit"] = fit_summary_to_json(f);
    } else {
        const MultiFitResult& f = *model.multiclass;
        j["baseline_row"] = f.theta.baseline_row() + 1;
        j["num_classes"] = f.theta.num_classes;
        j["reference_class"] = f.theta.reference_class;
        Json blocks = Json::array();
        for (std::size_t h = 0; h < f.theta.blocks.size(); ++h) {
            Json b;
            b["class"] = f.theta.block_classes[h];
            theta_into(b, f.theta.blocks[h]);
            blocks.push_back(std::move(b));
        }
        j["blocks"] = std::move(blocks);
        Json s;
        s["status"] = to_string(f.status);
        s["converged"] = f.converged;
        s["iterations"] = f.iterations;
        s["loglik"] = number_or_null(f.loglik);
        s["penalized_loglik"] = number_or_null(f.penalized_loglik);
        s["ridge_used"] = f.ridge_used;
        j["fit"] = std::move(s);
    }
    j["preprocessing"] = preprocessing_to_json(model.preprocessing);
    if (model.covariance) {
        Json c;
        c["n"] = model.covariance->n;
        c["ridge_used"] = model.covariance->ridge_used;
        c["sigma_hat"] = matrix_to_json(model.covariance->sigma_hat);
        j["covariance"] = std::move(c);
    } else {
        j["covariance"] = nullptr;
    }
    return j;
}

ModelArtifact model_from_json(const Json& j)
{
    if (!j.is_object() || j.value("format", std::string()) != "mvlogit-model")
        bad("model", "not an mvlogit model document");
    ModelArtifact m;
    m.lambda = as_double(field(j, "lambda", "model"), "lambda");
    m.penalty = penalty_kind_from_string(as_string(field(j, "penalty", "model"), "penalty"));
    if (j.contains("curvature")) m.curvature = curvature_from_string(as_string(j["curvature"], "curvature"));
    m.preprocessing = preprocessing_from_json(field(j, "preprocessing", "model"));
    const std::string kind = as_string(field(j, "kind", "model"), "kind");
    const Json& summary = field(j, "fit", "model");
    Index free_count = 0;
    if (kind == "binary") {
        const Vector alpha = vector_from_json(field(j, "alpha", "model"), "alpha");
        FitResult f;
        f.theta = theta_from_json(j, baseline_from_json(j, alpha.size()));
        f.status = fit_status_from_string(as_string(field(summary, "status", "fit"), "status"));
        f.converged = f.status == FitStatus::Converged;
        if (summary.contains("iterations")) f.iterations = static_cast<int>(as_integer(summary["iterations"], "iterations"));
        if (summary.contains("loglik") && summary["loglik"].is_number()) f.loglik = summary["loglik"].get<double>();
        if (summary.contains("penalized_loglik") && summary["penalized_loglik"].is_number())
            f.penalized_loglik = summary["penalized_loglik"].get<double>();
        if (f.theta.p() != m.preprocessing.output_p() || f.theta.q() != m.preprocessing.output_q())
            bad("model", "coefficient lengths do not match the preprocessed shape");
        free_count = f.theta.free_count();
        m.binary = std::move(f);
    } else if (kind == "multiclass") {
        MultiFitResult f;
        f.theta.num_classes = static_cast<int>(as_integer(field(j, "num_classes", "model"), "num_classes"));
        f.theta.reference_class = static_cast<int>(as_integer(field(j, "reference_class", "model"), "reference_class"));
        const Json& blocks = field(j, "blocks", "model");
        if (!blocks.is_array() || blocks.empty()) bad("blocks", "expected a non-empty array");
        for (const Json& b : blocks) {
            const Vector alpha = vector_from_json(field(b, "alpha", "block"), "alpha");
            f.theta.blocks.push_back(theta_from_json(b, baseline_from_json(j, alpha.size())));
            f.theta.block_classes.push_back(static_cast<int>(as_integer(field(b, "class", "block"), "class")));
            if (f.theta.blocks.back().p() != m.preprocessing.output_p() ||
                f.theta.blocks.back().q() != m.preprocessing.output_q())
                bad("model", "block coefficient lengths do not match the preprocessed shape");
        }
        if (static_cast<int>(f.theta.blocks.size()) != f.theta.num_classes - 1)
            bad("blocks", "expected num_classes - 1 blocks");
        f.status = fit_status_from_string(as_string(field(summary, "status", "fit"), "status"));
        f.converged = f.status == FitStatus::Converged;
        if (summary.contains("iterations")) f.iterations = static_cast<int>(as_integer(summary["iterations"], "iterations"));
        free_count = static_cast<Index>(f.theta.blocks.size()) * f.theta.block_size();
        m.multiclass = std::move(f);
    } else {
        bad("kind", "expected binary or multiclass");
    }
    if (j.contains("covariance") && !j["covariance"].is_null()) {
        const Json& c = j["covariance"];
        CovarianceEstimate cov;
        cov.n = static_cast<Index>(as_integer(field(c, "n", "covariance"), "n"));
        if (c.contains("ridge_used")) cov.ridge_used = as_double(c["ridge_used"], "ridge_used");
        cov.sigma_hat = matrix_from_json(field(c, "sigma_hat", "covariance"), "sigma_hat");
        if (cov.sigma_hat.rows() != free_count || cov.sigma_hat.cols() != free_count)
            bad("covariance", "sigma_hat must be " + std::to_string(free_count) + " square");
        m.covariance = std::move(cov);
    }
    return m;
}

// ---------------------------------------------------------------------------
// reports

Json fit_summary_to_json(const FitResult& fit)
{
    Json j;
    j["status"] = to_string(fit.status);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["loglik"] = number_or_null(fit.loglik);
    j["penalized_loglik"] = number_or_null(fit.penalized_loglik);
    j["final_gradient_norm"] = number_or_null(fit.final_gradient_norm);
    j["last_step"] = number_or_null(fit.last_step);
    j["ridge_used"] = fit.ridge_used;
    return j;
}

Json coefficient_table_to_json(const std::vector<CoefficientRow>& rows)
{
    Json out = Json::array();
    for (const CoefficientRow& r : rows) {
        Json j;
        j["name"] = r.name;
        j["estimate"] = r.estimate;
        j["se"] = number_or_null(r.standard_error);
        j["lower"] = number_or_null(r.interval.lower);
        j["upper"] = number_or_null(r.interval.upper);
        out.push_back(std::move(j));
    }
    return out;
}

Json cv_result_to_json(const CvResult& cv)
{
    Json j;
    j["best_lambda"] = cv.best_lambda;
    j["best_accuracy"] = cv.best_accuracy;
    Json table = Json::array();
    for (const CvPoint& pt : cv.table)
        table.push_back({{"lambda", pt.lambda}, {"correct", pt.correct}, {"accuracy", pt.accuracy}});
    j["table"] = std::move(table);
    return j;
}

Json sim_design_to_json(const SimDesign& d)
{
    Json j;
    j["p"] = d.p;
    j["q"] = d.q;
    j["n"] = d.n;
    j["test_n"] = d.test_size();
    j["sigma"] = d.sigma;
    j["replicates"] = d.replicates;
    j["seed"] = d.seed;
    j["lambda_mv"] = d.lambda_mv ? Json(*d.lambda_mv) : Json(nullptr);
    j["lambda_conventional"] = d.lambda_conventional ? Json(*d.lambda_conventional) : Json(nullptr);
    j["penalty"] = to_string(d.penalty);
    j["level"] = d.level;
    j["run_conventional"] = d.run_conventional;
    return j;
}

SimDesign sim_design_from_json(const Json& j)
{
    if (!j.is_object()) bad("design", "expected a JSON object");
    static const char* known[] = {"p",     "q",         "n",         "test_n",           "sigma", "replicates", "seed",
                                  "lambda_mv", "lambda_conventional", "penalty", "level", "run_conventional"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
            std::end(known))
            bad("design", "unknown field '" + it.key() + "'");
    SimDesign d;
    if (j.contains("p")) d.p = static_cast<Index>(as_integer(j["p"], "p"));
    if (j.contains("q")) d.q = static_cast<Index>(as_integer(j["q"], "q"));
    if (j.contains("n")) d.n = static_cast<Index>(as_integer(j["n"], "n"));
    if (j.contains("test_n")) d.test_n = static_cast<Index>(as_integer(j["test_n"], "test_n"));
    if (j.contains("sigma")) d.sigma = as_double(j["sigma"], "sigma");
    if (j.contains("replicates")) d.replicates = static_cast<int>(as_integer(j["replicates"], "replicates"));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
            bad("seed", "expected a non-negative integer");
        d.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("lambda_mv") && !j["lambda_mv"].is_null()) d.lambda_mv = as_double(j["lambda_mv"], "lambda_mv");
    if (j.contains("lambda_conventional") && !j["lambda_conventional"].is_null())
        d.lambda_conventional = as_double(j["lambda_conventional"], "lambda_conventional");
    if (j.contains("penalty")) d.penalty = penalty_kind_from_string(as_string(j["penalty"], "penalty"));
    if (j.contains("level")) d.level = as_double(j["level"], "level");
    if (j.contains("run_conventional")) {
        if (!j["run_conventional"].is_boolean()) bad("run_conventional", "expected a boolean");
        d.run_conventional = j["run_conventional"].get<bool>();
    }
    d.validate();
    return d;
}

Json sim_report_to_json(const SimReport& r)
{
    Json j;
    j["design"] = sim_design_to_json(r.design);
    j["lambda_mv"] = r.lambda_mv;
    j["lambda_conventional"] = r.lambda_conventional;
    j["replicates_used"] = r.replicates_used;
    j["excluded_mv"] = r.excluded_mv;
    j["excluded_conventional"] = r.excluded_conventional;
    Json coords = Json::array();
    for (const CoordinateSummary& c : r.coordinates)
        coords.push_back({{"name", c.name},
                          {"true", c.truth},
                          {"mean", number_or_null(c.mean)},
                          {"sd", number_or_null(c.sd)},
                          {"se", number_or_null(c.mean_se)},
                          {"coverage", number_or_null(c.coverage)}});
    j["coordinates"] = std::move(coords);
    j["similarity_mean"] = number_or_null(r.similarity_mean);
    j["similarity_sd"] = number_or_null(r.similarity_sd);
    j["accuracy_mv"] = number_or_null(r.accuracy_mv);
    j["accuracy_conventional"] = number_or_null(r.accuracy_conventional);
    j["winning_proportion"] = number_or_null(r.winning_proportion);
    j["tie_proportion"] = number_or_null(r.tie_proportion);
    j["rho_mean"] = number_or_null(r.rho_mean);
    j["kl_mean"] = number_or_null(r.kl_mean);
    return j;
}

Json lambda_tuning_to_json(const LambdaTuning& t)
{
    Json j;
    j["lambda_mv"] = t.lambda_mv;
    j["lambda_conventional"] = t.lambda_conventional;
    auto table = [](const std::vector<std::pair<double, double>>& rows) {
        Json out = Json::array();
        for (const auto& [l, a] : rows) out.push_back({{"lambda", l}, {"accuracy", a}});
        return out;
    };
    j["mv_table"] = table(t.mv_table);
    j["conventional_table"] = table(t.conventional_table);
    return j;
}

}  // namespace mvlogit
