#include "mvlogit/preprocess.hpp"

namespace mvlogit {

namespace {

std::string shape(Index r, Index c)
{
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

Index Preprocessing::output_p() const
{
    return bases ? bases->p0() : input_p;
}

Index Preprocessing::output_q() const
{
    return bases ? bases->q0() : input_q;
}

Matrix Preprocessing::apply(const Matrix& x) const
{
    if (x.rows() != input_p || x.cols() != input_q) {
        std::string msg = "model expects " + shape(input_p, input_q) + " covariates but got " +
                          shape(x.rows(), x.cols());
        if (!bases && x.rows() >= input_p && x.cols() >= input_q)
            msg += "; the model stores no GLRAM bases to reduce raw matrices";
        throw ValidationError(msg);
    }
    Matrix out = bases ? glram_project(*bases, x) : x;
    if (standardization) out = standardization->apply(out);
    return out;
}

MatrixDataset Preprocessing::apply(const MatrixDataset& data) const
{
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(data.n()));
    for (const Matrix& m : data.matrices()) out.push_back(apply(m));
    return data.with_matrices(std::move(out));
}

PreprocessedData fit_preprocessing(const MatrixDataset& data, const PreprocessOptions& options,
                                   std::vector<std::string> channels)
{
    PreprocessedData out;
    out.preprocessing.input_p = data.p();
    out.preprocessing.input_q = data.q();
    out.preprocessing.channels = std::move(channels);
    out.data = data;
    if (options.glram) {
        out.preprocessing.bases = glram_fit(data.matrices(), *options.glram);
        out.data = glram_project(*out.preprocessing.bases, data);
    }
    if (options.standardize) {
        StandardizedDataset s = standardize(out.data);
        out.data = std::move(s.data);
        out.preprocessing.standardization = std::move(s.stats);
    }
    return out;
}

}  // namespace mvlogit
