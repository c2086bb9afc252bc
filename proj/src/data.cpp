#include "gael/data.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gael/rng.hpp"

namespace gael {

GridDataset make_grid_dataset(const ToyGmmSpec& spec, std::size_t n, std::uint64_t seed) {
    if (spec.grid_side < 1) throw std::invalid_argument("grid dataset: grid_side must be >= 1");
    if (!(spec.spacing > 0.0)) throw std::invalid_argument("grid dataset: spacing must be > 0");
    if (!(spec.mode_std > 0.0)) throw std::invalid_argument("grid dataset: mode_std must be > 0");
    if (n < 1) throw std::invalid_argument("grid dataset: n must be >= 1");

    std::size_t g = spec.grid_side, k = g * g;
    GmmModel truth;
    truth.k = k;
    truth.dim = 2;
    truth.cov_mode = CovMode::Full;
    truth.weights.assign(k, 1.0 / static_cast<double>(k));
    truth.means.resize(k * 2);
    double half = 0.5 * static_cast<double>(g - 1);
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = 0; j < g; ++j) {
            truth.means[(i * g + j) * 2 + 0] = (static_cast<double>(i) - half) * spec.spacing;
            truth.means[(i * g + j) * 2 + 1] = (static_cast<double>(j) - half) * spec.spacing;
        }
    double var = spec.mode_std * spec.mode_std;
    truth.covs.assign(k * 4, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        truth.covs[c * 4 + 0] = var;
        truth.covs[c * 4 + 3] = var;
    }

    GmmDraw draw = sample(truth, n, seed);
    GridDataset out;
    out.data.samples = std::move(draw.points);
    out.data.labels = std::move(draw.labels);
    out.truth = std::move(truth);
    return out;
}

Tensor sample_prior(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (n < 1 || m < 1) throw std::invalid_argument("prior: n and latent dim must be >= 1");
    Rng rng(seed);
    Tensor z = Tensor::zeros({n, m});
    for (auto& x : z.data) x = rng.normal();
    return z;
}

namespace {

void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    out.append(buf, res.ptr);
}

}  // namespace

void save_csv(const Tensor& matrix, const std::vector<int>* labels, const std::string& path) {
    if (matrix.rank() != 2)
        throw ShapeError("save_csv: need an (n x d) matrix, got " + matrix.shape_str());
    if (labels && labels->size() != matrix.rows())
        throw ShapeError("save_csv: " + std::to_string(labels->size()) + " labels for " +
                         std::to_string(matrix.rows()) + " rows");

    std::string text;
    for (std::size_t i = 0; i < matrix.cols(); ++i) {
        if (i) text += ',';
        text += "x" + std::to_string(i);
    }
    if (labels) text += ",label";
    text += '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t i = 0; i < matrix.cols(); ++i) {
            if (i) text += ',';
            append_double(text, matrix.at(r, i));
        }
        if (labels) {
            text += ',';
            text += std::to_string((*labels)[r]);
        }
        text += '\n';
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path);
}

CsvData load_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);

    std::string line;
    if (!std::getline(f, line)) throw ParseError(path + ":1: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) header.push_back(field);
    }
    if (header.empty()) throw ParseError(path + ":1: empty header row");
    bool has_labels = header.back() == "label";
    std::size_t d = header.size() - (has_labels ? 1 : 0);
    if (d == 0) throw ParseError(path + ":1: no value columns in header");

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t rows = 0, lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* p = line.data();
        const char* end = p + line.size();
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) {
                if (p >= end || *p != ',')
                    throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(header.size()) +
                                     " columns");
                ++p;
            }
            if (i < d) {
                double v = 0.0;
                auto res = std::from_chars(p, end, v);
                if (res.ec != std::errc())
                    throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": malformed number in column " + std::to_string(i));
                p = res.ptr;
                values.push_back(v);
            } else {
                int lab = 0;
                auto res = std::from_chars(p, end, lab);
                if (res.ec != std::errc())
                    throw ParseError(path + ":" + std::to_string(lineno) +
                                     ": malformed label");
                p = res.ptr;
                labels.push_back(lab);
            }
        }
        if (p != end)
            throw ParseError(path + ":" + std::to_string(lineno) + ": trailing characters");
        ++rows;
    }

    CsvData out;
    out.matrix = Tensor::zeros({rows, d});
    out.matrix.data = std::move(values);
    out.labels = std::move(labels);
    out.has_labels = has_labels;
    return out;
}

}  // namespace gael
