#include "gael/tensor.hpp"

#include <cmath>
#include <utility>

namespace gael {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    s += ")";
    return s;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(shape_numel(t.shape), 0.0);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data.assign(1, v);
    return t;
}

Tensor Tensor::from_rows(std::size_t rows, std::size_t cols, std::vector<double> v) {
    if (v.size() != rows * cols)
        throw ShapeError("from_rows: " + std::to_string(v.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(v);
    return t;
}

void Tensor::zero_grad() { grad.assign(data.size(), 0.0); }

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

}  // namespace gael
