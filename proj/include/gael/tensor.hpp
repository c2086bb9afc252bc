#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace gael {

// Dense row-major tensor of 64-bit reals. The currency of all numerics in
// this library: network activations, parameters, datasets, latents.
// A tensor may carry a gradient buffer of identical shape (allocated lazily
// by the training code, absent otherwise).
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty, or same length as data

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor scalar(double v);
    static Tensor from_rows(std::size_t rows, std::size_t cols, std::vector<double> v);

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    bool is_scalar() const { return shape.empty(); }

    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    double& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

    // Allocates (or re-zeroes) the gradient buffer.
    void zero_grad();
    void ensure_grad();

    bool all_finite() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// Thrown by operations whose input shapes do not conform; message names the
// operation and the offending shapes.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace gael
