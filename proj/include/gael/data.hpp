#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gael/errors.hpp"
#include "gael/gmm.hpp"
#include "gael/tensor.hpp"

namespace gael {

// Parameters of the toy 2D grid mixture: grid_side^2 isotropic Gaussian
// modes on a square lattice centered at the origin.
struct ToyGmmSpec {
    std::size_t grid_side = 5;
    double spacing = 1.0;
    double mode_std = 0.05;
};

struct LabeledDataset {
    Tensor samples;           // n x d
    std::vector<int> labels;  // generating component per sample
};

struct GridDataset {
    LabeledDataset data;
    GmmModel truth;  // the ground-truth mixture the samples were drawn from
};

// Draws n samples from the grid mixture; component order is row-major over
// the lattice, centers at (i - (g-1)/2) * spacing per axis.
GridDataset make_grid_dataset(const ToyGmmSpec& spec, std::size_t n, std::uint64_t seed);

// n x m matrix of i.i.d. standard normals (the generator's latent prior).
Tensor sample_prior(std::size_t n, std::size_t m, std::uint64_t seed);

// CSV persistence: header "x0,...,x{d-1}[,label]", one sample per row,
// shortest round-trippable decimal floats (load returns bit-identical
// values). Pass labels = nullptr to omit the label column.
void save_csv(const Tensor& matrix, const std::vector<int>* labels, const std::string& path);

struct CsvData {
    Tensor matrix;
    std::vector<int> labels;  // empty when has_labels is false
    bool has_labels = false;
};
CsvData load_csv(const std::string& path);

}  // namespace gael
