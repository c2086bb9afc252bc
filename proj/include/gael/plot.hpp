#pragma once

#include <string>

#include "gael/tensor.hpp"

namespace gael {

// SVG 1.1 scatter plot of 2D points (radius-1.5 circles), optionally
// overlaying a set of centers drawn as crosses. The viewport maps the
// bounding box of everything plotted, padded by 5% per side, onto a fixed
// 640x640 canvas; zero-extent axes are widened symmetrically first so a
// single point still lands mid-canvas. Output is a pure function of the
// inputs — identical tensors give byte-identical SVG. Empty input produces
// an axes-only plot over [-1, 1]^2.
//
// Throws ShapeError unless each non-empty tensor is (n x 2), and
// std::invalid_argument on non-finite coordinates.
std::string render_scatter_svg(const Tensor& points, const Tensor& centers = Tensor());

// render_scatter_svg written to a file; throws IoError on failure.
void save_scatter_svg(const Tensor& points, const Tensor& centers, const std::string& path);

}  // namespace gael
