#pragma once

#include <cstddef>
#include <vector>

#include "gael/tensor.hpp"

namespace gael {

// Clustering agreement metrics. All three are invariant under relabeling of
// either argument; labels are nonnegative integers.

// Normalized mutual information I(a;b)/sqrt(H(a)*H(b)), natural log.
// Both labelings constant (identical single-cluster partitions) -> 1;
// otherwise a zero entropy on either side -> 0. Result clamped to [0, 1].
double nmi(const std::vector<int>& a, const std::vector<int>& b);

// Adjusted Rand index via pair counting: (Index - Expected)/(Max - Expected).
// When Max == Expected the formula is indeterminate: returns 1 if the two
// labelings are identical up to a permutation of label ids, else 0.
double ari(const std::vector<int>& a, const std::vector<int>& b);

// Minimum-cost assignment on a square cost matrix: result[row] = column.
// Among all minimizing assignments, returns the lexicographically smallest
// permutation (smallest column for row 0, then row 1, ...).
std::vector<std::size_t> hungarian(const Tensor& cost);

// Clustering accuracy: best matching fraction over label permutations,
// found by the assignment solver on the negated contingency table (both
// label sets padded to a common K).
double acc(const std::vector<int>& pred, const std::vector<int>& truth);

// Toy generation-quality summary against known mode centers.
struct ModeMetrics {
    int modes_covered = 0;          // centers with enough nearby samples
    double off_manifold_frac = 0.0; // samples farther than 3*sigma from all centers
};

// A mode counts as covered when at least min_frac * n / K samples lie within
// 3*sigma (Euclidean) of its center.
ModeMetrics mode_metrics(const Tensor& samples, const Tensor& centers, double sigma,
                         double min_frac = 0.2);

}  // namespace gael
