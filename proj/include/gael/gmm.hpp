#pragma once

#include <cstdint>
#include <vector>

#include "gael/rng.hpp"
#include "gael/tensor.hpp"

namespace gael {

enum class CovMode { Full, Diagonal };

// Gaussian mixture: weights pi_k, means mu_k, covariances Sigma_k.
// Full mode stores K d*d row-major matrices; diagonal mode K d-vectors.
struct GmmModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    CovMode cov_mode = CovMode::Full;
    std::vector<double> weights;  // K, positive, sums to 1
    std::vector<double> means;    // K*d
    std::vector<double> covs;     // K*d*d (full) or K*d (diagonal)

    const double* mean(std::size_t comp) const { return means.data() + comp * dim; }
    const double* cov(std::size_t comp) const {
        return covs.data() + comp * (cov_mode == CovMode::Full ? dim * dim : dim);
    }
};

struct GmmFitConfig {
    std::size_t max_iters = 500;
    double tol = 1e-6;  // per-sample log-likelihood improvement threshold
    std::size_t n_restarts = 5;
    std::uint64_t seed = 0;
    CovMode cov_mode = CovMode::Full;
};

struct GmmFitResult {
    GmmModel model;
    double log_likelihood = 0.0;  // total over samples, best restart
    std::vector<double> ll_history;  // per-iteration totals of the best restart
};

// EM with k-means++ mean seeding, global-covariance initialization, uniform
// initial weights; best of n_restarts by final log-likelihood. Components
// whose responsibility mass collapses below 1e-10 are re-seeded at the
// lowest-density sample. Covariance floor: diagonal variances >= 1e-6; full
// matrices have their eigenvalues clipped at 1e-6 after every M-step, which
// both keeps Cholesky viable and preserves the non-decreasing log-likelihood
// guarantee (clipping is the exact floor-constrained M-step maximizer).
GmmFitResult fit_em(const Tensor& data, std::size_t k, const GmmFitConfig& cfg);

// E-step: n x K responsibility matrix, rows summing to 1 (log-sum-exp).
Tensor e_step(const GmmModel& model, const Tensor& data);

// M-step from responsibilities; `prev` supplies structure (K, mode) and the
// rescue rule's fallback covariance.
GmmModel m_step(const Tensor& data, const Tensor& resp, const GmmModel& prev);

// Total log p(data) = sum_b log sum_k pi_k N(x_b; mu_k, Sigma_k).
double log_likelihood(const GmmModel& model, const Tensor& data);

struct GmmDraw {
    Tensor points;            // n x d
    std::vector<int> labels;  // component of each draw
};
GmmDraw sample(const GmmModel& model, std::size_t n, std::uint64_t seed);

// Hard assignment: argmax_k responsibility, ties to the lowest index.
std::vector<int> predict(const GmmModel& model, const Tensor& data);

}  // namespace gael
