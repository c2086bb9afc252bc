#pragma once

#include "gael/net.hpp"
#include "gael/rng.hpp"
#include "gael/tensor.hpp"

namespace gael {

// WGAN gradient penalty on real/fake interpolates,
//   mean_b ( || d score / d xhat_b ||_2 - 1 )^2 ,
// computed without higher-order autodiff: the critic's input-gradient has a
// closed form for a leaky-ReLU trunk (a product of weight matrices and
// activation masks), and the penalty's parameter-gradient is obtained by
// differentiating that form directly, holding the masks fixed (they are
// piecewise constant, so their derivative vanishes almost everywhere).
// Penalty gradients touch only trunk weights and the score-head weight;
// biases and the score-head offset cancel out of the input-gradient.

// Per-sample mixing coefficients t ~ U(0,1); xhat = t*real + (1-t)*fake.
Tensor draw_interpolation_coeffs(Rng& rng, std::size_t batch);
Tensor interpolate(const Tensor& real, const Tensor& fake, const Tensor& t);

// Penalty value only.
double gradient_penalty_value(JointCriticNet& c, const Tensor& xhat);

// Penalty value, also accumulating coeff * d(penalty)/d(weights) into the
// critic parameter .grad buffers (allocating them as needed).
double gradient_penalty_backward(JointCriticNet& c, const Tensor& xhat, double coeff);

}  // namespace gael
