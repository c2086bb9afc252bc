#pragma once

#include <cstdint>
#include <vector>

#include "gael/autodiff.hpp"
#include "gael/rng.hpp"
#include "gael/tensor.hpp"

namespace gael {

// One fully-connected layer. Weights are stored input-major (in x out) so a
// batch forward is a single X*W + b.
struct MlpLayer {
    Tensor w;  // (in x out)
    Tensor b;  // (out)
};

// Draws layer weights uniformly in [-bound, bound] with
// bound = sqrt(6 / (fan_in * (1 + slope^2))) — the He rule adjusted for the
// leaky-ReLU gain — and zero biases. Consumes rng in a fixed order.
MlpLayer init_layer(std::size_t fan_in, std::size_t fan_out, double slope, Rng& rng);

// Latent -> data MLP: widths.front() = M, widths.back() = D_x, leaky-ReLU
// between layers, linear output.
struct GeneratorNet {
    std::vector<MlpLayer> layers;
    double slope = 0.2;

    static GeneratorNet init(const std::vector<std::size_t>& widths, std::uint64_t seed,
                             double slope = 0.2);
    std::vector<Tensor*> params();
    std::size_t latent_dim() const { return layers.front().w.rows(); }
    std::size_t data_dim() const { return layers.back().w.cols(); }
    void set_requires_grad(bool on);
};

// Critic with a shared trunk: one stack of leaky-ReLU layers feeding three
// single-layer heads — adversarial score (width 1), encoder mean (width M),
// and optionally encoder log-variance (width M). The heads read the same
// trunk activation, so trunk gradients accumulate from every head in use.
struct JointCriticNet {
    std::vector<MlpLayer> trunk;
    MlpLayer score;     // (hidden x 1)
    MlpLayer enc_mean;  // (hidden x M)
    MlpLayer enc_logvar;  // (hidden x M), used only when learn_sigma
    bool learn_sigma = false;
    double slope = 0.2;

    // trunk_widths: D_x -> hidden...; heads branch off trunk_widths.back().
    static JointCriticNet init(const std::vector<std::size_t>& trunk_widths,
                               std::size_t latent_dim, bool learn_sigma, std::uint64_t seed,
                               double slope = 0.2);
    std::vector<Tensor*> params();
    std::size_t data_dim() const { return trunk.front().w.rows(); }
    std::size_t latent_dim() const { return enc_mean.w.cols(); }
    void set_requires_grad(bool on);
};

// Tape forwards ------------------------------------------------------------

ad::ValueId generator_forward(ad::Tape& tape, GeneratorNet& g, ad::ValueId z);

struct CriticForward {
    ad::ValueId trunk_out;
    ad::ValueId score;       // (B x 1) raw, unsquashed
    ad::ValueId enc_mean;    // (B x M), valid when with_encoder
    ad::ValueId enc_logvar;  // (B x M), valid when with_encoder; all-zero
                             // constant leaf unless learn_sigma
    bool with_encoder = false;
};

// Evaluates the trunk once and whichever heads are requested. The raw
// log-variance head output is squashed smoothly into (-10, 10) as
// 10*tanh(raw/10), keeping exp(logvar) finite and the map differentiable.
CriticForward joint_critic_forward(ad::Tape& tape, JointCriticNet& c, ad::ValueId x,
                                   bool with_encoder);

// Inference wrappers (no gradients kept) ------------------------------------

Tensor generate(GeneratorNet& g, const Tensor& z);
Tensor critic_score_eval(JointCriticNet& c, const Tensor& x);

struct Encoded {
    Tensor mean;    // (B x M)
    Tensor logvar;  // (B x M)
};
Encoded encode(JointCriticNet& c, const Tensor& x);

// encode then decode through the generator.
Tensor reconstruct(GeneratorNet& g, JointCriticNet& c, const Tensor& x);

}  // namespace gael
