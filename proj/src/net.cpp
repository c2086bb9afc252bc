#include "gael/net.hpp"

#include <cmath>
#include <stdexcept>

namespace gael {

MlpLayer init_layer(std::size_t fan_in, std::size_t fan_out, double slope, Rng& rng) {
    MlpLayer l;
    l.w = Tensor::zeros({fan_in, fan_out});
    l.b = Tensor::zeros({fan_out});
    double bound = std::sqrt(6.0 / (static_cast<double>(fan_in) * (1.0 + slope * slope)));
    for (auto& x : l.w.data) x = rng.uniform(-bound, bound);
    l.w.requires_grad = true;
    l.b.requires_grad = true;
    return l;
}

GeneratorNet GeneratorNet::init(const std::vector<std::size_t>& widths, std::uint64_t seed,
                                double slope) {
    if (widths.size() < 2) throw std::invalid_argument("GeneratorNet::init: need >= 2 widths");
    GeneratorNet g;
    g.slope = slope;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
        g.layers.push_back(init_layer(widths[i], widths[i + 1], slope, rng));
    return g;
}

std::vector<Tensor*> GeneratorNet::params() {
    std::vector<Tensor*> ps;
    for (auto& l : layers) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    return ps;
}

void GeneratorNet::set_requires_grad(bool on) {
    for (Tensor* p : params()) p->requires_grad = on;
}

JointCriticNet JointCriticNet::init(const std::vector<std::size_t>& trunk_widths,
                                    std::size_t latent_dim, bool learn_sigma, std::uint64_t seed,
                                    double slope) {
    if (trunk_widths.size() < 2)
        throw std::invalid_argument("JointCriticNet::init: need >= 2 trunk widths");
    JointCriticNet c;
    c.slope = slope;
    c.learn_sigma = learn_sigma;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < trunk_widths.size(); ++i)
        c.trunk.push_back(init_layer(trunk_widths[i], trunk_widths[i + 1], slope, rng));
    std::size_t hidden = trunk_widths.back();
    c.score = init_layer(hidden, 1, slope, rng);
    c.enc_mean = init_layer(hidden, latent_dim, slope, rng);
    if (learn_sigma) c.enc_logvar = init_layer(hidden, latent_dim, slope, rng);
    return c;
}

std::vector<Tensor*> JointCriticNet::params() {
    std::vector<Tensor*> ps;
    for (auto& l : trunk) {
        ps.push_back(&l.w);
        ps.push_back(&l.b);
    }
    ps.push_back(&score.w);
    ps.push_back(&score.b);
    ps.push_back(&enc_mean.w);
    ps.push_back(&enc_mean.b);
    if (learn_sigma) {
        ps.push_back(&enc_logvar.w);
        ps.push_back(&enc_logvar.b);
    }
    return ps;
}

void JointCriticNet::set_requires_grad(bool on) {
    for (Tensor* p : params()) p->requires_grad = on;
}

namespace {

ad::ValueId mlp_forward(ad::Tape& tape, std::vector<MlpLayer>& layers, double slope,
                        ad::ValueId x, bool activate_last) {
    ad::ValueId h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = tape.affine(h, tape.param(layers[i].w), tape.param(layers[i].b));
        if (activate_last || i + 1 < layers.size()) h = tape.leaky_relu(h, slope);
    }
    return h;
}

}  // namespace

ad::ValueId generator_forward(ad::Tape& tape, GeneratorNet& g, ad::ValueId z) {
    if (tape.value(z).rank() != 2 || tape.value(z).cols() != g.latent_dim())
        throw ShapeError("generator_forward: latent batch " + tape.value(z).shape_str() +
                         " does not match latent dim " + std::to_string(g.latent_dim()));
    return mlp_forward(tape, g.layers, g.slope, z, /*activate_last=*/false);
}

CriticForward joint_critic_forward(ad::Tape& tape, JointCriticNet& c, ad::ValueId x,
                                   bool with_encoder) {
    if (tape.value(x).rank() != 2 || tape.value(x).cols() != c.data_dim())
        throw ShapeError("joint_critic_forward: batch " + tape.value(x).shape_str() +
                         " does not match data dim " + std::to_string(c.data_dim()));
    CriticForward out;
    out.trunk_out = mlp_forward(tape, c.trunk, c.slope, x, /*activate_last=*/true);
    out.score = tape.affine(out.trunk_out, tape.param(c.score.w), tape.param(c.score.b));
    out.with_encoder = with_encoder;
    if (with_encoder) {
        out.enc_mean =
            tape.affine(out.trunk_out, tape.param(c.enc_mean.w), tape.param(c.enc_mean.b));
        if (c.learn_sigma) {
            ad::ValueId raw =
                tape.affine(out.trunk_out, tape.param(c.enc_logvar.w), tape.param(c.enc_logvar.b));
            out.enc_logvar = tape.scale(tape.tanh(tape.scale(raw, 0.1)), 10.0);
        } else {
            Tensor zeros = Tensor::zeros({tape.value(x).rows(), c.latent_dim()});
            out.enc_logvar = tape.leaf(zeros, false);
        }
    }
    return out;
}

Tensor generate(GeneratorNet& g, const Tensor& z) {
    ad::Tape tape;
    return tape.value(generator_forward(tape, g, tape.leaf(z)));
}

Tensor critic_score_eval(JointCriticNet& c, const Tensor& x) {
    ad::Tape tape;
    return tape.value(joint_critic_forward(tape, c, tape.leaf(x), false).score);
}

Encoded encode(JointCriticNet& c, const Tensor& x) {
    ad::Tape tape;
    CriticForward f = joint_critic_forward(tape, c, tape.leaf(x), true);
    return {tape.value(f.enc_mean), tape.value(f.enc_logvar)};
}

Tensor reconstruct(GeneratorNet& g, JointCriticNet& c, const Tensor& x) {
    return generate(g, encode(c, x).mean);
}

}  // namespace gael
