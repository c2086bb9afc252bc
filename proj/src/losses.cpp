#include "gael/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace gael {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

ad::ValueId encoder_nll(ad::Tape& t, ad::ValueId z, ad::ValueId enc_mean,
                        ad::ValueId enc_logvar) {
    const Tensor& zv = t.value(z);
    if (!zv.same_shape(t.value(enc_mean)) || !zv.same_shape(t.value(enc_logvar)))
        throw ShapeError("encoder_nll: z " + zv.shape_str() + ", enc_mean " +
                         t.value(enc_mean).shape_str() + ", logvar " +
                         t.value(enc_logvar).shape_str() + " must agree");
    double batch = static_cast<double>(zv.rows());
    double m = static_cast<double>(zv.cols());

    ad::ValueId diff = t.sub(z, enc_mean);
    ad::ValueId weighted = t.mul(t.square(diff), t.exp(t.scale(enc_logvar, -1.0)));
    ad::ValueId per_batch = t.add(t.sum(enc_logvar), t.sum(weighted));
    ad::ValueId half_mean = t.scale(per_batch, 0.5 / batch);
    return t.add(t.leaf(Tensor::scalar(0.5 * m * kLog2Pi)), half_mean);
}

ad::ValueId vanilla_d_loss(ad::Tape& t, ad::ValueId real_scores, ad::ValueId fake_scores) {
    ad::ValueId real_term = t.mean(t.softplus(t.scale(real_scores, -1.0)));
    ad::ValueId fake_term = t.mean(t.softplus(fake_scores));
    return t.add(real_term, fake_term);
}

ad::ValueId vanilla_g_loss(ad::Tape& t, ad::ValueId fake_scores, GanGenMode mode) {
    if (mode == GanGenMode::Minimax) return t.scale(t.mean(t.softplus(fake_scores)), -1.0);
    return t.mean(t.softplus(t.scale(fake_scores, -1.0)));
}

ad::ValueId wgan_critic_loss(ad::Tape& t, ad::ValueId real_scores, ad::ValueId fake_scores) {
    return t.sub(t.mean(fake_scores), t.mean(real_scores));
}

ad::ValueId wgan_gen_loss(ad::Tape& t, ad::ValueId fake_scores) {
    return t.scale(t.mean(fake_scores), -1.0);
}

LossBreakdown gael_objective(double adversarial, double encoder, double penalty, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("gael_objective: lambda must be >= 0");
    LossBreakdown b;
    b.adversarial_term = adversarial;
    b.encoder_term = encoder;
    b.penalty_term = penalty;
    b.total = adversarial + lambda * encoder + penalty;
    return b;
}

}  // namespace gael
