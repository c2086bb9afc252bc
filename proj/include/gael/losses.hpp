#pragma once

#include "gael/autodiff.hpp"

namespace gael {

// Split of one update's objective. total always carries the invariant
// total = adversarial_term + lambda * encoder_term + penalty_term.
struct LossBreakdown {
    double adversarial_term = 0.0;
    double encoder_term = 0.0;
    double penalty_term = 0.0;
    double total = 0.0;
};

enum class GanGenMode { Minimax, NonSaturating };

// Negative mean log-density of latents z under N(enc_mean, diag(e^logvar)):
//   0.5*M*log(2*pi) + 0.5*mean_b[ sum_i logvar_i + (z_i-mu_i)^2 * e^{-logvar_i} ]
// Minimizing this trains the encoder heads (and, through the trunk, the
// critic body). All three arguments are (B x M) tape values.
ad::ValueId encoder_nll(ad::Tape& tape, ad::ValueId z, ad::ValueId enc_mean,
                        ad::ValueId enc_logvar);

// Cross-entropy discriminator loss on raw scores, in softplus form:
//   mean softplus(-real) + mean softplus(fake)
ad::ValueId vanilla_d_loss(ad::Tape& tape, ad::ValueId real_scores, ad::ValueId fake_scores);

// Generator side: Minimax = -mean softplus(fake) (the true inner objective),
// NonSaturating = mean softplus(-fake) (the standard stronger-gradient form).
ad::ValueId vanilla_g_loss(ad::Tape& tape, ad::ValueId fake_scores, GanGenMode mode);

// Wasserstein losses on raw scores.
ad::ValueId wgan_critic_loss(ad::Tape& tape, ad::ValueId real_scores, ad::ValueId fake_scores);
ad::ValueId wgan_gen_loss(ad::Tape& tape, ad::ValueId fake_scores);

// Assembles the reported breakdown for one update. lambda must be >= 0.
LossBreakdown gael_objective(double adversarial, double encoder, double penalty, double lambda);

}  // namespace gael
