#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gael/adam.hpp"
#include "gael/errors.hpp"
#include "gael/gmm.hpp"
#include "gael/losses.hpp"
#include "gael/net.hpp"
#include "gael/rng.hpp"
#include "gael/tensor.hpp"

namespace gael {

enum class GanKind { Vanilla, WganGp };

struct TrainConfig {
    GanKind gan_kind = GanKind::WganGp;
    double lambda = 10.0;  // encoder-loss weight in the joint critic objective
    bool learn_sigma = false;
    bool couple_generator_to_encoder_loss = false;
    std::size_t latent_dim = 2;
    std::size_t data_dim = 2;
    std::vector<std::size_t> hidden = {128, 128, 128};  // generator and trunk widths
    std::size_t batch_size = 256;
    std::size_t n_critic = 0;  // 0 = by gan kind: 5 for wgan_gp, 1 for vanilla
    std::size_t total_steps = 30000;
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double gp_coefficient = 10.0;
    std::uint64_t seed = 0;

    std::size_t effective_n_critic() const {
        if (n_critic != 0) return n_critic;
        return gan_kind == GanKind::WganGp ? 5 : 1;
    }
    void validate() const;  // throws std::invalid_argument
};

// One optimizer's persistent state, attach-order slots.
struct AdamSnapshot {
    std::uint64_t steps = 0;
    std::vector<std::vector<double>> m, v;
};

// Everything needed to continue a run bit-for-bit.
struct Checkpoint {
    int format_version = 1;
    std::size_t step = 0;
    TrainConfig config;
    GeneratorNet gen;
    JointCriticNet critic;
    AdamSnapshot opt_gen, opt_critic;
    std::string rng_state;  // master stream position
};

// One row of the training log. Mode metrics are sampled every 100 steps
// (when evaluation centers were provided); -1 marks an unsampled cell.
struct MetricRow {
    std::size_t step = 0;
    double adv = 0.0;
    double enc = 0.0;
    double gp = 0.0;
    int modes_covered = -1;
    double off_manifold_frac = -1.0;
};

void write_metric_csv(const std::vector<MetricRow>& log, const std::string& path);

// The training loop. Per step: effective_n_critic() critic/encoder updates
// (real batch + prior latents; the fake batch enters as a constant so no
// gradient reaches the generator), then one generator update (critic
// parameters frozen so only the generator moves). The encoder NLL term sees
// exclusively generated samples; a counter records any real sample that
// would ever reach it.
class GaelTrainer {
public:
    // eval_centers (K x d) and eval_sigma drive the periodic mode-coverage
    // snapshot; pass an empty tensor to skip those columns.
    GaelTrainer(const TrainConfig& cfg, Tensor data, Tensor eval_centers = Tensor(),
                double eval_sigma = 0.05);
    static GaelTrainer resume(const Checkpoint& ck, Tensor data, Tensor eval_centers = Tensor(),
                              double eval_sigma = 0.05);

    // The optimizers hold pointers into the network parameters, so a trainer
    // must never be relocated. resume() still works: its return value is
    // constructed directly in the caller's storage.
    GaelTrainer(const GaelTrainer&) = delete;
    GaelTrainer& operator=(const GaelTrainer&) = delete;

    void step();  // one full step; throws NumericError on non-finite loss
    void run();   // steps until config.total_steps

    // Exposed individually for the gradient-isolation contracts.
    LossBreakdown critic_update();
    double generator_update();

    Checkpoint checkpoint() const;
    const std::vector<MetricRow>& log() const { return log_; }
    std::size_t current_step() const { return step_; }
    GeneratorNet& generator() { return gen_; }
    JointCriticNet& critic() { return critic_; }

    // Real samples that entered the encoder loss so far; stays 0 by design.
    std::uint64_t real_samples_in_encoder_loss() const { return real_in_encoder_; }

private:
    TrainConfig cfg_;
    Tensor data_;
    Tensor eval_centers_;
    double eval_sigma_;
    GeneratorNet gen_;
    JointCriticNet critic_;
    Adam opt_gen_;
    Adam opt_critic_;
    Rng rng_;
    std::size_t step_ = 0;
    std::uint64_t real_in_encoder_ = 0;
    std::vector<MetricRow> log_;

    GaelTrainer(const Checkpoint& ck, Tensor data, Tensor eval_centers, double eval_sigma);

    Tensor draw_real_batch();
    Tensor draw_latents();
    ad::ValueId encoder_term(ad::Tape& tape, const Tensor& z, ad::ValueId enc_mean,
                             ad::ValueId enc_logvar, bool input_is_real, std::size_t batch);
    void check_finite(double v, const char* component) const;
};

// enc_mean of every row, evaluated in batches; row order preserved and the
// result is independent of the batch size.
Tensor encode_dataset(JointCriticNet& critic, const Tensor& data, std::size_t batch = 1024);

// Generator outputs on latents from the standard normal prior / a fitted
// latent mixture.
Tensor generate_from_prior(GeneratorNet& gen, std::size_t n, std::uint64_t seed);
Tensor generate_from_gmm(GeneratorNet& gen, const GmmModel& latent_gmm, std::size_t n,
                         std::uint64_t seed);

}  // namespace gael
