#include "gael/trainer.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "gael/data.hpp"
#include "gael/grad_penalty.hpp"
#include "gael/metrics.hpp"

namespace gael {

void TrainConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("train config: lambda must be >= 0");
    if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
    if (latent_dim < 1 || data_dim < 1)
        throw std::invalid_argument("train config: dimensions must be >= 1");
    if (hidden.empty()) throw std::invalid_argument("train config: need at least one hidden layer");
    if (total_steps < 1) throw std::invalid_argument("train config: total_steps must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
    if (gp_coefficient < 0.0)
        throw std::invalid_argument("train config: gp_coefficient must be >= 0");
}

namespace {

std::vector<std::size_t> generator_widths(const TrainConfig& cfg) {
    std::vector<std::size_t> w;
    w.push_back(cfg.latent_dim);
    w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
    w.push_back(cfg.data_dim);
    return w;
}

std::vector<std::size_t> trunk_widths(const TrainConfig& cfg) {
    std::vector<std::size_t> w;
    w.push_back(cfg.data_dim);
    w.insert(w.end(), cfg.hidden.begin(), cfg.hidden.end());
    return w;
}

// Restores requires_grad on scope exit so a thrown NumericError cannot leave
// the critic frozen.
struct FreezeCritic {
    JointCriticNet& c;
    explicit FreezeCritic(JointCriticNet& critic) : c(critic) { c.set_requires_grad(false); }
    ~FreezeCritic() { c.set_requires_grad(true); }
};

void copy_params(std::vector<Tensor*> dst, std::vector<Tensor*> src, const char* what) {
    if (dst.size() != src.size())
        throw std::invalid_argument(std::string("checkpoint: ") + what +
                                    " parameter count does not match config");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->shape != src[i]->shape)
            throw std::invalid_argument(std::string("checkpoint: ") + what +
                                        " parameter shape mismatch at slot " + std::to_string(i));
        dst[i]->data = src[i]->data;
    }
}

void append_cell(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

GaelTrainer::GaelTrainer(const TrainConfig& cfg, Tensor data, Tensor eval_centers,
                         double eval_sigma)
    : cfg_(cfg),
      data_(std::move(data)),
      eval_centers_(std::move(eval_centers)),
      eval_sigma_(eval_sigma),
      opt_gen_(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8}),
      opt_critic_(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8}),
      rng_(cfg.seed + 2) {  // net seeds are cfg.seed and cfg.seed + 1
    cfg_.validate();
    if (data_.rank() != 2 || data_.rows() == 0 || data_.cols() != cfg_.data_dim)
        throw ShapeError("trainer: data must be (n x " + std::to_string(cfg_.data_dim) +
                         "), got " + data_.shape_str());
    if (!data_.all_finite()) throw std::invalid_argument("trainer: data contains non-finite values");
    if (eval_centers_.numel() > 0) {
        if (eval_centers_.rank() != 2 || eval_centers_.cols() != cfg_.data_dim)
            throw ShapeError("trainer: eval centers must be (K x " +
                             std::to_string(cfg_.data_dim) + "), got " +
                             eval_centers_.shape_str());
        if (!(eval_sigma_ > 0.0))
            throw std::invalid_argument("trainer: eval sigma must be positive");
    }

    gen_ = GeneratorNet::init(generator_widths(cfg_), cfg_.seed);
    critic_ = JointCriticNet::init(trunk_widths(cfg_), cfg_.latent_dim, cfg_.learn_sigma,
                                   cfg_.seed + 1);
    for (Tensor* p : gen_.params()) opt_gen_.attach(*p);
    for (Tensor* p : critic_.params()) opt_critic_.attach(*p);
}

GaelTrainer::GaelTrainer(const Checkpoint& ck, Tensor data, Tensor eval_centers,
                         double eval_sigma)
    : GaelTrainer(ck.config, std::move(data), std::move(eval_centers), eval_sigma) {
    GeneratorNet src_gen = ck.gen;
    JointCriticNet src_critic = ck.critic;
    copy_params(gen_.params(), src_gen.params(), "generator");
    copy_params(critic_.params(), src_critic.params(), "critic");
    opt_gen_.restore(ck.opt_gen.steps, ck.opt_gen.m, ck.opt_gen.v);
    opt_critic_.restore(ck.opt_critic.steps, ck.opt_critic.m, ck.opt_critic.v);
    rng_.set_state(ck.rng_state);
    step_ = ck.step;
}

GaelTrainer GaelTrainer::resume(const Checkpoint& ck, Tensor data, Tensor eval_centers,
                                double eval_sigma) {
    if (ck.format_version != 1)
        throw std::invalid_argument("checkpoint: unsupported format version " +
                                    std::to_string(ck.format_version));
    return GaelTrainer(ck, std::move(data), std::move(eval_centers), eval_sigma);
}

Tensor GaelTrainer::draw_real_batch() {
    std::size_t b = cfg_.batch_size, n = data_.rows(), d = data_.cols();
    Tensor batch = Tensor::zeros({b, d});
    for (std::size_t r = 0; r < b; ++r) {
        std::size_t src = rng_.index(n);
        for (std::size_t i = 0; i < d; ++i) batch.at(r, i) = data_.at(src, i);
    }
    return batch;
}

Tensor GaelTrainer::draw_latents() {
    Tensor z = Tensor::zeros({cfg_.batch_size, cfg_.latent_dim});
    for (auto& x : z.data) x = rng_.normal();
    return z;
}

ad::ValueId GaelTrainer::encoder_term(ad::Tape& tape, const Tensor& z, ad::ValueId enc_mean,
                                      ad::ValueId enc_logvar, bool input_is_real,
                                      std::size_t batch) {
    // Sole gateway to the encoder loss: the contract is that only generated
    // samples are ever encoded during training, so this counter stays 0.
    if (input_is_real) real_in_encoder_ += batch;
    return encoder_nll(tape, tape.leaf(z), enc_mean, enc_logvar);
}

void GaelTrainer::check_finite(double v, const char* component) const {
    if (!std::isfinite(v))
        throw NumericError("step " + std::to_string(step_ + 1) + ": " + component +
                           " loss is non-finite");
}

LossBreakdown GaelTrainer::critic_update() {
    // Fixed draw order per update: real-batch indices, latents, then (for
    // wgan_gp) the interpolation coefficients.
    Tensor real = draw_real_batch();
    Tensor z = draw_latents();
    Tensor fake = generate(gen_, z);  // plain tensor: no gradient reaches G

    ad::Tape tape;
    ad::ValueId real_id = tape.leaf(real);
    ad::ValueId fake_id = tape.leaf(fake);
    CriticForward on_real = joint_critic_forward(tape, critic_, real_id, false);
    CriticForward on_fake = joint_critic_forward(tape, critic_, fake_id, true);

    ad::ValueId adv = cfg_.gan_kind == GanKind::WganGp
                          ? wgan_critic_loss(tape, on_real.score, on_fake.score)
                          : vanilla_d_loss(tape, on_real.score, on_fake.score);
    ad::ValueId enc =
        encoder_term(tape, z, on_fake.enc_mean, on_fake.enc_logvar, false, cfg_.batch_size);
    ad::ValueId total = tape.add(adv, tape.scale(enc, cfg_.lambda));

    double adv_v = tape.value(adv).data[0];
    double enc_v = tape.value(enc).data[0];
    check_finite(adv_v, "critic adversarial");
    check_finite(enc_v, "encoder");

    for (Tensor* p : critic_.params()) p->zero_grad();
    tape.backward(total);

    double gp_v = 0.0;
    if (cfg_.gan_kind == GanKind::WganGp) {
        Tensor t = draw_interpolation_coeffs(rng_, cfg_.batch_size);
        Tensor xhat = interpolate(real, fake, t);
        gp_v = cfg_.gp_coefficient * gradient_penalty_backward(critic_, xhat, cfg_.gp_coefficient);
        check_finite(gp_v, "gradient penalty");
    }
    opt_critic_.step();
    return gael_objective(adv_v, enc_v, gp_v, cfg_.lambda);
}

double GaelTrainer::generator_update() {
    Tensor z = draw_latents();

    FreezeCritic guard(critic_);  // critic supplies values, not gradients
    ad::Tape tape;
    ad::ValueId z_id = tape.leaf(z);
    ad::ValueId fake = generator_forward(tape, gen_, z_id);
    bool couple = cfg_.couple_generator_to_encoder_loss;
    CriticForward fwd = joint_critic_forward(tape, critic_, fake, couple);

    ad::ValueId loss = cfg_.gan_kind == GanKind::WganGp
                           ? wgan_gen_loss(tape, fwd.score)
                           : vanilla_g_loss(tape, fwd.score, GanGenMode::NonSaturating);
    if (couple) {
        ad::ValueId enc =
            encoder_term(tape, z, fwd.enc_mean, fwd.enc_logvar, false, cfg_.batch_size);
        loss = tape.add(loss, tape.scale(enc, cfg_.lambda));
    }

    double v = tape.value(loss).data[0];
    check_finite(v, "generator");

    for (Tensor* p : gen_.params()) p->zero_grad();
    tape.backward(loss);
    opt_gen_.step();
    return v;
}

void GaelTrainer::step() {
    LossBreakdown last{};
    for (std::size_t i = 0; i < cfg_.effective_n_critic(); ++i) last = critic_update();
    generator_update();
    ++step_;

    MetricRow row;
    row.step = step_;
    row.adv = last.adversarial_term;
    row.enc = last.encoder_term;
    row.gp = last.penalty_term;
    if (eval_centers_.numel() > 0 && step_ % 100 == 0) {
        // Snapshot generation quality on a stream independent of the
        // training RNG, so logging cadence never alters the run.
        Tensor samples =
            generate_from_prior(gen_, 5000, cfg_.seed + 0x9e3779b97f4a7c15ULL * step_);
        ModeMetrics mm = mode_metrics(samples, eval_centers_, eval_sigma_, 0.2);
        row.modes_covered = mm.modes_covered;
        row.off_manifold_frac = mm.off_manifold_frac;
    }
    log_.push_back(row);
}

void GaelTrainer::run() {
    while (step_ < cfg_.total_steps) step();
}

Checkpoint GaelTrainer::checkpoint() const {
    Checkpoint ck;
    ck.step = step_;
    ck.config = cfg_;
    ck.gen = gen_;
    ck.critic = critic_;
    ck.opt_gen.steps = opt_gen_.step_count();
    for (std::size_t s = 0; s < opt_gen_.param_count(); ++s) {
        ck.opt_gen.m.push_back(opt_gen_.moment1(s));
        ck.opt_gen.v.push_back(opt_gen_.moment2(s));
    }
    ck.opt_critic.steps = opt_critic_.step_count();
    for (std::size_t s = 0; s < opt_critic_.param_count(); ++s) {
        ck.opt_critic.m.push_back(opt_critic_.moment1(s));
        ck.opt_critic.v.push_back(opt_critic_.moment2(s));
    }
    ck.rng_state = rng_.state();
    return ck;
}

void write_metric_csv(const std::vector<MetricRow>& log, const std::string& path) {
    std::string text = "step,adv,enc,gp,modes_covered,off_manifold_frac\n";
    for (const MetricRow& r : log) {
        text += std::to_string(r.step);
        text += ',';
        append_cell(text, r.adv);
        text += ',';
        append_cell(text, r.enc);
        text += ',';
        append_cell(text, r.gp);
        text += ',';
        if (r.modes_covered >= 0) {
            text += std::to_string(r.modes_covered);
            text += ',';
            append_cell(text, r.off_manifold_frac);
        } else {
            text += ',';
        }
        text += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path);
}

Tensor encode_dataset(JointCriticNet& critic, const Tensor& data, std::size_t batch) {
    if (data.rank() != 2 || data.cols() != critic.data_dim())
        throw ShapeError("encode_dataset: data " + data.shape_str() + " vs critic input dim " +
                         std::to_string(critic.data_dim()));
    if (batch == 0) throw std::invalid_argument("encode_dataset: batch must be >= 1");
    std::size_t n = data.rows(), d = data.cols(), m = critic.latent_dim();
    Tensor out = Tensor::zeros({n, m});
    for (std::size_t start = 0; start < n; start += batch) {
        std::size_t cnt = std::min(batch, n - start);
        Tensor chunk = Tensor::zeros({cnt, d});
        std::copy(data.data.begin() + static_cast<std::ptrdiff_t>(start * d),
                  data.data.begin() + static_cast<std::ptrdiff_t>((start + cnt) * d),
                  chunk.data.begin());
        Encoded e = encode(critic, chunk);
        std::copy(e.mean.data.begin(), e.mean.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(start * m));
    }
    return out;
}

Tensor generate_from_prior(GeneratorNet& gen, std::size_t n, std::uint64_t seed) {
    Tensor z = sample_prior(n, gen.latent_dim(), seed);
    return generate(gen, z);
}

Tensor generate_from_gmm(GeneratorNet& gen, const GmmModel& latent_gmm, std::size_t n,
                         std::uint64_t seed) {
    if (latent_gmm.dim != gen.latent_dim())
        throw ShapeError("generate: latent mixture dim " + std::to_string(latent_gmm.dim) +
                         " vs generator latent dim " + std::to_string(gen.latent_dim()));
    GmmDraw draw = sample(latent_gmm, n, seed);
    return generate(gen, draw.points);
}

}  // namespace gael
