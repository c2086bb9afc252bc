// gael — command-line pipeline for adversarial encoder training on the toy
// grid benchmark: synthesize data, train, encode, fit a latent mixture,
// generate, cluster, evaluate mode coverage, and plot.
//
// Exit codes: 0 success, 2 usage error, 3 numeric abort during training,
// 4 I/O or file-format error.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gael/data.hpp"
#include "gael/errors.hpp"
#include "gael/gmm.hpp"
#include "gael/metrics.hpp"
#include "gael/plot.hpp"
#include "gael/serialize.hpp"
#include "gael/trainer.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

using nlohmann::json;

// Replaces the destination only after the full document is on disk, so a
// crash mid-write can never leave a truncated file under the real name.
void write_atomically(const std::string& text, const std::string& path) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw gael::IoError("cannot open for writing: " + tmp);
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        f.flush();
        if (!f) throw gael::IoError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw gael::IoError("cannot move " + tmp + " into place");
}

// "data.csv" -> "data_truth.json": the ground-truth mixture written next to
// a synthesized dataset.
std::string truth_path_for(const std::string& data_path) {
    std::string stem = data_path;
    std::size_t dot = stem.find_last_of('.');
    std::size_t slash = stem.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        stem.resize(dot);
    return stem + "_truth.json";
}

// The flag grammar uses "wgan-gp"; the config files use "wgan_gp". Accept
// either here.
gael::GanKind parse_gan_flag(std::string s) {
    for (char& c : s)
        if (c == '-') c = '_';
    return gael::gan_kind_from_string(s);
}

gael::Tensor load_matrix(const std::string& path) { return gael::load_csv(path).matrix; }

gael::Tensor means_as_tensor(const gael::GmmModel& m) {
    gael::Tensor t = gael::Tensor::zeros({m.k, m.dim});
    t.data = m.means;
    return t;
}

// Mode width for coverage metrics: the toy mixtures are isotropic, so the
// first component's leading variance entry is the shared sigma^2.
double sigma_from(const gael::GmmModel& m) {
    if (m.covs.empty()) throw std::invalid_argument("mixture has no covariance entries");
    return std::sqrt(m.covs[0]);
}

struct MakeDataArgs {
    std::size_t grid_side = 5;
    double spacing = 1.0;
    double mode_std = 0.05;
    std::size_t n = 50000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_make_data(const MakeDataArgs& a) {
    gael::ToyGmmSpec spec;
    spec.grid_side = a.grid_side;
    spec.spacing = a.spacing;
    spec.mode_std = a.mode_std;
    gael::GridDataset ds = gael::make_grid_dataset(spec, a.n, a.seed);
    gael::save_csv(ds.data.samples, &ds.data.labels, a.out);
    gael::save_gmm(ds.truth, truth_path_for(a.out));
    std::cout << "wrote " << a.out << " (" << a.n << " samples, "
              << ds.truth.k << " modes) and " << truth_path_for(a.out) << "\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string gan = "wgan-gp";
    double lambda = 10.0;
    std::size_t steps = 30000;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t batch = 256;
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    std::size_t n_critic = 0;
    std::size_t latent_dim = 2;
    std::vector<std::size_t> hidden = {128, 128, 128};
    bool learn_sigma = false;
    bool couple = false;
    double gp_coeff = 10.0;
    std::string eval_gmm;
    double eval_sigma = 0.0;
    bool echo_manifest = false;
};

int run_train(const TrainArgs& a) {
    gael::CsvData csv = gael::load_csv(a.data);
    if (csv.matrix.rows() == 0) throw std::invalid_argument("training data is empty: " + a.data);

    gael::TrainConfig cfg;
    cfg.gan_kind = parse_gan_flag(a.gan);
    cfg.lambda = a.lambda;
    cfg.learn_sigma = a.learn_sigma;
    cfg.couple_generator_to_encoder_loss = a.couple;
    cfg.latent_dim = a.latent_dim;
    cfg.data_dim = csv.matrix.cols();
    cfg.hidden = a.hidden;
    cfg.batch_size = a.batch;
    cfg.n_critic = a.n_critic;
    cfg.total_steps = a.steps;
    cfg.lr = a.lr;
    cfg.beta1 = a.beta1;
    cfg.beta2 = a.beta2;
    cfg.gp_coefficient = a.gp_coeff;
    cfg.seed = a.seed;

    gael::Tensor eval_centers;
    double eval_sigma = 0.05;
    if (!a.eval_gmm.empty()) {
        gael::GmmModel truth = gael::load_gmm(a.eval_gmm);
        eval_centers = means_as_tensor(truth);
        eval_sigma = a.eval_sigma > 0.0 ? a.eval_sigma : sigma_from(truth);
    }

    std::error_code dir_err;
    std::filesystem::create_directories(a.out_dir, dir_err);
    if (dir_err)
        throw gael::IoError("cannot create output directory " + a.out_dir + ": " +
                            dir_err.message());

    std::string ckpt_path = a.out_dir + "/checkpoint.json";
    std::string metrics_path = a.out_dir + "/metrics.csv";
    std::string manifest_path = a.out_dir + "/manifest.json";

    gael::GaelTrainer trainer(cfg, csv.matrix, eval_centers, eval_sigma);
    trainer.run();
    gael::save_checkpoint(trainer.checkpoint(), ckpt_path);
    gael::write_metric_csv(trainer.log(), metrics_path);

    json manifest{{"tool_version", kToolVersion},
                  {"command", "train"},
                  {"dataset", a.data},
                  {"checkpoint", ckpt_path},
                  {"metrics", metrics_path},
                  {"config",
                   {{"gan_kind", gael::to_string(cfg.gan_kind)},
                    {"lambda", cfg.lambda},
                    {"learn_sigma", cfg.learn_sigma},
                    {"couple_generator_to_encoder_loss", cfg.couple_generator_to_encoder_loss},
                    {"latent_dim", cfg.latent_dim},
                    {"data_dim", cfg.data_dim},
                    {"hidden", cfg.hidden},
                    {"batch_size", cfg.batch_size},
                    {"n_critic", cfg.n_critic},
                    {"effective_n_critic", cfg.effective_n_critic()},
                    {"total_steps", cfg.total_steps},
                    {"lr", cfg.lr},
                    {"beta1", cfg.beta1},
                    {"beta2", cfg.beta2},
                    {"gp_coefficient", cfg.gp_coefficient},
                    {"seed", cfg.seed}}}};
    if (!a.eval_gmm.empty()) {
        manifest["eval_gmm"] = a.eval_gmm;
        manifest["eval_sigma"] = eval_sigma;
    }
    std::string text = manifest.dump(2) + "\n";
    write_atomically(text, manifest_path);
    if (a.echo_manifest) std::cout << text;

    const gael::MetricRow& last = trainer.log().back();
    std::cout << "trained " << cfg.total_steps << " steps; final adv=" << last.adv
              << " enc=" << last.enc << " gp=" << last.gp << "\n";
    return 0;
}

struct EncodeArgs {
    std::string ckpt, data, out;
};

int run_encode(const EncodeArgs& a) {
    gael::Checkpoint ck = gael::load_checkpoint(a.ckpt);
    gael::Tensor data = load_matrix(a.data);
    gael::Tensor latents = gael::encode_dataset(ck.critic, data);
    gael::save_csv(latents, nullptr, a.out);
    std::cout << "encoded " << latents.rows() << " rows -> " << a.out << "\n";
    return 0;
}

struct FitGmmArgs {
    std::string latents;
    std::size_t k = 25;
    std::uint64_t seed = 0;
    std::string out;
    std::string cov = "full";
    std::size_t restarts = 5;
    std::size_t max_iters = 500;
    double tol = 1e-6;
};

int run_fit_gmm(const FitGmmArgs& a) {
    gael::Tensor latents = load_matrix(a.latents);
    gael::GmmFitConfig cfg;
    cfg.seed = a.seed;
    cfg.cov_mode = gael::cov_mode_from_string(a.cov);
    cfg.n_restarts = a.restarts;
    cfg.max_iters = a.max_iters;
    cfg.tol = a.tol;
    gael::GmmFitResult fit = gael::fit_em(latents, a.k, cfg);
    gael::save_gmm(fit.model, a.out);
    std::cout << "fitted " << a.k << "-component mixture; log-likelihood "
              << fit.log_likelihood << " -> " << a.out << "\n";
    return 0;
}

struct GenerateArgs {
    std::string ckpt;
    std::string gmm;
    bool prior = false;
    std::size_t n = 5000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_generate(const GenerateArgs& a) {
    gael::Checkpoint ck = gael::load_checkpoint(a.ckpt);
    gael::Tensor samples;
    if (a.prior) {
        samples = gael::generate_from_prior(ck.gen, a.n, a.seed);
    } else {
        gael::GmmModel latent_gmm = gael::load_gmm(a.gmm);
        samples = gael::generate_from_gmm(ck.gen, latent_gmm, a.n, a.seed);
    }
    gael::save_csv(samples, nullptr, a.out);
    std::cout << "generated " << a.n << " samples ("
              << (a.prior ? "prior latents" : "mixture latents") << ") -> " << a.out << "\n";
    return 0;
}

struct ClusterArgs {
    std::string gmm, latents, labels, report;
};

int run_cluster(const ClusterArgs& a) {
    gael::GmmModel gmm = gael::load_gmm(a.gmm);
    gael::Tensor latents = load_matrix(a.latents);
    gael::CsvData labeled = gael::load_csv(a.labels);
    if (!labeled.has_labels)
        throw std::invalid_argument("label file has no label column: " + a.labels);
    if (labeled.labels.size() != latents.rows())
        throw std::invalid_argument("label count does not match latent row count");

    std::vector<int> pred = gael::predict(gmm, latents);
    double nmi_v = gael::nmi(pred, labeled.labels);
    double ari_v = gael::ari(pred, labeled.labels);
    double acc_v = gael::acc(pred, labeled.labels);

    json report{{"tool_version", kToolVersion},
                {"n", latents.rows()},
                {"k", gmm.k},
                {"nmi", nmi_v},
                {"ari", ari_v},
                {"acc", acc_v}};
    write_atomically(report.dump(2) + "\n", a.report);
    std::cout << "nmi=" << nmi_v << " ari=" << ari_v << " acc=" << acc_v << " -> " << a.report
              << "\n";
    return 0;
}

struct EvalArgs {
    std::string samples, truth_gmm, report;
    double sigma = 0.0;  // 0 = derive from the truth mixture
    double min_frac = 0.2;
};

int run_eval(const EvalArgs& a) {
    gael::Tensor samples = load_matrix(a.samples);
    gael::GmmModel truth = gael::load_gmm(a.truth_gmm);
    double sigma = a.sigma > 0.0 ? a.sigma : sigma_from(truth);
    gael::ModeMetrics mm =
        gael::mode_metrics(samples, means_as_tensor(truth), sigma, a.min_frac);

    json report{{"tool_version", kToolVersion},
                {"n", samples.rows()},
                {"n_modes", truth.k},
                {"sigma", sigma},
                {"min_frac", a.min_frac},
                {"modes_covered", mm.modes_covered},
                {"off_manifold_frac", mm.off_manifold_frac}};
    write_atomically(report.dump(2) + "\n", a.report);
    std::cout << "modes_covered=" << mm.modes_covered << "/" << truth.k
              << " off_manifold_frac=" << mm.off_manifold_frac << " -> " << a.report << "\n";
    return 0;
}

struct PlotArgs {
    std::string points, centers, out;
};

int run_plot(const PlotArgs& a) {
    gael::Tensor pts = load_matrix(a.points);
    gael::Tensor ctr;
    if (!a.centers.empty()) ctr = means_as_tensor(gael::load_gmm(a.centers));
    gael::save_scatter_svg(pts, ctr, a.out);
    std::cout << "plotted " << (pts.numel() == 0 ? 0 : pts.rows()) << " points -> " << a.out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial encoder training pipeline (toy grid benchmark)"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    MakeDataArgs mk;
    CLI::App* c_mk = app.add_subcommand("make-data", "Synthesize the grid-of-Gaussians dataset");
    c_mk->add_option("--grid-side", mk.grid_side, "Modes per axis")->capture_default_str();
    c_mk->add_option("--spacing", mk.spacing, "Distance between adjacent modes")
        ->capture_default_str();
    c_mk->add_option("--std", mk.mode_std, "Per-mode standard deviation")->capture_default_str();
    c_mk->add_option("--n", mk.n, "Number of samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_mk->add_option("--seed", mk.seed, "Sampling seed")->capture_default_str();
    c_mk->add_option("--out", mk.out, "Output CSV (ground truth goes to <out>_truth.json)")
        ->required();

    TrainArgs tr;
    CLI::App* c_tr = app.add_subcommand("train", "Train the generator/critic/encoder");
    c_tr->add_option("--data", tr.data, "Training CSV")->required();
    c_tr->add_option("--gan", tr.gan, "Objective: wgan-gp or vanilla")->capture_default_str();
    c_tr->add_option("--lambda", tr.lambda, "Encoder-loss weight")->capture_default_str();
    c_tr->add_option("--steps", tr.steps, "Generator steps")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_tr->add_option("--seed", tr.seed, "Training seed")->capture_default_str();
    c_tr->add_option("--out-dir", tr.out_dir, "Directory for checkpoint/metrics/manifest")
        ->required();
    c_tr->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
    c_tr->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    c_tr->add_option("--beta1", tr.beta1, "Adam beta1")->capture_default_str();
    c_tr->add_option("--beta2", tr.beta2, "Adam beta2")->capture_default_str();
    c_tr->add_option("--n-critic", tr.n_critic,
                     "Critic updates per generator update (0 = objective default)")
        ->capture_default_str();
    c_tr->add_option("--latent-dim", tr.latent_dim, "Latent dimension")->capture_default_str();
    c_tr->add_option("--hidden", tr.hidden, "Hidden widths")->capture_default_str();
    c_tr->add_flag("--learn-sigma", tr.learn_sigma, "Train the encoder log-variance head");
    c_tr->add_flag("--couple-encoder", tr.couple,
                   "Add the encoder loss to the generator objective too");
    c_tr->add_option("--gp-coeff", tr.gp_coeff, "Gradient-penalty coefficient")
        ->capture_default_str();
    c_tr->add_option("--eval-gmm", tr.eval_gmm,
                     "Truth mixture JSON enabling periodic mode-coverage logging");
    c_tr->add_option("--eval-sigma", tr.eval_sigma,
                     "Mode radius for coverage logging (default: from --eval-gmm)");
    c_tr->add_flag("--manifest", tr.echo_manifest, "Echo the resolved manifest to stdout");

    EncodeArgs en;
    CLI::App* c_en = app.add_subcommand("encode", "Encode a dataset to latent means");
    c_en->add_option("--ckpt", en.ckpt, "Checkpoint JSON")->required();
    c_en->add_option("--data", en.data, "Input CSV")->required();
    c_en->add_option("--out", en.out, "Output latent CSV")->required();

    FitGmmArgs fg;
    CLI::App* c_fg = app.add_subcommand("fit-gmm", "Fit a mixture to encoded latents");
    c_fg->add_option("--latents", fg.latents, "Latent CSV")->required();
    c_fg->add_option("--k", fg.k, "Number of components")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_fg->add_option("--seed", fg.seed, "Fitting seed")->capture_default_str();
    c_fg->add_option("--out", fg.out, "Output mixture JSON")->required();
    c_fg->add_option("--cov", fg.cov, "Covariance mode: full or diagonal")
        ->capture_default_str();
    c_fg->add_option("--restarts", fg.restarts, "Random restarts")->capture_default_str();
    c_fg->add_option("--max-iters", fg.max_iters, "Iteration cap per restart")
        ->capture_default_str();
    c_fg->add_option("--tol", fg.tol, "Per-sample log-likelihood tolerance")
        ->capture_default_str();

    GenerateArgs gn;
    CLI::App* c_gn = app.add_subcommand("generate", "Sample the generator");
    c_gn->add_option("--ckpt", gn.ckpt, "Checkpoint JSON")->required();
    CLI::Option* o_gmm =
        c_gn->add_option("--gmm", gn.gmm, "Latent mixture JSON to draw latents from");
    CLI::Option* o_prior = c_gn->add_flag("--prior", gn.prior, "Draw latents from N(0, I)");
    o_gmm->excludes(o_prior);
    o_prior->excludes(o_gmm);
    c_gn->add_option("--n", gn.n, "Number of samples")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_gn->add_option("--seed", gn.seed, "Sampling seed")->capture_default_str();
    c_gn->add_option("--out", gn.out, "Output CSV")->required();

    ClusterArgs cl;
    CLI::App* c_cl = app.add_subcommand("cluster", "Assign latents to mixture components");
    c_cl->add_option("--gmm", cl.gmm, "Fitted mixture JSON")->required();
    c_cl->add_option("--latents", cl.latents, "Latent CSV")->required();
    c_cl->add_option("--labels", cl.labels, "CSV with the true label column")->required();
    c_cl->add_option("--report", cl.report, "Output report JSON (nmi/ari/acc)")->required();

    EvalArgs ev;
    CLI::App* c_ev = app.add_subcommand("eval", "Mode coverage of generated samples");
    c_ev->add_option("--samples", ev.samples, "Sample CSV")->required();
    c_ev->add_option("--truth-gmm", ev.truth_gmm, "Ground-truth mixture JSON")->required();
    c_ev->add_option("--report", ev.report, "Output report JSON")->required();
    c_ev->add_option("--sigma", ev.sigma, "Mode radius (default: from the truth mixture)");
    c_ev->add_option("--min-frac", ev.min_frac, "Coverage threshold as a fraction of n/K")
        ->capture_default_str();

    PlotArgs pl;
    CLI::App* c_pl = app.add_subcommand("plot", "SVG scatter of 2D points");
    c_pl->add_option("--points", pl.points, "Point CSV")->required();
    c_pl->add_option("--centers", pl.centers, "Mixture JSON whose means are drawn as crosses");
    c_pl->add_option("--out", pl.out, "Output SVG")->required();

    try {
        app.parse(argc, argv);
        if (c_mk->parsed()) return run_make_data(mk);
        if (c_tr->parsed()) return run_train(tr);
        if (c_en->parsed()) return run_encode(en);
        if (c_fg->parsed()) return run_fit_gmm(fg);
        if (c_gn->parsed()) {
            if (!gn.prior && gn.gmm.empty())
                throw CLI::RequiredError("generate: one of --prior/--gmm");
            return run_generate(gn);
        }
        if (c_cl->parsed()) return run_cluster(cl);
        if (c_ev->parsed()) return run_eval(ev);
        if (c_pl->parsed()) return run_plot(pl);
        return 2;  // unreachable with require_subcommand(1)
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const gael::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 3;
    } catch (const gael::IoError& e) {  // covers file-format errors too
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
