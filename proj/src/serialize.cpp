#include "gael/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gael {

using nlohmann::json;

std::string to_string(GanKind kind) {
    return kind == GanKind::WganGp ? "wgan_gp" : "vanilla";
}

GanKind gan_kind_from_string(const std::string& s) {
    if (s == "wgan_gp") return GanKind::WganGp;
    if (s == "vanilla") return GanKind::Vanilla;
    throw std::invalid_argument("unknown gan kind '" + s + "' (expected wgan_gp or vanilla)");
}

std::string to_string(CovMode mode) {
    return mode == CovMode::Full ? "full" : "diagonal";
}

CovMode cov_mode_from_string(const std::string& s) {
    if (s == "full") return CovMode::Full;
    if (s == "diagonal") return CovMode::Diagonal;
    throw std::invalid_argument("unknown covariance mode '" + s +
                                "' (expected full or diagonal)");
}

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    if (f.bad()) throw IoError("read failed: " + path);
    return buf.str();
}

void spill(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw IoError("write failed: " + path);
}

json parse_file(const std::string& path) {
    std::string text = slurp(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void check_version(const json& j) {
    int v = j.at("format_version").get<int>();
    if (v != 1)
        throw std::invalid_argument("unsupported format version " + std::to_string(v));
}

json tensor_to_json(const Tensor& t) {
    return json{{"shape", t.shape}, {"data", t.data}};
}

Tensor tensor_from_json(const json& j) {
    Tensor t;
    t.shape = j.at("shape").get<std::vector<std::size_t>>();
    t.data = j.at("data").get<std::vector<double>>();
    std::size_t expect = t.shape.empty() && t.data.empty() ? 0 : 1;
    for (std::size_t s : t.shape) expect *= s;
    if (t.data.size() != expect)
        throw std::invalid_argument("tensor data length does not match its shape");
    return t;
}

json layer_to_json(const MlpLayer& l) {
    return json{{"w", tensor_to_json(l.w)}, {"b", tensor_to_json(l.b)}};
}

MlpLayer layer_from_json(const json& j) {
    MlpLayer l;
    l.w = tensor_from_json(j.at("w"));
    l.b = tensor_from_json(j.at("b"));
    return l;
}

json generator_to_json(const GeneratorNet& g) {
    json layers = json::array();
    for (const MlpLayer& l : g.layers) layers.push_back(layer_to_json(l));
    return json{{"slope", g.slope}, {"layers", std::move(layers)}};
}

GeneratorNet generator_from_json(const json& j) {
    GeneratorNet g;
    g.slope = j.at("slope").get<double>();
    for (const json& l : j.at("layers")) g.layers.push_back(layer_from_json(l));
    return g;
}

json critic_to_json(const JointCriticNet& c) {
    json trunk = json::array();
    for (const MlpLayer& l : c.trunk) trunk.push_back(layer_to_json(l));
    return json{{"trunk", std::move(trunk)},
                {"score", layer_to_json(c.score)},
                {"enc_mean", layer_to_json(c.enc_mean)},
                {"enc_logvar", layer_to_json(c.enc_logvar)},
                {"learn_sigma", c.learn_sigma},
                {"slope", c.slope}};
}

JointCriticNet critic_from_json(const json& j) {
    JointCriticNet c;
    for (const json& l : j.at("trunk")) c.trunk.push_back(layer_from_json(l));
    c.score = layer_from_json(j.at("score"));
    c.enc_mean = layer_from_json(j.at("enc_mean"));
    c.enc_logvar = layer_from_json(j.at("enc_logvar"));
    c.learn_sigma = j.at("learn_sigma").get<bool>();
    c.slope = j.at("slope").get<double>();
    return c;
}

json config_to_json(const TrainConfig& c) {
    return json{{"gan_kind", to_string(c.gan_kind)},
                {"lambda", c.lambda},
                {"learn_sigma", c.learn_sigma},
                {"couple_generator_to_encoder_loss", c.couple_generator_to_encoder_loss},
                {"latent_dim", c.latent_dim},
                {"data_dim", c.data_dim},
                {"hidden", c.hidden},
                {"batch_size", c.batch_size},
                {"n_critic", c.n_critic},
                {"total_steps", c.total_steps},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"gp_coefficient", c.gp_coefficient},
                {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.gan_kind = gan_kind_from_string(j.at("gan_kind").get<std::string>());
    c.lambda = j.at("lambda").get<double>();
    c.learn_sigma = j.at("learn_sigma").get<bool>();
    c.couple_generator_to_encoder_loss = j.at("couple_generator_to_encoder_loss").get<bool>();
    c.latent_dim = j.at("latent_dim").get<std::size_t>();
    c.data_dim = j.at("data_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.n_critic = j.at("n_critic").get<std::size_t>();
    c.total_steps = j.at("total_steps").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.gp_coefficient = j.at("gp_coefficient").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

json adam_to_json(const AdamSnapshot& s) {
    return json{{"steps", s.steps}, {"m", s.m}, {"v", s.v}};
}

AdamSnapshot adam_from_json(const json& j) {
    AdamSnapshot s;
    s.steps = j.at("steps").get<std::uint64_t>();
    s.m = j.at("m").get<std::vector<std::vector<double>>>();
    s.v = j.at("v").get<std::vector<std::vector<double>>>();
    return s;
}

}  // namespace

void save_gmm(const GmmModel& model, const std::string& path) {
    json j{{"format_version", 1},
           {"k", model.k},
           {"dim", model.dim},
           {"covariance_mode", to_string(model.cov_mode)},
           {"weights", model.weights},
           {"means", model.means},
           {"covariances", model.covs}};
    spill(j.dump(2) + "\n", path);
}

GmmModel load_gmm(const std::string& path) {
    json j = parse_file(path);
    try {
        check_version(j);
        GmmModel m;
        m.k = j.at("k").get<std::size_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.cov_mode = cov_mode_from_string(j.at("covariance_mode").get<std::string>());
        m.weights = j.at("weights").get<std::vector<double>>();
        m.means = j.at("means").get<std::vector<double>>();
        m.covs = j.at("covariances").get<std::vector<double>>();
        std::size_t cov_len = m.k * m.dim * (m.cov_mode == CovMode::Full ? m.dim : 1);
        if (m.weights.size() != m.k || m.means.size() != m.k * m.dim ||
            m.covs.size() != cov_len)
            throw std::invalid_argument("mixture array sizes do not match k and dim");
        return m;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
    json j{{"format_version", ck.format_version},
           {"step", ck.step},
           {"config", config_to_json(ck.config)},
           {"generator", generator_to_json(ck.gen)},
           {"critic", critic_to_json(ck.critic)},
           {"opt_gen", adam_to_json(ck.opt_gen)},
           {"opt_critic", adam_to_json(ck.opt_critic)},
           {"rng_state", ck.rng_state}};
    spill(j.dump() + "\n", path);
}

Checkpoint load_checkpoint(const std::string& path) {
    json j = parse_file(path);
    try {
        check_version(j);
        Checkpoint ck;
        ck.step = j.at("step").get<std::size_t>();
        ck.config = config_from_json(j.at("config"));
        ck.gen = generator_from_json(j.at("generator"));
        ck.critic = critic_from_json(j.at("critic"));
        ck.opt_gen = adam_from_json(j.at("opt_gen"));
        ck.opt_critic = adam_from_json(j.at("opt_critic"));
        ck.rng_state = j.at("rng_state").get<std::string>();
        return ck;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace gael
