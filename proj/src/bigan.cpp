#include "negm/bigan.hpp"

#include <algorithm>
#include <utility>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "negm/error.hpp"

namespace negm {

namespace {

double softplus(double x) {
    // log(1 + exp(x)) without overflow
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

BiganModel BiganModel::initialized(std::size_t data_dim, std::size_t latent_dim, RngState& rng) {
    if (data_dim < 1 || latent_dim < 1)
        fail(ErrorKind::usage, "bigan: data and latent dimensions must be >= 1");
    BiganModel model;
    model.data_dim_ = data_dim;
    model.latent_dim_ = latent_dim;

    std::vector<LayerSpec> gen{
        {latent_dim, 64, Activation::lrelu, 0.2, false, 0.0},
        {64, 128, Activation::lrelu, 0.2, false, 0.0},
        {128, data_dim, Activation::tanh, 0.2, false, 0.0},
    };
    std::vector<LayerSpec> enc{
        {data_dim, 64, Activation::lrelu, 0.2, false, 0.0},
        {64, latent_dim, Activation::linear, 0.2, false, 0.0},
    };
    std::vector<LayerSpec> dis{
        {data_dim + latent_dim, 128, Activation::lrelu, 0.2, true, 0.5},
        {128, 128, Activation::lrelu, 0.2, true, 0.5},
        {128, 1, Activation::sigmoid, 0.2, false, 0.0},
    };
    model.generator_ = Net::initialized(std::move(gen), rng);
    model.encoder_ = Net::initialized(std::move(enc), rng);
    model.discriminator_ = Net::initialized(std::move(dis), rng);
    return model;
}

Matrix BiganModel::encode(const Matrix& x) const {
    if (x.cols != data_dim_)
        fail(ErrorKind::usage, "encode: input width " + std::to_string(x.cols) +
                                   " does not match data dimension " + std::to_string(data_dim_));
    if (x.rows == 0) return Matrix(0, latent_dim_);
    return encoder_.infer(x);
}

Matrix BiganModel::generate(const Matrix& z) const {
    if (z.cols != latent_dim_)
        fail(ErrorKind::usage, "generate: input width " + std::to_string(z.cols) +
                                   " does not match latent dimension " +
                                   std::to_string(latent_dim_));
    if (z.rows == 0) return Matrix(0, data_dim_);
    return generator_.infer(z);
}

Matrix BiganModel::reconstruct(const Matrix& x) const {
    if (!trained_) fail(ErrorKind::usage, "reconstruct: model has not been trained");
    return generate(encode(x));
}

Matrix BiganModel::discriminate(const Matrix& x, const Matrix& z) const {
    Matrix out = discriminator_.infer(concat_cols(x, z));
    for (double& v : out.values) v = std::clamp(v, 1e-300, 1.0 - 1e-16);
    return out;
}

void TrainConfig::validate() const {
    if (batch_size < 2) fail(ErrorKind::usage, "train: batch_size must be >= 2");
    if (latent_dim < 1) fail(ErrorKind::usage, "train: latent_dim must be >= 1");
    if (prior_refit_interval < 1) fail(ErrorKind::usage, "train: prior_refit_interval must be >= 1");
    adam.validate();
}

Matrix UnitNormalPrior::sample(std::size_t n, RngState& rng) {
    Matrix z(n, latent_dim_);
    for (double& v : z.values) v = rng.normal();
    return z;
}

double bce_real_loss(const Matrix& logits) {
    double loss = 0.0;
    for (double l : logits.values) loss += softplus(-l);
    return logits.values.empty() ? 0.0 : loss / static_cast<double>(logits.values.size());
}

double bce_fake_loss(const Matrix& logits) {
    double loss = 0.0;
    for (double l : logits.values) loss += softplus(l);
    return logits.values.empty() ? 0.0 : loss / static_cast<double>(logits.values.size());
}

namespace {

// d(mean BCE)/d(logit): sigmoid(l) - label, scaled by 1/batch.
Matrix bce_logit_gradient(const Matrix& logits, double label) {
    Matrix g(logits.rows, logits.cols);
    const double scale = 1.0 / static_cast<double>(logits.values.size());
    for (std::size_t i = 0; i < logits.values.size(); ++i)
        g.values[i] = (sigmoid(logits.values[i]) - label) * scale;
    return g;
}

void accumulate(Gradients& into, const Gradients& other) {
    for (std::size_t li = 0; li < into.layers.size(); ++li) {
        auto add = [](Matrix& a, const Matrix& b) {
            for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
        };
        add(into.layers[li].weight, other.layers[li].weight);
        add(into.layers[li].bias, other.layers[li].bias);
        if (into.layers[li].gamma.values.size())
            add(into.layers[li].gamma, other.layers[li].gamma);
        if (into.layers[li].beta.values.size()) add(into.layers[li].beta, other.layers[li].beta);
    }
}

}  // namespace

TrainResult train_bigan(const Matrix& data, PriorProvider& prior, const TrainConfig& config) {
    config.validate();
    if (data.rows < config.batch_size)
        fail(ErrorKind::train, "train: dataset has fewer rows than one mini-batch");

    RngState rng(config.seed);
    TrainResult result;
    result.model = BiganModel::initialized(data.cols, config.latent_dim, rng);
    BiganModel& model = result.model;
    Net& gen = model.generator();
    Net& enc = model.encoder();
    Net& dis = model.discriminator();

    AdamState adam_g(config.adam, std::as_const(gen).trainable_params());
    AdamState adam_e(config.adam, std::as_const(enc).trainable_params());
    AdamState adam_d(config.adam, std::as_const(dis).trainable_params());

    const std::size_t d = data.cols;
    const std::size_t batches = data.rows / config.batch_size;
    std::vector<std::size_t> order(data.rows);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        EpochLoss epoch_loss;
        for (std::size_t b = 0; b < batches; ++b) {
            const std::vector<std::size_t> rows(order.begin() + b * config.batch_size,
                                                order.begin() + (b + 1) * config.batch_size);
            const Matrix x = take_rows(data, rows);

            // One latent draw and one encoder pass serve both halves of the
            // iteration; the discriminator step does not change E or G.
            const Matrix z = prior.sample(config.batch_size, rng);
            ForwardCache cache_g, cache_e;
            const Matrix gz = gen.forward(z, true, &rng, &cache_g);
            const Matrix ex = enc.forward(x, true, &rng, &cache_e);
            const Matrix real_pair = concat_cols(x, ex);
            const Matrix fake_pair = concat_cols(gz, z);

            // Discriminator step: real pairs (x, E(x)) toward 1, fake pairs
            // (G(z), z) toward 0.
            {
                ForwardCache cache_real, cache_fake;
                dis.forward(real_pair, true, &rng, &cache_real);
                dis.forward(fake_pair, true, &rng, &cache_fake);
                // the loss works on the pre-sigmoid logits held in the cache
                const Matrix& logit_real = cache_real.layers.back().preact;
                const Matrix& logit_fake = cache_fake.layers.back().preact;
                const double loss = bce_real_loss(logit_real) + bce_fake_loss(logit_fake);
                if (!std::isfinite(loss))
                    fail(ErrorKind::train, "train: non-finite discriminator loss at epoch " +
                                               std::to_string(epoch) + ", batch " +
                                               std::to_string(b));
                epoch_loss.discriminator += loss;
                Gradients grads = dis.backward_from_preactivation(
                    cache_real, bce_logit_gradient(logit_real, 1.0), false);
                const Gradients fake_grads = dis.backward_from_preactivation(
                    cache_fake, bce_logit_gradient(logit_fake, 0.0), false);
                accumulate(grads, fake_grads);
                adam_d.step(dis.trainable_params(), Net::trainable_grads(grads),
                            dis.param_names());
            }

            // Generator/encoder step (non-saturating): G pushes D(G(z), z)
            // toward 1, E pushes D(x, E(x)) toward 0. D is not updated.
            {
                ForwardCache cache_dr, cache_df;
                dis.forward(fake_pair, true, &rng, &cache_df);
                dis.forward(real_pair, true, &rng, &cache_dr);
                const Matrix& logit_fake = cache_df.layers.back().preact;
                const Matrix& logit_real = cache_dr.layers.back().preact;
                const double loss = bce_real_loss(logit_fake) + bce_fake_loss(logit_real);
                if (!std::isfinite(loss))
                    fail(ErrorKind::train, "train: non-finite generator/encoder loss at epoch " +
                                               std::to_string(epoch) + ", batch " +
                                               std::to_string(b));
                epoch_loss.generator_encoder += loss;

                const Gradients through_fake = dis.backward_from_preactivation(
                    cache_df, bce_logit_gradient(logit_fake, 1.0));
                const Gradients g_grads =
                    gen.backward(cache_g, slice_cols(through_fake.input, 0, d));
                adam_g.step(gen.trainable_params(), Net::trainable_grads(g_grads),
                            gen.param_names());

                const Gradients through_real = dis.backward_from_preactivation(
                    cache_dr, bce_logit_gradient(logit_real, 0.0));
                const Gradients e_grads = enc.backward(
                    cache_e, slice_cols(through_real.input, d, d + config.latent_dim));
                adam_e.step(enc.trainable_params(), Net::trainable_grads(e_grads),
                            enc.param_names());
            }
        }
        if (batches > 0) {
            epoch_loss.discriminator /= static_cast<double>(batches);
            epoch_loss.generator_encoder /= static_cast<double>(batches);
        }
        result.loss_history.push_back(epoch_loss);
        prior.on_epoch_end(model, epoch);
    }

    model.set_trained(true);
    return result;
}

// --- checkpoint ------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[] = "NEGM-CKPT";
constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json specs_to_json(const Net& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerSpec& s : net.specs()) {
        layers.push_back({{"in", s.input_width},
                          {"out", s.output_width},
                          {"activation", activation_name(s.activation)},
                          {"lrelu_slope", s.lrelu_slope},
                          {"batch_norm", s.batch_norm},
                          {"dropout", s.dropout_rate}});
    }
    return layers;
}

std::vector<LayerSpec> specs_from_json(const nlohmann::json& layers) {
    std::vector<LayerSpec> specs;
    for (const auto& l : layers) {
        LayerSpec s;
        s.input_width = l.at("in").get<std::size_t>();
        s.output_width = l.at("out").get<std::size_t>();
        s.activation = activation_from_name(l.at("activation").get<std::string>());
        s.lrelu_slope = l.at("lrelu_slope").get<double>();
        s.batch_norm = l.at("batch_norm").get<bool>();
        s.dropout_rate = l.at("dropout").get<double>();
        specs.push_back(s);
    }
    return specs;
}

// All tensors of a net, persisted order: per layer weight, bias,
// [gamma, beta, running_mean, running_var].
std::vector<const Matrix*> net_tensors(const Net& net) {
    std::vector<const Matrix*> out;
    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        const LayerParams& p = net.layers()[li];
        out.push_back(&p.weight);
        out.push_back(&p.bias);
        if (net.specs()[li].batch_norm) {
            out.push_back(&p.gamma);
            out.push_back(&p.beta);
            out.push_back(&p.running_mean);
            out.push_back(&p.running_var);
        }
    }
    return out;
}

std::vector<Matrix*> net_tensors(Net& net) {
    std::vector<Matrix*> out;
    for (auto* m : net_tensors(static_cast<const Net&>(net))) out.push_back(const_cast<Matrix*>(m));
    return out;
}

struct BlockWriter {
    std::vector<std::pair<std::string, const std::vector<double>*>> blocks;
    std::deque<std::vector<double>> owned;  // stable addresses

    void add(const std::string& name, const std::vector<double>& values) {
        blocks.emplace_back(name, &values);
    }
    void add_owned(const std::string& name, std::vector<double> values) {
        owned.push_back(std::move(values));
        blocks.emplace_back(name, &owned.back());
    }
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    const std::size_t k = ckpt.prior.component_count();
    const std::size_t p = ckpt.model.latent_dim();

    nlohmann::json header;
    header["d"] = ckpt.model.data_dim();
    header["p"] = p;
    header["k"] = k;
    header["trained"] = ckpt.model.trained();
    header["seed"] = ckpt.seed;
    header["class_names"] = ckpt.class_names;
    header["nets"] = {{"generator", specs_to_json(ckpt.model.generator())},
                      {"encoder", specs_to_json(ckpt.model.encoder())},
                      {"discriminator", specs_to_json(ckpt.model.discriminator())}};

    BlockWriter writer;
    auto add_net = [&](const std::string& prefix, const Net& net) {
        const auto tensors = net_tensors(net);
        for (std::size_t i = 0; i < tensors.size(); ++i)
            writer.add(prefix + ".t" + std::to_string(i), tensors[i]->values);
    };
    add_net("generator", ckpt.model.generator());
    add_net("encoder", ckpt.model.encoder());
    add_net("discriminator", ckpt.model.discriminator());

    writer.add_owned("prior.weights", ckpt.prior.weights);
    for (std::size_t c = 0; c < k; ++c) {
        writer.add_owned("prior.mean" + std::to_string(c), ckpt.prior.components[c].mean);
        writer.add("prior.factor" + std::to_string(c), ckpt.prior.components[c].factor.values);
    }
    writer.add_owned("normalizer.min", ckpt.normalizer.minimums());
    writer.add_owned("normalizer.max", ckpt.normalizer.maximums());
    writer.add_owned("baselines", ckpt.baselines.medians);
    writer.add("class_stats.means", ckpt.class_latent_means.values);
    writer.add("class_stats.sigmas", ckpt.class_latent_sigmas.values);
    std::vector<double> counts;
    for (std::size_t c : ckpt.class_counts) counts.push_back(static_cast<double>(c));
    writer.add_owned("class_stats.counts", std::move(counts));

    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& [name, values] : writer.blocks)
        blocks.push_back({{"name", name}, {"count", values->size()}});
    header["blocks"] = std::move(blocks);

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::checkpoint, "cannot write checkpoint file: " + path);
    out.write(kCheckpointMagic, static_cast<std::streamsize>(kMagicLen));
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& [name, values] : writer.blocks)
        out.write(reinterpret_cast<const char*>(values->data()),
                  static_cast<std::streamsize>(values->size() * sizeof(double)));
    if (!out) fail(ErrorKind::checkpoint, "failed writing checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::checkpoint, "cannot open checkpoint file: " + path);
    char magic[kMagicLen] = {};
    in.read(magic, static_cast<std::streamsize>(kMagicLen));
    if (!in || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0)
        fail(ErrorKind::checkpoint, "not a checkpoint file (bad magic): " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in) fail(ErrorKind::checkpoint, "truncated checkpoint header: " + path);
    if (version > kCheckpointVersion)
        fail(ErrorKind::checkpoint, "checkpoint version " + std::to_string(version) +
                                        " is newer than supported version " +
                                        std::to_string(kCheckpointVersion));
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in) fail(ErrorKind::checkpoint, "truncated checkpoint header: " + path);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) fail(ErrorKind::checkpoint, "truncated checkpoint header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::checkpoint, std::string("corrupt checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        const std::size_t d = header.at("d").get<std::size_t>();
        const std::size_t p = header.at("p").get<std::size_t>();
        const std::size_t k = header.at("k").get<std::size_t>();
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        ckpt.class_names = header.at("class_names").get<std::vector<std::string>>();

        RngState init_rng(0);
        ckpt.model = BiganModel::initialized(d, p, init_rng);
        ckpt.model.generator() = Net::initialized(
            specs_from_json(header.at("nets").at("generator")), init_rng);
        ckpt.model.encoder() =
            Net::initialized(specs_from_json(header.at("nets").at("encoder")), init_rng);
        ckpt.model.discriminator() = Net::initialized(
            specs_from_json(header.at("nets").at("discriminator")), init_rng);
        ckpt.model.set_trained(header.at("trained").get<bool>());

        // Read blocks in directory order into a name -> values map.
        std::vector<std::pair<std::string, std::vector<double>>> blocks;
        for (const auto& b : header.at("blocks")) {
            const std::string name = b.at("name").get<std::string>();
            const std::size_t count = b.at("count").get<std::size_t>();
            std::vector<double> values(count);
            in.read(reinterpret_cast<char*>(values.data()),
                    static_cast<std::streamsize>(count * sizeof(double)));
            if (!in)
                fail(ErrorKind::checkpoint, "truncated checkpoint block '" + name + "': " + path);
            blocks.emplace_back(name, std::move(values));
        }
        std::size_t cursor = 0;
        auto next_block = [&](const std::string& expect) -> std::vector<double>& {
            if (cursor >= blocks.size() || blocks[cursor].first != expect)
                fail(ErrorKind::checkpoint, "checkpoint block order mismatch at '" + expect + "'");
            return blocks[cursor++].second;
        };

        auto load_net = [&](const std::string& prefix, Net& net) {
            const auto tensors = net_tensors(net);
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                std::vector<double>& values = next_block(prefix + ".t" + std::to_string(i));
                if (values.size() != tensors[i]->values.size())
                    fail(ErrorKind::checkpoint, "checkpoint tensor size mismatch in " + prefix);
                tensors[i]->values = std::move(values);
            }
        };
        load_net("generator", ckpt.model.generator());
        load_net("encoder", ckpt.model.encoder());
        load_net("discriminator", ckpt.model.discriminator());

        auto sized_block = [&](const std::string& expect, std::size_t count) -> std::vector<double>& {
            std::vector<double>& values = next_block(expect);
            if (values.size() != count)
                fail(ErrorKind::checkpoint, "checkpoint block '" + expect + "' has " +
                                                std::to_string(values.size()) + " values, expected " +
                                                std::to_string(count));
            return values;
        };

        ckpt.prior.latent_dim = p;
        ckpt.prior.weights = sized_block("prior.weights", k);
        ckpt.prior.components.resize(k);
        for (std::size_t c = 0; c < k; ++c) {
            ckpt.prior.components[c].mean = sized_block("prior.mean" + std::to_string(c), p);
            Matrix factor(p, p);
            factor.values = sized_block("prior.factor" + std::to_string(c), p * p);
            ckpt.prior.components[c].factor = std::move(factor);
        }
        std::vector<double> norm_min = sized_block("normalizer.min", d);
        std::vector<double> norm_max = sized_block("normalizer.max", d);
        ckpt.normalizer.restore(std::move(norm_min), std::move(norm_max));
        const std::size_t n_classes = ckpt.class_names.size();
        ckpt.baselines.medians = sized_block("baselines", n_classes);
        ckpt.baselines.class_names = ckpt.class_names;
        ckpt.class_latent_means = Matrix(n_classes, p);
        ckpt.class_latent_means.values = sized_block("class_stats.means", n_classes * p);
        ckpt.class_latent_sigmas = Matrix(n_classes, p);
        ckpt.class_latent_sigmas.values = sized_block("class_stats.sigmas", n_classes * p);
        for (double c : sized_block("class_stats.counts", n_classes))
            ckpt.class_counts.push_back(static_cast<std::size_t>(c));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::checkpoint, std::string("corrupt checkpoint header field: ") + e.what());
    }
    return ckpt;
}

}  // namespace negm
