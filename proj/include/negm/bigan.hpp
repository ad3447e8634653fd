#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negm/dataset.hpp"
#include "negm/detector.hpp"
#include "negm/gmm.hpp"
#include "negm/matrix.hpp"
#include "negm/net.hpp"
#include "negm/rng.hpp"

namespace negm {

// Generator p -> 64 -> 128 -> d (LReLU, LReLU, Tanh)
// Encoder d -> 64 -> p (LReLU, linear)
// Discriminator (d + p) -> 128 -> 128 -> 1 (LReLU + batch norm + dropout 0.5
// twice, then sigmoid).
class BiganModel {
public:
    BiganModel() = default;

    static BiganModel initialized(std::size_t data_dim, std::size_t latent_dim, RngState& rng);

    std::size_t data_dim() const { return data_dim_; }
    std::size_t latent_dim() const { return latent_dim_; }
    bool trained() const { return trained_; }
    void set_trained(bool value) { trained_ = value; }

    Matrix encode(const Matrix& x) const;
    Matrix generate(const Matrix& z) const;
    Matrix reconstruct(const Matrix& x) const;
    // sigma(logit), clamped into the open interval (0, 1).
    Matrix discriminate(const Matrix& x, const Matrix& z) const;

    Net& generator() { return generator_; }
    Net& encoder() { return encoder_; }
    Net& discriminator() { return discriminator_; }
    const Net& generator() const { return generator_; }
    const Net& encoder() const { return encoder_; }
    const Net& discriminator() const { return discriminator_; }

private:
    Net generator_;
    Net encoder_;
    Net discriminator_;
    std::size_t data_dim_ = 0;
    std::size_t latent_dim_ = 0;
    bool trained_ = false;
};

struct TrainConfig {
    std::size_t epochs = 1000;
    std::size_t batch_size = 50;
    std::size_t latent_dim = 32;
    AdamConfig adam;                        // step 1e-5, beta1 0.5 per defaults
    std::size_t prior_warmup_epochs = 50;   // unimodal epochs before the first GMM fit
    std::size_t prior_refit_interval = 50;  // refit the latent prior every R epochs
    std::uint64_t seed = 0;

    void validate() const;
};

// Sampling source for the latent prior during training. The trainer calls
// on_epoch_end after each epoch so a provider can refit itself on the
// current encodings.
class PriorProvider {
public:
    virtual ~PriorProvider() = default;
    virtual Matrix sample(std::size_t n, RngState& rng) = 0;
    virtual void on_epoch_end(const BiganModel& /*model*/, std::size_t /*epoch*/) {}
};

class UnitNormalPrior : public PriorProvider {
public:
    explicit UnitNormalPrior(std::size_t latent_dim) : latent_dim_(latent_dim) {}
    Matrix sample(std::size_t n, RngState& rng) override;

private:
    std::size_t latent_dim_;
};

struct EpochLoss {
    double discriminator = 0.0;
    double generator_encoder = 0.0;
};

struct TrainResult {
    BiganModel model;
    std::vector<EpochLoss> loss_history;
};

// Alternating adversarial training: one discriminator step, then one
// generator/encoder step per mini-batch, non-saturating losses, trailing
// partial mini-batch dropped. Deterministic for a fixed seed.
TrainResult train_bigan(const Matrix& data, PriorProvider& prior, const TrainConfig& config);

// Binary cross-entropy on logits; label 1 for "real pair".
double bce_real_loss(const Matrix& logits);
double bce_fake_loss(const Matrix& logits);

// Everything the online stage needs, persisted as one checkpoint file:
// magic "NEGM-CKPT", version, JSON header (layer specs, d, p, K, block
// directory), then raw 64-bit-float blocks in declared order.
struct Checkpoint {
    BiganModel model;
    MixturePrior prior;
    Normalizer normalizer;
    BaselineTable baselines;
    std::vector<std::string> class_names;  // known classes, baseline order
    Matrix class_latent_means;             // K × p
    Matrix class_latent_sigmas;            // K × p
    std::vector<std::size_t> class_counts;
    std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace negm
