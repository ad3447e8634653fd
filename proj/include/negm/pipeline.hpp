#pragma once

#include <string>

#include "negm/bigan.hpp"
#include "negm/config.hpp"
#include "negm/dataset.hpp"
#include "negm/imeans.hpp"

namespace negm {

// IMeansState factory from checkpointed per-class latent statistics.
IMeansState imeans_from_statistics(const Matrix& means, const Matrix& sigmas,
                                   const std::vector<std::size_t>& counts,
                                   const IMeansConfig& config);

// Latent prior provider that warms up unimodal, fits a K-component GMM on
// the encodings once the warm-up epochs have elapsed, and refits every
// prior_refit_interval epochs after that.
class GmmPriorProvider : public PriorProvider {
public:
    GmmPriorProvider(const Matrix& normalized_train, std::size_t k, const TrainConfig& config,
                     const EmConfig& em_config);

    Matrix sample(std::size_t n, RngState& rng) override;
    void on_epoch_end(const BiganModel& model, std::size_t epoch) override;

    bool has_mixture() const { return has_mixture_; }
    const MixturePrior& mixture() const { return mixture_; }
    std::size_t refit_count() const { return refit_count_; }

private:
    const Matrix& train_;
    std::size_t k_;
    TrainConfig train_config_;
    EmConfig em_config_;
    MixturePrior mixture_;
    bool has_mixture_ = false;
    std::size_t refit_count_ = 0;
};

// Loads data.path (.csv with the configured schema, or a .negm container),
// encodes when needed, and returns the feature matrix plus the resolved
// known/unknown class lists.
struct LoadedDataset {
    FeatureMatrix features;
    std::vector<std::string> known_classes;
    std::vector<std::string> unknown_classes;
    std::size_t encoded_width = 0;
};

LoadedDataset load_dataset(const Config& cfg);

// Each command returns a JSON summary string (what the CLI prints).
std::string run_synth(const Config& cfg);
std::string run_train(const Config& cfg);
std::string run_detect(const Config& cfg);
std::string run_eval(const Config& cfg);

}  // namespace negm
