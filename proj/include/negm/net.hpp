#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "negm/matrix.hpp"
#include "negm/rng.hpp"

namespace negm {

Matrix sample_standard_normal(RngState& rng, std::size_t rows, std::size_t cols);

enum class Activation { linear, lrelu, tanh, sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct LayerSpec {
    std::size_t input_width = 0;
    std::size_t output_width = 0;
    Activation activation = Activation::linear;
    double lrelu_slope = 0.2;  // only meaningful for lrelu
    bool batch_norm = false;
    double dropout_rate = 0.0;

    void validate(std::size_t layer_index) const;
};

// Trainable and running state of one dense layer.
// Order of stages: affine -> batch norm -> activation -> dropout.
struct LayerParams {
    Matrix weight;  // input_width × output_width
    Matrix bias;    // 1 × output_width
    // Batch-norm parameters; empty unless the spec enables it.
    Matrix gamma;
    Matrix beta;
    Matrix running_mean;
    Matrix running_var;
};

struct LayerCache {
    Matrix input;
    Matrix preact;    // post batch-norm, pre activation
    Matrix act_out;   // post activation, pre dropout
    Matrix bn_xhat;
    Matrix bn_invstd;  // 1 × width
    Matrix dropout_mask;
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    bool training = false;
    // Shape fingerprint of the net that produced this cache; backward
    // rejects caches that do not match.
    std::vector<std::size_t> widths;
};

struct LayerGrads {
    Matrix weight;
    Matrix bias;
    Matrix gamma;
    Matrix beta;
};

struct Gradients {
    std::vector<LayerGrads> layers;
    Matrix input;  // gradient w.r.t. the net input
};

class Net {
public:
    Net() = default;

    // Gaussian init with std sqrt(2 / input_width); biases zero.
    static Net initialized(std::vector<LayerSpec> specs, RngState& rng);

    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::vector<LayerParams>& layers() { return layers_; }
    const std::vector<LayerParams>& layers() const { return layers_; }

    std::size_t input_width() const { return specs_.empty() ? 0 : specs_.front().input_width; }
    std::size_t output_width() const { return specs_.empty() ? 0 : specs_.back().output_width; }

    // Training-mode forward: dropout and batch-norm batch statistics are
    // live, running averages are updated (momentum 0.99), and the cache
    // records everything backward needs.
    Matrix forward(const Matrix& input, bool training, RngState* rng, ForwardCache* cache);

    // Pure inference pass: deterministic function of input and parameters.
    Matrix infer(const Matrix& input) const;

    Gradients backward(const ForwardCache& cache, const Matrix& output_gradient) const;
    // Variant that injects the gradient at the final pre-activation. Used to
    // fuse sigmoid with binary cross-entropy so saturated outputs keep exact
    // gradients. want_input_gradient=false skips the layer-0 input gradient
    // when the caller only needs parameter gradients.
    Gradients backward_from_preactivation(const ForwardCache& cache,
                                          const Matrix& preact_gradient,
                                          bool want_input_gradient = true) const;

    // Trainable parameters in a fixed order (weight, bias, [gamma, beta] per
    // layer); names identify layer and role for error reporting.
    std::vector<Matrix*> trainable_params();
    std::vector<const Matrix*> trainable_params() const;
    std::vector<std::string> param_names() const;
    static std::vector<const Matrix*> trainable_grads(const Gradients& grads);

    std::size_t parameter_count() const;

private:
    Gradients backward_impl(const ForwardCache& cache, const Matrix& seed_gradient,
                            bool seed_is_preactivation, bool want_input_gradient) const;

    std::vector<LayerSpec> specs_;
    std::vector<LayerParams> layers_;
};

// One Adam step. State is per-net; shapes are checked against the params.
struct AdamConfig {
    double step_size = 1e-5;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(AdamConfig config, const std::vector<const Matrix*>& params);

    const AdamConfig& config() const { return config_; }
    std::int64_t timestep() const { return timestep_; }

    void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
              const std::vector<std::string>& names);

private:
    AdamConfig config_;
    std::vector<Matrix> first_moment_;
    std::vector<Matrix> second_moment_;
    std::int64_t timestep_ = 0;
};

}  // namespace negm
