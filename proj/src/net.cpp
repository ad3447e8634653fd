#include "negm/net.hpp"

#include <cmath>

#include "negm/error.hpp"

namespace negm {

namespace {
constexpr double kBnEpsilon = 1e-5;
constexpr double kBnMomentum = 0.99;
}  // namespace

Matrix sample_standard_normal(RngState& rng, std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1)
        fail(ErrorKind::usage, "sample_standard_normal: rows and cols must be >= 1");
    Matrix m(rows, cols);
    for (double& v : m.values) v = rng.normal();
    return m;
}

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::linear: return "linear";
        case Activation::lrelu: return "lrelu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "linear") return Activation::linear;
    if (name == "lrelu") return Activation::lrelu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    fail(ErrorKind::usage, "unknown activation: " + name);
}

void LayerSpec::validate(std::size_t layer_index) const {
    const std::string where = "layer " + std::to_string(layer_index);
    if (input_width < 1 || output_width < 1)
        fail(ErrorKind::usage, where + ": widths must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        fail(ErrorKind::usage, where + ": dropout_rate must lie in [0, 1)");
    if (activation == Activation::lrelu && (lrelu_slope <= 0.0 || lrelu_slope >= 1.0))
        fail(ErrorKind::usage, where + ": lrelu slope must lie in (0, 1)");
}

Net Net::initialized(std::vector<LayerSpec> specs, RngState& rng) {
    if (specs.empty()) fail(ErrorKind::usage, "net needs at least one layer");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        specs[i].validate(i);
        if (i > 0 && specs[i].input_width != specs[i - 1].output_width)
            fail(ErrorKind::usage, "layer " + std::to_string(i) + ": input width " +
                                       std::to_string(specs[i].input_width) +
                                       " does not match previous output width " +
                                       std::to_string(specs[i - 1].output_width));
    }
    Net net;
    net.specs_ = std::move(specs);
    net.layers_.reserve(net.specs_.size());
    for (const LayerSpec& spec : net.specs_) {
        LayerParams p;
        p.weight = Matrix(spec.input_width, spec.output_width);
        const double stddev = std::sqrt(2.0 / static_cast<double>(spec.input_width));
        for (double& w : p.weight.values) w = rng.normal() * stddev;
        p.bias = Matrix(1, spec.output_width, 0.0);
        if (spec.batch_norm) {
            p.gamma = Matrix(1, spec.output_width, 1.0);
            p.beta = Matrix(1, spec.output_width, 0.0);
            p.running_mean = Matrix(1, spec.output_width, 0.0);
            p.running_var = Matrix(1, spec.output_width, 1.0);
        }
        net.layers_.push_back(std::move(p));
    }
    return net;
}

Matrix Net::forward(const Matrix& input, bool training, RngState* rng, ForwardCache* cache) {
    if (input.cols != input_width())
        fail(ErrorKind::usage, "forward: input width " + std::to_string(input.cols) +
                                   " does not match layer 0 input width " +
                                   std::to_string(input_width()));
    if (cache) {
        cache->layers.assign(specs_.size(), LayerCache{});
        cache->training = training;
        cache->widths.clear();
        cache->widths.push_back(input_width());
        for (const LayerSpec& s : specs_) cache->widths.push_back(s.output_width);
    }

    Matrix x = input;
    for (std::size_t li = 0; li < specs_.size(); ++li) {
        const LayerSpec& spec = specs_[li];
        LayerParams& params = layers_[li];
        const std::size_t batch = x.rows;
        const std::size_t width = spec.output_width;

        Matrix s = matmul(x, params.weight);
        const double* bias = params.bias.values.data();
        for (std::size_t r = 0; r < batch; ++r) {
            double* row = s.row_ptr(r);
            for (std::size_t c = 0; c < width; ++c) row[c] += bias[c];
        }

        Matrix xhat, invstd;
        if (spec.batch_norm) {
            if (training) {
                if (batch < 2)
                    fail(ErrorKind::train, "layer " + std::to_string(li) +
                                               ": batch norm needs batch size >= 2 in "
                                               "training mode");
                std::vector<double> mean(width, 0.0), var(width, 0.0);
                for (std::size_t r = 0; r < batch; ++r) {
                    const double* row = s.row_ptr(r);
                    for (std::size_t c = 0; c < width; ++c) mean[c] += row[c];
                }
                const double inv_b = 1.0 / static_cast<double>(batch);
                for (double& v : mean) v *= inv_b;
                for (std::size_t r = 0; r < batch; ++r) {
                    const double* row = s.row_ptr(r);
                    for (std::size_t c = 0; c < width; ++c) {
                        const double d = row[c] - mean[c];
                        var[c] += d * d;
                    }
                }
                for (double& v : var) v *= inv_b;
                invstd = Matrix(1, width);
                for (std::size_t c = 0; c < width; ++c)
                    invstd(0, c) = 1.0 / std::sqrt(var[c] + kBnEpsilon);
                xhat = Matrix(batch, width);
                const double* gamma = params.gamma.values.data();
                const double* beta = params.beta.values.data();
                const double* istd = invstd.values.data();
                for (std::size_t r = 0; r < batch; ++r) {
                    double* srow = s.row_ptr(r);
                    double* xrow = xhat.row_ptr(r);
                    for (std::size_t c = 0; c < width; ++c) {
                        xrow[c] = (srow[c] - mean[c]) * istd[c];
                        srow[c] = gamma[c] * xrow[c] + beta[c];
                    }
                }
                for (std::size_t c = 0; c < width; ++c) {
                    params.running_mean(0, c) =
                        kBnMomentum * params.running_mean(0, c) + (1.0 - kBnMomentum) * mean[c];
                    params.running_var(0, c) =
                        kBnMomentum * params.running_var(0, c) + (1.0 - kBnMomentum) * var[c];
                }
            } else {
                const double* gamma = params.gamma.values.data();
                const double* beta = params.beta.values.data();
                std::vector<double> scale(width), shift(width);
                for (std::size_t c = 0; c < width; ++c) {
                    scale[c] = gamma[c] / std::sqrt(params.running_var(0, c) + kBnEpsilon);
                    shift[c] = beta[c] - scale[c] * params.running_mean(0, c);
                }
                if (cache) {
                    xhat = Matrix(batch, width);
                    for (std::size_t r = 0; r < batch; ++r)
                        for (std::size_t c = 0; c < width; ++c)
                            xhat(r, c) =
                                (s(r, c) - params.running_mean(0, c)) /
                                std::sqrt(params.running_var(0, c) + kBnEpsilon);
                }
                for (std::size_t r = 0; r < batch; ++r) {
                    double* srow = s.row_ptr(r);
                    for (std::size_t c = 0; c < width; ++c)
                        srow[c] = scale[c] * srow[c] + shift[c];
                }
            }
        }

        // Output buffer; preact survives in the cache for the backward pass.
        // act_out is only stored where the derivative needs it (tanh/sigmoid).
        Matrix y(batch, width);
        switch (spec.activation) {
            case Activation::linear:
                y.values = s.values;
                break;
            case Activation::lrelu: {
                const double slope = spec.lrelu_slope;
                for (std::size_t i = 0; i < s.values.size(); ++i) {
                    const double v = s.values[i];
                    y.values[i] = v >= 0.0 ? v : slope * v;
                }
                break;
            }
            case Activation::tanh:
                for (std::size_t i = 0; i < s.values.size(); ++i)
                    y.values[i] = std::tanh(s.values[i]);
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < s.values.size(); ++i)
                    y.values[i] = 1.0 / (1.0 + std::exp(-s.values[i]));
                break;
        }

        Matrix act_out;
        const bool need_act_out =
            cache && (spec.activation == Activation::tanh || spec.activation == Activation::sigmoid);
        if (need_act_out) act_out = y;

        Matrix mask;
        if (spec.dropout_rate > 0.0 && training) {
            if (!rng)
                fail(ErrorKind::usage,
                     "layer " + std::to_string(li) + ": dropout in training mode needs an rng");
            // Inverted scaling: inference applies no rescale.
            const double keep = 1.0 - spec.dropout_rate;
            const double boost = 1.0 / keep;
            mask = Matrix(batch, width);
            for (std::size_t i = 0; i < mask.values.size(); ++i) {
                const double m = rng->uniform() < keep ? boost : 0.0;
                mask.values[i] = m;
                y.values[i] *= m;
            }
        }

        if (cache) {
            LayerCache& lc = cache->layers[li];
            lc.input = std::move(x);
            lc.preact = std::move(s);
            lc.act_out = std::move(act_out);
            lc.bn_xhat = std::move(xhat);
            lc.bn_invstd = std::move(invstd);
            lc.dropout_mask = std::move(mask);
        }
        x = std::move(y);
    }
    return x;
}

Matrix Net::infer(const Matrix& input) const {
    // Inference never mutates running statistics, so the const_cast is safe.
    return const_cast<Net*>(this)->forward(input, false, nullptr, nullptr);
}

Gradients Net::backward(const ForwardCache& cache, const Matrix& output_gradient) const {
    return backward_impl(cache, output_gradient, false, true);
}

Gradients Net::backward_from_preactivation(const ForwardCache& cache,
                                           const Matrix& preact_gradient,
                                           bool want_input_gradient) const {
    return backward_impl(cache, preact_gradient, true, want_input_gradient);
}

Gradients Net::backward_impl(const ForwardCache& cache, const Matrix& seed_gradient,
                             bool seed_is_preactivation, bool want_input_gradient) const {
    if (cache.layers.size() != specs_.size())
        fail(ErrorKind::usage, "backward: cache does not match this net (layer count)");
    std::vector<std::size_t> widths;
    widths.push_back(input_width());
    for (const LayerSpec& s : specs_) widths.push_back(s.output_width);
    if (widths != cache.widths)
        fail(ErrorKind::usage, "backward: cache does not match this net (layer widths)");
    if (seed_gradient.cols != output_width())
        fail(ErrorKind::usage, "backward: gradient width " + std::to_string(seed_gradient.cols) +
                                   " does not match output width " +
                                   std::to_string(output_width()));

    Gradients grads;
    grads.layers.resize(specs_.size());
    Matrix dy = seed_gradient;

    for (std::size_t li = specs_.size(); li-- > 0;) {
        const LayerSpec& spec = specs_[li];
        const LayerParams& params = layers_[li];
        const LayerCache& lc = cache.layers[li];
        if (lc.input.rows != dy.rows)
            fail(ErrorKind::usage, "backward: stale cache for layer " + std::to_string(li));
        const std::size_t batch = dy.rows;
        const std::size_t width = spec.output_width;
        const bool inject_preact = seed_is_preactivation && li + 1 == specs_.size();
        const std::size_t n = dy.values.size();

        // dy is transformed in place: dropout mask, then activation
        // derivative, then batch-norm backward, leaving d(loss)/d(affine).
        if (!inject_preact) {
            if (spec.dropout_rate > 0.0 && cache.training) {
                const double* mask = lc.dropout_mask.values.data();
                for (std::size_t i = 0; i < n; ++i) dy.values[i] *= mask[i];
            }
            switch (spec.activation) {
                case Activation::linear:
                    break;
                case Activation::lrelu: {
                    const double slope = spec.lrelu_slope;
                    const double* pre = lc.preact.values.data();
                    for (std::size_t i = 0; i < n; ++i)
                        if (pre[i] < 0.0) dy.values[i] *= slope;
                    break;
                }
                case Activation::tanh: {
                    const double* act = lc.act_out.values.data();
                    for (std::size_t i = 0; i < n; ++i) dy.values[i] *= 1.0 - act[i] * act[i];
                    break;
                }
                case Activation::sigmoid: {
                    const double* act = lc.act_out.values.data();
                    for (std::size_t i = 0; i < n; ++i) dy.values[i] *= act[i] * (1.0 - act[i]);
                    break;
                }
            }
        }

        LayerGrads& lg = grads.layers[li];
        if (spec.batch_norm && cache.training) {
            lg.gamma = Matrix(1, width);
            lg.beta = Matrix(1, width);
            double* dgamma = lg.gamma.values.data();
            double* dbeta = lg.beta.values.data();
            const double* xhat = lc.bn_xhat.values.data();
            for (std::size_t r = 0; r < batch; ++r) {
                const double* du = dy.row_ptr(r);
                const double* xrow = xhat + r * width;
                for (std::size_t c = 0; c < width; ++c) {
                    dgamma[c] += du[c] * xrow[c];
                    dbeta[c] += du[c];
                }
            }
            const double inv_b = 1.0 / static_cast<double>(batch);
            const double* gamma = params.gamma.values.data();
            const double* istd = lc.bn_invstd.values.data();
            for (std::size_t r = 0; r < batch; ++r) {
                double* du = dy.row_ptr(r);
                const double* xrow = xhat + r * width;
                for (std::size_t c = 0; c < width; ++c)
                    du[c] = istd[c] * gamma[c] *
                            (du[c] - dbeta[c] * inv_b - xrow[c] * dgamma[c] * inv_b);
            }
        } else if (spec.batch_norm) {
            // Inference-mode cache: batch norm is an affine transform with
            // running statistics; xhat was recorded by the forward pass.
            lg.gamma = Matrix(1, width);
            lg.beta = Matrix(1, width);
            std::vector<double> scale(width);
            for (std::size_t c = 0; c < width; ++c)
                scale[c] = params.gamma(0, c) /
                           std::sqrt(params.running_var(0, c) + kBnEpsilon);
            const double* xhat = lc.bn_xhat.values.data();
            for (std::size_t r = 0; r < batch; ++r) {
                double* du = dy.row_ptr(r);
                const double* xrow = xhat + r * width;
                for (std::size_t c = 0; c < width; ++c) {
                    lg.gamma(0, c) += du[c] * xrow[c];
                    lg.beta(0, c) += du[c];
                    du[c] *= scale[c];
                }
            }
        }

        lg.weight = matmul_tn(lc.input, dy);
        lg.bias = Matrix(1, width);
        double* dbias = lg.bias.values.data();
        for (std::size_t r = 0; r < batch; ++r) {
            const double* du = dy.row_ptr(r);
            for (std::size_t c = 0; c < width; ++c) dbias[c] += du[c];
        }

        if (li == 0 && !want_input_gradient) break;
        dy = matmul_nt(dy, params.weight);
    }
    if (want_input_gradient) grads.input = std::move(dy);
    return grads;
}

std::vector<Matrix*> Net::trainable_params() {
    std::vector<Matrix*> out;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        out.push_back(&layers_[li].weight);
        out.push_back(&layers_[li].bias);
        if (specs_[li].batch_norm) {
            out.push_back(&layers_[li].gamma);
            out.push_back(&layers_[li].beta);
        }
    }
    return out;
}

std::vector<const Matrix*> Net::trainable_params() const {
    std::vector<const Matrix*> out;
    for (auto* m : const_cast<Net*>(this)->trainable_params()) out.push_back(m);
    return out;
}

std::vector<std::string> Net::param_names() const {
    std::vector<std::string> names;
    for (std::size_t li = 0; li < specs_.size(); ++li) {
        const std::string prefix = "layer" + std::to_string(li) + ".";
        names.push_back(prefix + "weight");
        names.push_back(prefix + "bias");
        if (specs_[li].batch_norm) {
            names.push_back(prefix + "gamma");
            names.push_back(prefix + "beta");
        }
    }
    return names;
}

std::vector<const Matrix*> Net::trainable_grads(const Gradients& grads) {
    std::vector<const Matrix*> out;
    for (const LayerGrads& lg : grads.layers) {
        out.push_back(&lg.weight);
        out.push_back(&lg.bias);
        if (lg.gamma.values.size()) {
            out.push_back(&lg.gamma);
            out.push_back(&lg.beta);
        }
    }
    return out;
}

std::size_t Net::parameter_count() const {
    std::size_t n = 0;
    for (const Matrix* m : trainable_params()) n += m->values.size();
    return n;
}

void AdamConfig::validate() const {
    if (step_size <= 0.0) fail(ErrorKind::usage, "adam: step_size must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        fail(ErrorKind::usage, "adam: betas must lie in [0, 1)");
    if (epsilon <= 0.0) fail(ErrorKind::usage, "adam: epsilon must be > 0");
}

AdamState::AdamState(AdamConfig config, const std::vector<const Matrix*>& params)
    : config_(config) {
    config_.validate();
    first_moment_.reserve(params.size());
    second_moment_.reserve(params.size());
    for (const Matrix* p : params) {
        first_moment_.emplace_back(p->rows, p->cols);
        second_moment_.emplace_back(p->rows, p->cols);
    }
}

void AdamState::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
                     const std::vector<std::string>& names) {
    if (params.size() != first_moment_.size() || grads.size() != params.size())
        fail(ErrorKind::usage, "adam: parameter/gradient lists do not match state");
    ++timestep_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(timestep_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(timestep_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Matrix& p = *params[i];
        const Matrix& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(first_moment_[i]))
            fail(ErrorKind::usage, "adam: shape mismatch for " +
                                       (i < names.size() ? names[i] : std::to_string(i)));
        Matrix& m = first_moment_[i];
        Matrix& v = second_moment_[i];
        for (std::size_t j = 0; j < p.values.size(); ++j) {
            const double gj = g.values[j];
            if (!std::isfinite(gj))
                fail(ErrorKind::train, "adam: non-finite gradient in " +
                                           (i < names.size() ? names[i] : std::to_string(i)));
            m.values[j] = config_.beta1 * m.values[j] + (1.0 - config_.beta1) * gj;
            v.values[j] = config_.beta2 * v.values[j] + (1.0 - config_.beta2) * gj * gj;
            const double mhat = m.values[j] / bc1;
            const double vhat = v.values[j] / bc2;
            p.values[j] -= config_.step_size * mhat / (std::sqrt(vhat) + config_.epsilon);
        }
    }
}

}  // namespace negm
