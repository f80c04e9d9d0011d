#pragma once

#include <rotordiag/nn/tensor.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rotordiag::nn {

struct Conv {
    int kernel_h = 5;
    int kernel_w = 5;
    int in_channels = 3;
    int out_channels = 8;
    int stride = 1;
    bool operator==(const Conv&) const = default;
};
struct ReLU {
    bool operator==(const ReLU&) const = default;
};
struct MaxPool {
    int size = 2;
    bool operator==(const MaxPool&) const = default;
};
struct AvgPool {
    int size = 2;
    bool operator==(const AvgPool&) const = default;
};
struct Flatten {
    bool operator==(const Flatten&) const = default;
};
struct Dense {
    int in_dim = 0;
    int out_dim = 0;
    bool operator==(const Dense&) const = default;
};
struct Softmax {
    bool operator==(const Softmax&) const = default;
};

using Layer = std::variant<Conv, ReLU, MaxPool, AvgPool, Flatten, Dense, Softmax>;

std::string layer_name(const Layer& layer);

inline bool is_parametric(const Layer& layer) {
    return std::holds_alternative<Conv>(layer) || std::holds_alternative<Dense>(layer);
}

struct ModelSpec {
    std::vector<Layer> layers;

    /// Shape after every layer, starting from `input`. Throws ShapeMismatch if
    /// adjacent layers do not compose or the model does not end in exactly
    /// one Softmax.
    std::vector<Shape> trace_shapes(const Shape& input) const;
    void validate(const Shape& input) const { trace_shapes(input); }

    /// Indices into `layers` of the Conv and Dense layers, in order.
    std::vector<std::size_t> parametric_layers() const;
    std::size_t num_classes() const;

    bool operator==(const ModelSpec&) const = default;
};

/// Conv(5x5, 3->8) -> ReLU -> MaxPool(2) -> Flatten -> Dense(->classes) -> Softmax
/// for a [3, height, width] input.
ModelSpec default_model_spec(int height = 64, int width = 64, int classes = 2);

inline Shape image_input_shape(int height = 64, int width = 64) {
    return {3, static_cast<std::size_t>(height), static_cast<std::size_t>(width)};
}

template <class T>
struct BasicLayerParams {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    bool operator==(const BasicLayerParams&) const = default;
};

/// One entry per parametric layer, in spec order. Conv weights are
/// [out_c, in_c, kh, kw] with bias [out_c]; Dense weights are [out, in]
/// with bias [out].
template <class T>
struct BasicParams {
    std::vector<BasicLayerParams<T>> layers;

    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers)
            n += l.weights.size() + l.bias.size();
        return n;
    }

    template <class U>
    BasicParams<U> cast() const {
        BasicParams<U> out;
        for (const auto& l : layers)
            out.layers.push_back({l.weights.template cast<U>(), l.bias.template cast<U>()});
        return out;
    }

    bool operator==(const BasicParams&) const = default;
};

using LayerParams = BasicLayerParams<float>;
using ModelParams = BasicParams<float>;
/// dLoss/dparam, shape-congruent with ModelParams.
using Gradients = BasicParams<float>;

/// Throws ShapeMismatch unless `params` has exactly the shapes `spec` implies.
void check_params(const ModelSpec& spec, const ModelParams& params);

/// All-zero parameters for every parametric layer.
ModelParams zero_params(const ModelSpec& spec);

/// He initialization: weights ~ N(0, 2 / fan_in), biases zero. Each layer
/// draws from its own stream derived from (seed, layer index), so a single
/// layer can be re-initialized without disturbing the others.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
LayerParams init_layer(const ModelSpec& spec, std::size_t layer_index, std::uint64_t seed);

template <class T>
struct ForwardCache {
    std::vector<BasicTensor<T>> inputs;              // input to each layer
    std::vector<std::vector<std::size_t>> argmax;    // filled for MaxPool layers
    BasicTensor<T> logits;                           // input to the Softmax
};

template <class T>
struct ForwardResult {
    BasicTensor<T> probs;
    ForwardCache<T> cache;
};

template <class T>
ForwardResult<T> forward(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input);

/// Class probabilities only; skips building the cache.
template <class T>
BasicTensor<T> predict(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input);

/// Runs layers [first_layer, end) on `activation`, the input that layer
/// first_layer would see in a full forward pass.
template <class T>
BasicTensor<T> predict_from(const ModelSpec& spec, const BasicParams<T>& params, std::size_t first_layer,
                            const BasicTensor<T>& activation);

/// Cross-entropy of forward(input) against `label`.
template <class T>
double loss(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input, std::size_t label);

/// Exact gradients of cross_entropy(forward(input), label). Softmax and
/// cross-entropy are fused: the gradient at the logits is p - onehot(label).
Gradients backward(const ModelSpec& spec, const ModelParams& params, const ForwardCache<float>& cache,
                   std::size_t label);

/// acc += g, elementwise.
void accumulate(Gradients& acc, const Gradients& g);
/// g *= factor, elementwise.
void scale(Gradients& g, float factor);

/// theta - lr * g.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double learning_rate);

/// In-place SGD with one learning rate per parametric layer.
void sgd_step_inplace(ModelParams& params, const Gradients& grads, std::span<const double> layer_rates);

/// Index of the largest probability; exact ties go to the lower index.
std::size_t argmax_class(const Tensor& probs);

} // namespace rotordiag::nn
