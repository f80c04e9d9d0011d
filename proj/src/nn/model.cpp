#include <rotordiag/nn/layers.hpp>
#include <rotordiag/nn/model.hpp>
#include <rotordiag/rng.hpp>

#include <algorithm>
#include <cmath>

namespace rotordiag::nn {

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::size_t positive(int v, const char* what) {
    require(v > 0, Errc::InvalidArgument, std::string(what) + " must be positive");
    return static_cast<std::size_t>(v);
}

void expect_rank(const Shape& s, std::size_t rank, std::size_t layer, const Layer& l) {
    require(s.size() == rank, Errc::ShapeMismatch,
            "layer " + std::to_string(layer) + " (" + layer_name(l) + ") expects rank " +
                std::to_string(rank) + " input, got " + shape_str(s));
}

} // namespace

std::string layer_name(const Layer& layer) {
    return std::visit(overloaded{
                          [](const Conv& c) {
                              return "Conv(" + std::to_string(c.kernel_h) + "x" + std::to_string(c.kernel_w) +
                                     ", " + std::to_string(c.in_channels) + "->" +
                                     std::to_string(c.out_channels) + ", stride " + std::to_string(c.stride) + ")";
                          },
                          [](const ReLU&) { return std::string("ReLU"); },
                          [](const MaxPool& p) { return "MaxPool(" + std::to_string(p.size) + ")"; },
                          [](const AvgPool& p) { return "AvgPool(" + std::to_string(p.size) + ")"; },
                          [](const Flatten&) { return std::string("Flatten"); },
                          [](const Dense& d) {
                              return "Dense(" + std::to_string(d.in_dim) + "->" + std::to_string(d.out_dim) + ")";
                          },
                          [](const Softmax&) { return std::string("Softmax"); },
                      },
                      layer);
}

std::vector<Shape> ModelSpec::trace_shapes(const Shape& input) const {
    require(!layers.empty(), Errc::ShapeMismatch, "model has no layers");
    require(std::holds_alternative<Softmax>(layers.back()), Errc::ShapeMismatch,
            "model must end in a Softmax layer");
    std::vector<Shape> shapes{input};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        const Shape& in = shapes.back();
        Shape out = std::visit(
            overloaded{
                [&](const Conv& c) -> Shape {
                    expect_rank(in, 3, i, l);
                    const auto kh = positive(c.kernel_h, "kernel_h");
                    const auto kw = positive(c.kernel_w, "kernel_w");
                    const auto s = positive(c.stride, "stride");
                    require(in[0] == positive(c.in_channels, "in_channels"), Errc::ShapeMismatch,
                            "layer " + std::to_string(i) + " expects " + std::to_string(c.in_channels) +
                                " channels, got " + std::to_string(in[0]));
                    require(kh <= in[1] && kw <= in[2] && (in[1] - kh) % s == 0 && (in[2] - kw) % s == 0,
                            Errc::ShapeMismatch,
                            "layer " + std::to_string(i) + ": kernel/stride do not tile input " + shape_str(in));
                    return {positive(c.out_channels, "out_channels"), (in[1] - kh) / s + 1, (in[2] - kw) / s + 1};
                },
                [&](const ReLU&) -> Shape { return in; },
                [&](const MaxPool& p) -> Shape {
                    expect_rank(in, 3, i, l);
                    const auto k = positive(p.size, "pool size");
                    require(k >= 2 && in[1] % k == 0 && in[2] % k == 0, Errc::ShapeMismatch,
                            "layer " + std::to_string(i) + ": pool size does not divide " + shape_str(in));
                    return {in[0], in[1] / k, in[2] / k};
                },
                [&](const AvgPool& p) -> Shape {
                    expect_rank(in, 3, i, l);
                    const auto k = positive(p.size, "pool size");
                    require(k >= 2 && in[1] % k == 0 && in[2] % k == 0, Errc::ShapeMismatch,
                            "layer " + std::to_string(i) + ": pool size does not divide " + shape_str(in));
                    return {in[0], in[1] / k, in[2] / k};
                },
                [&](const Flatten&) -> Shape { return {shape_size(in)}; },
                [&](const Dense& d) -> Shape {
                    expect_rank(in, 1, i, l);
                    require(in[0] == positive(d.in_dim, "in_dim"), Errc::ShapeMismatch,
                            "layer " + std::to_string(i) + " expects " + std::to_string(d.in_dim) +
                                " inputs, got " + std::to_string(in[0]));
                    return {positive(d.out_dim, "out_dim")};
                },
                [&](const Softmax&) -> Shape {
                    require(i + 1 == layers.size(), Errc::ShapeMismatch, "Softmax must be the final layer");
                    expect_rank(in, 1, i, l);
                    require(in[0] >= 2, Errc::ShapeMismatch, "Softmax needs at least two classes");
                    return in;
                },
            },
            l);
        shapes.push_back(std::move(out));
    }
    return shapes;
}

std::vector<std::size_t> ModelSpec::parametric_layers() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < layers.size(); ++i)
        if (is_parametric(layers[i]))
            idx.push_back(i);
    return idx;
}

std::size_t ModelSpec::num_classes() const {
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
        if (const auto* d = std::get_if<Dense>(&*it))
            return static_cast<std::size_t>(d->out_dim);
    fail(Errc::ShapeMismatch, "model has no Dense layer to define the class count");
}

ModelSpec default_model_spec(int height, int width, int classes) {
    const Conv conv{5, 5, 3, 8, 1};
    const int fh = (height - conv.kernel_h + 1) / 2;
    const int fw = (width - conv.kernel_w + 1) / 2;
    ModelSpec spec{{conv, ReLU{}, MaxPool{2}, Flatten{}, Dense{conv.out_channels * fh * fw, classes}, Softmax{}}};
    spec.validate(image_input_shape(height, width));
    return spec;
}

namespace {

Shape weight_shape(const Layer& l) {
    if (const auto* c = std::get_if<Conv>(&l))
        return {static_cast<std::size_t>(c->out_channels), static_cast<std::size_t>(c->in_channels),
                static_cast<std::size_t>(c->kernel_h), static_cast<std::size_t>(c->kernel_w)};
    const auto& d = std::get<Dense>(l);
    return {static_cast<std::size_t>(d.out_dim), static_cast<std::size_t>(d.in_dim)};
}

std::size_t fan_in(const Layer& l) {
    const Shape w = weight_shape(l);
    return shape_size(w) / w[0];
}

} // namespace

void check_params(const ModelSpec& spec, const ModelParams& params) {
    const auto idx = spec.parametric_layers();
    require(params.layers.size() == idx.size(), Errc::ShapeMismatch,
            "model expects " + std::to_string(idx.size()) + " parametric layers, params have " +
                std::to_string(params.layers.size()));
    for (std::size_t p = 0; p < idx.size(); ++p) {
        const Shape w = weight_shape(spec.layers[idx[p]]);
        require(params.layers[p].weights.shape() == w && params.layers[p].bias.shape() == Shape{w[0]},
                Errc::ShapeMismatch,
                "parameter shapes of layer " + std::to_string(idx[p]) + " do not match " +
                    layer_name(spec.layers[idx[p]]));
    }
}

ModelParams zero_params(const ModelSpec& spec) {
    ModelParams params;
    for (std::size_t i : spec.parametric_layers()) {
        const Shape w = weight_shape(spec.layers[i]);
        params.layers.push_back({Tensor(w), Tensor({w[0]})});
    }
    return params;
}

LayerParams init_layer(const ModelSpec& spec, std::size_t layer_index, std::uint64_t seed) {
    require(layer_index < spec.layers.size() && is_parametric(spec.layers[layer_index]), Errc::InvalidArgument,
            "init_layer: layer " + std::to_string(layer_index) + " has no parameters");
    const Layer& l = spec.layers[layer_index];
    const Shape w = weight_shape(l);
    LayerParams p{Tensor(w), Tensor({w[0]})};
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in(l)));
    Rng rng(derive_seed(seed, layer_index));
    for (float& v : p.weights.values())
        v = static_cast<float>(stddev * rng.gaussian());
    return p;
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    ModelParams params;
    for (std::size_t i : spec.parametric_layers())
        params.layers.push_back(init_layer(spec, i, seed));
    return params;
}

namespace {

template <class T>
BasicTensor<T> run_layers(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input,
                          ForwardCache<T>* cache, std::size_t first_layer = 0) {
    require(params.layers.size() == spec.parametric_layers().size(), Errc::ShapeMismatch,
            "forward: parameter count does not match model");
    require(first_layer < spec.layers.size(), Errc::InvalidArgument, "forward: start layer out of range");
    BasicTensor<T> x = input;
    std::size_t p = 0;
    for (std::size_t i = 0; i < first_layer; ++i)
        p += is_parametric(spec.layers[i]) ? 1 : 0;
    if (cache) {
        cache->inputs.clear();
        cache->argmax.assign(spec.layers.size(), {});
    }
    for (std::size_t i = first_layer; i < spec.layers.size(); ++i) {
        if (cache)
            cache->inputs.push_back(x);
        const Layer& l = spec.layers[i];
        if (const auto* c = std::get_if<Conv>(&l)) {
            require(x.rank() == 3 && x.dim(0) == static_cast<std::size_t>(c->in_channels), Errc::ShapeMismatch,
                    "forward: layer " + std::to_string(i) + " got input " + shape_str(x.shape()));
            const auto& lp = params.layers[p++];
            x = conv2d_forward(x, lp.weights, lp.bias, c->stride);
        } else if (std::holds_alternative<ReLU>(l)) {
            x = relu(x);
        } else if (const auto* m = std::get_if<MaxPool>(&l)) {
            auto r = maxpool(x, m->size);
            if (cache)
                cache->argmax[i] = std::move(r.argmax);
            x = std::move(r.output);
        } else if (const auto* a = std::get_if<AvgPool>(&l)) {
            x = avgpool(x, a->size);
        } else if (std::holds_alternative<Flatten>(l)) {
            x = x.reshaped({x.size()});
        } else if (std::holds_alternative<Dense>(l)) {
            const auto& lp = params.layers[p++];
            x = dense_forward(x, lp.weights, lp.bias);
        } else {
            if (cache)
                cache->logits = x;
            x = softmax(x);
        }
    }
    return x;
}

} // namespace

template <class T>
ForwardResult<T> forward(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input) {
    ForwardResult<T> r;
    r.probs = run_layers(spec, params, input, &r.cache);
    return r;
}

template <class T>
BasicTensor<T> predict(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input) {
    return run_layers<T>(spec, params, input, nullptr);
}

template <class T>
BasicTensor<T> predict_from(const ModelSpec& spec, const BasicParams<T>& params, std::size_t first_layer,
                            const BasicTensor<T>& activation) {
    return run_layers<T>(spec, params, activation, nullptr, first_layer);
}

template <class T>
double loss(const ModelSpec& spec, const BasicParams<T>& params, const BasicTensor<T>& input, std::size_t label) {
    return cross_entropy(predict(spec, params, input), label);
}

template ForwardResult<float> forward(const ModelSpec&, const BasicParams<float>&, const BasicTensor<float>&);
template ForwardResult<double> forward(const ModelSpec&, const BasicParams<double>&, const BasicTensor<double>&);
template BasicTensor<float> predict(const ModelSpec&, const BasicParams<float>&, const BasicTensor<float>&);
template BasicTensor<double> predict(const ModelSpec&, const BasicParams<double>&, const BasicTensor<double>&);
template BasicTensor<float> predict_from(const ModelSpec&, const BasicParams<float>&, std::size_t,
                                         const BasicTensor<float>&);
template BasicTensor<double> predict_from(const ModelSpec&, const BasicParams<double>&, std::size_t,
                                          const BasicTensor<double>&);
template double loss(const ModelSpec&, const BasicParams<float>&, const BasicTensor<float>&, std::size_t);
template double loss(const ModelSpec&, const BasicParams<double>&, const BasicTensor<double>&, std::size_t);

Gradients backward(const ModelSpec& spec, const ModelParams& params, const ForwardCache<float>& cache,
                   std::size_t label) {
    require(cache.inputs.size() == spec.layers.size() && !cache.logits.empty(), Errc::ShapeMismatch,
            "backward: cache does not come from a forward pass of this model");
    const auto pidx = spec.parametric_layers();
    require(params.layers.size() == pidx.size(), Errc::ShapeMismatch,
            "backward: parameter count does not match model");
    const std::size_t first_param = pidx.empty() ? spec.layers.size() : pidx.front();

    Tensor probs = softmax(cache.logits);
    require(label < probs.size(), Errc::InvalidArgument, "backward: label out of range");
    Tensor grad = probs;
    grad[label] -= 1.0f;

    Gradients grads;
    grads.layers.resize(pidx.size());
    std::size_t p = pidx.size();
    for (std::size_t i = spec.layers.size() - 1; i-- > 0;) {
        if (i < first_param)
            break;
        const Layer& l = spec.layers[i];
        const Tensor& in = cache.inputs[i];
        const bool want_input = i > first_param;
        if (const auto* c = std::get_if<Conv>(&l)) {
            const auto& lp = params.layers[--p];
            auto g = conv2d_backward(in, lp.weights, c->stride, grad, want_input);
            grads.layers[p] = {std::move(g.weights), std::move(g.bias)};
            grad = std::move(g.input);
        } else if (std::holds_alternative<ReLU>(l)) {
            grad = relu_backward(in, grad);
        } else if (std::holds_alternative<MaxPool>(l)) {
            grad = maxpool_backward(in.shape(), cache.argmax[i], grad);
        } else if (const auto* a = std::get_if<AvgPool>(&l)) {
            grad = avgpool_backward(in.shape(), a->size, grad);
        } else if (std::holds_alternative<Flatten>(l)) {
            grad = grad.reshaped(in.shape());
        } else if (std::holds_alternative<Dense>(l)) {
            const auto& lp = params.layers[--p];
            auto g = dense_backward(in, lp.weights, grad, want_input);
            grads.layers[p] = {std::move(g.weights), std::move(g.bias)};
            grad = std::move(g.input);
        }
    }
    return grads;
}

namespace {

void check_congruent(const ModelParams& a, const Gradients& b, const char* what) {
    require(a.layers.size() == b.layers.size(), Errc::ShapeMismatch, std::string(what) + ": layer count differs");
    for (std::size_t i = 0; i < a.layers.size(); ++i)
        require(a.layers[i].weights.shape() == b.layers[i].weights.shape() &&
                    a.layers[i].bias.shape() == b.layers[i].bias.shape(),
                Errc::ShapeMismatch, std::string(what) + ": shapes differ in layer " + std::to_string(i));
}

} // namespace

void accumulate(Gradients& acc, const Gradients& g) {
    if (acc.layers.empty()) {
        acc = g;
        return;
    }
    check_congruent(acc, g, "accumulate");
    for (std::size_t i = 0; i < acc.layers.size(); ++i) {
        for (std::size_t k = 0; k < g.layers[i].weights.size(); ++k)
            acc.layers[i].weights[k] += g.layers[i].weights[k];
        for (std::size_t k = 0; k < g.layers[i].bias.size(); ++k)
            acc.layers[i].bias[k] += g.layers[i].bias[k];
    }
}

void scale(Gradients& g, float factor) {
    for (auto& l : g.layers) {
        for (float& v : l.weights.values())
            v *= factor;
        for (float& v : l.bias.values())
            v *= factor;
    }
}

void sgd_step_inplace(ModelParams& params, const Gradients& grads, std::span<const double> layer_rates) {
    check_congruent(params, grads, "sgd_step");
    require(layer_rates.size() == params.layers.size(), Errc::ShapeMismatch,
            "sgd_step: one learning rate per parametric layer required");
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        require(layer_rates[i] >= 0.0 && std::isfinite(layer_rates[i]), Errc::InvalidArgument,
                "sgd_step: learning rate must be non-negative");
        const auto lr = static_cast<float>(layer_rates[i]);
        auto& p = params.layers[i];
        const auto& g = grads.layers[i];
        for (std::size_t k = 0; k < p.weights.size(); ++k)
            p.weights[k] -= lr * g.weights[k];
        for (std::size_t k = 0; k < p.bias.size(); ++k)
            p.bias[k] -= lr * g.bias[k];
    }
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double learning_rate) {
    require(learning_rate > 0.0, Errc::InvalidArgument, "sgd_step: learning rate must be positive");
    ModelParams out = params;
    const std::vector<double> rates(params.layers.size(), learning_rate);
    sgd_step_inplace(out, grads, rates);
    return out;
}

std::size_t argmax_class(const Tensor& probs) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[best])
            best = k;
    return best;
}

} // namespace rotordiag::nn
