#include <rotordiag/nn/layers.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rotordiag::nn {

std::string shape_str(const Shape& s) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < s.size(); ++i)
        out << (i ? ", " : "") << s[i];
    out << ']';
    return out.str();
}

namespace {

std::size_t pooled_extent(std::size_t extent, int size, const char* op) {
    require(size >= 1, Errc::InvalidArgument, std::string(op) + ": pool size must be positive");
    require(extent % static_cast<std::size_t>(size) == 0, Errc::ShapeMismatch,
            std::string(op) + ": extent " + std::to_string(extent) + " not divisible by " +
                std::to_string(size));
    return extent / static_cast<std::size_t>(size);
}

std::size_t conv_extent(std::size_t extent, std::size_t kernel, int stride) {
    require(stride >= 1, Errc::InvalidArgument, "conv2d: stride must be >= 1");
    require(kernel <= extent, Errc::ShapeMismatch, "conv2d: kernel larger than input");
    require((extent - kernel) % static_cast<std::size_t>(stride) == 0, Errc::ShapeMismatch,
            "conv2d: (extent - kernel) not divisible by stride");
    return (extent - kernel) / static_cast<std::size_t>(stride) + 1;
}

template <class T>
void check_rank(const BasicTensor<T>& t, std::size_t rank, const char* what) {
    require(t.rank() == rank, Errc::ShapeMismatch,
            std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(t.shape()));
}

} // namespace

template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, int stride) {
    check_rank(input, 3, "conv2d input");
    check_rank(weights, 4, "conv2d weights");
    const std::size_t channels = input.dim(0), height = input.dim(1), width = input.dim(2);
    const std::size_t out_c = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    require(weights.dim(1) == channels, Errc::ShapeMismatch,
            "conv2d: weights expect " + std::to_string(weights.dim(1)) + " input channels, got " +
                std::to_string(channels));
    require(bias.rank() == 1 && bias.dim(0) == out_c, Errc::ShapeMismatch, "conv2d: bias shape");
    const std::size_t oh = conv_extent(height, kh, stride);
    const std::size_t ow = conv_extent(width, kw, stride);
    const auto s = static_cast<std::size_t>(stride);

    BasicTensor<T> out({out_c, oh, ow});
    for (std::size_t o = 0; o < out_c; ++o) {
        T* plane = &out.at(o, 0, 0);
        std::fill(plane, plane + oh * ow, bias[o]);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t u = 0; u < kh; ++u)
                for (std::size_t v = 0; v < kw; ++v) {
                    const T w = weights.at(o, c, u, v);
                    for (std::size_t i = 0; i < oh; ++i) {
                        const T* src = &input.at(c, i * s + u, v);
                        T* dst = plane + i * ow;
                        for (std::size_t j = 0; j < ow; ++j)
                            dst[j] += w * src[j * s];
                    }
                }
    }
    return out;
}

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights, int stride,
                             const BasicTensor<T>& grad_out, bool want_input_grad) {
    check_rank(grad_out, 3, "conv2d grad");
    const std::size_t channels = input.dim(0);
    const std::size_t out_c = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
    const std::size_t oh = grad_out.dim(1), ow = grad_out.dim(2);
    require(grad_out.dim(0) == out_c && oh == conv_extent(input.dim(1), kh, stride) &&
                ow == conv_extent(input.dim(2), kw, stride),
            Errc::ShapeMismatch, "conv2d backward: gradient shape " + shape_str(grad_out.shape()));
    const auto s = static_cast<std::size_t>(stride);

    ConvGrads<T> g{BasicTensor<T>(weights.shape()), BasicTensor<T>({out_c}), {}};
    if (want_input_grad)
        g.input = BasicTensor<T>(input.shape());

    for (std::size_t o = 0; o < out_c; ++o) {
        const T* go = &grad_out.at(o, 0, 0);
        T db{};
        for (std::size_t i = 0; i < oh * ow; ++i)
            db += go[i];
        g.bias[o] = db;
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t u = 0; u < kh; ++u)
                for (std::size_t v = 0; v < kw; ++v) {
                    T acc{};
                    for (std::size_t i = 0; i < oh; ++i) {
                        const T* src = &input.at(c, i * s + u, v);
                        const T* gr = go + i * ow;
                        for (std::size_t j = 0; j < ow; ++j)
                            acc += gr[j] * src[j * s];
                    }
                    g.weights.at(o, c, u, v) = acc;
                    if (want_input_grad) {
                        const T w = weights.at(o, c, u, v);
                        for (std::size_t i = 0; i < oh; ++i) {
                            T* dst = &g.input.at(c, i * s + u, v);
                            const T* gr = go + i * ow;
                            for (std::size_t j = 0; j < ow; ++j)
                                dst[j * s] += w * gr[j];
                        }
                    }
                }
    }
    return g;
}

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
    BasicTensor<T> out = x;
    for (T& v : out.values())
        v = std::max(v, T{0});
    return out;
}

template <class T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
    require(input.shape() == grad_out.shape(), Errc::ShapeMismatch, "relu backward: shape mismatch");
    BasicTensor<T> g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(input[i] > T{0}))
            g[i] = T{0};
    return g;
}

template <class T>
MaxPoolResult<T> maxpool(const BasicTensor<T>& x, int size) {
    check_rank(x, 3, "maxpool");
    require(size >= 2, Errc::InvalidArgument, "maxpool: size must be >= 2");
    const std::size_t channels = x.dim(0);
    const std::size_t oh = pooled_extent(x.dim(1), size, "maxpool");
    const std::size_t ow = pooled_extent(x.dim(2), size, "maxpool");
    const auto k = static_cast<std::size_t>(size);

    MaxPoolResult<T> r{BasicTensor<T>({channels, oh, ow}), std::vector<std::size_t>(channels * oh * ow)};
    std::size_t out_i = 0;
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j, ++out_i) {
                std::size_t best = (c * x.dim(1) + i * k) * x.dim(2) + j * k;
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v) {
                        const std::size_t idx = (c * x.dim(1) + i * k + u) * x.dim(2) + j * k + v;
                        if (x[idx] > x[best])
                            best = idx;
                    }
                r.output[out_i] = x[best];
                r.argmax[out_i] = best;
            }
    return r;
}

template <class T>
BasicTensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                                const BasicTensor<T>& grad_out) {
    require(argmax.size() == grad_out.size(), Errc::ShapeMismatch, "maxpool backward: argmax/grad size");
    BasicTensor<T> g(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i)
        g[argmax[i]] += grad_out[i];
    return g;
}

template <class T>
BasicTensor<T> avgpool(const BasicTensor<T>& x, int size) {
    check_rank(x, 3, "avgpool");
    require(size >= 2, Errc::InvalidArgument, "avgpool: size must be >= 2");
    const std::size_t channels = x.dim(0);
    const std::size_t oh = pooled_extent(x.dim(1), size, "avgpool");
    const std::size_t ow = pooled_extent(x.dim(2), size, "avgpool");
    const auto k = static_cast<std::size_t>(size);
    const T area = static_cast<T>(k * k);

    BasicTensor<T> out({channels, oh, ow});
    for (std::size_t c = 0; c < channels; ++c)
        for (std::size_t i = 0; i < oh; ++i)
            for (std::size_t j = 0; j < ow; ++j) {
                T sum{};
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v)
                        sum += x.at(c, i * k + u, j * k + v);
                out.at(c, i, j) = sum / area;
            }
    return out;
}

template <class T>
BasicTensor<T> avgpool_backward(const Shape& input_shape, int size, const BasicTensor<T>& grad_out) {
    require(input_shape.size() == 3 && grad_out.rank() == 3, Errc::ShapeMismatch, "avgpool backward: rank");
    const auto k = static_cast<std::size_t>(size);
    require(grad_out.dim(1) * k == input_shape[1] && grad_out.dim(2) * k == input_shape[2],
            Errc::ShapeMismatch, "avgpool backward: shape mismatch");
    const T area = static_cast<T>(k * k);
    BasicTensor<T> g(input_shape);
    for (std::size_t c = 0; c < grad_out.dim(0); ++c)
        for (std::size_t i = 0; i < grad_out.dim(1); ++i)
            for (std::size_t j = 0; j < grad_out.dim(2); ++j) {
                const T share = grad_out.at(c, i, j) / area;
                for (std::size_t u = 0; u < k; ++u)
                    for (std::size_t v = 0; v < k; ++v)
                        g.at(c, i * k + u, j * k + v) = share;
            }
    return g;
}

template <class T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& weights, const BasicTensor<T>& bias) {
    check_rank(x, 1, "dense input");
    check_rank(weights, 2, "dense weights");
    const std::size_t out_dim = weights.dim(0), in_dim = weights.dim(1);
    require(x.dim(0) == in_dim, Errc::ShapeMismatch,
            "dense: expected " + std::to_string(in_dim) + " inputs, got " + std::to_string(x.dim(0)));
    require(bias.rank() == 1 && bias.dim(0) == out_dim, Errc::ShapeMismatch, "dense: bias shape");
    BasicTensor<T> out({out_dim});
    for (std::size_t o = 0; o < out_dim; ++o) {
        const T* w = weights.data() + o * in_dim;
        T acc = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i)
            acc += w[i] * x[i];
        out[o] = acc;
    }
    return out;
}

template <class T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad) {
    const std::size_t out_dim = weights.dim(0), in_dim = weights.dim(1);
    require(x.size() == in_dim && grad_out.size() == out_dim, Errc::ShapeMismatch,
            "dense backward: shape mismatch");
    DenseGrads<T> g{BasicTensor<T>(weights.shape()), grad_out, {}};
    for (std::size_t o = 0; o < out_dim; ++o) {
        T* gw = g.weights.data() + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i)
            gw[i] = grad_out[o] * x[i];
    }
    if (want_input_grad) {
        g.input = BasicTensor<T>({in_dim});
        for (std::size_t o = 0; o < out_dim; ++o) {
            const T* w = weights.data() + o * in_dim;
            for (std::size_t i = 0; i < in_dim; ++i)
                g.input[i] += w[i] * grad_out[o];
        }
    }
    return g;
}

template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
    require(logits.rank() == 1 && logits.size() >= 2, Errc::ShapeMismatch,
            "softmax: expected at least two logits");
    const T m = *std::max_element(logits.values().begin(), logits.values().end());
    BasicTensor<T> p(logits.shape());
    T sum{};
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] = std::exp(logits[k] - m);
        sum += p[k];
    }
    for (T& v : p.values())
        v /= sum;
    return p;
}

template <class T>
double cross_entropy(const BasicTensor<T>& probs, std::size_t label) {
    require(label < probs.size(), Errc::InvalidArgument,
            "cross_entropy: label " + std::to_string(label) + " out of range for " +
                std::to_string(probs.size()) + " classes");
    return -std::log(static_cast<double>(probs[label]) + kCrossEntropyEpsilon);
}

#define ROTORDIAG_INSTANTIATE_LAYERS(T)                                                                      \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                           const BasicTensor<T>&, int);                                      \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, int,                \
                                          const BasicTensor<T>&, bool);                                      \
    template BasicTensor<T> relu(const BasicTensor<T>&);                                                     \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                     \
    template MaxPoolResult<T> maxpool(const BasicTensor<T>&, int);                                           \
    template BasicTensor<T> maxpool_backward(const Shape&, const std::vector<std::size_t>&,                  \
                                             const BasicTensor<T>&);                                         \
    template BasicTensor<T> avgpool(const BasicTensor<T>&, int);                                             \
    template BasicTensor<T> avgpool_backward(const Shape&, int, const BasicTensor<T>&);                     \
    template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                                          const BasicTensor<T>&);                                            \
    template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&,                     \
                                          const BasicTensor<T>&, bool);                                      \
    template BasicTensor<T> softmax(const BasicTensor<T>&);                                                  \
    template double cross_entropy(const BasicTensor<T>&, std::size_t);

ROTORDIAG_INSTANTIATE_LAYERS(float)
ROTORDIAG_INSTANTIATE_LAYERS(double)

#undef ROTORDIAG_INSTANTIATE_LAYERS

} // namespace rotordiag::nn
