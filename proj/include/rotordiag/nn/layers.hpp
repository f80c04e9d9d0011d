#pragma once

#include <rotordiag/nn/tensor.hpp>

#include <cstddef>
#include <vector>

// Layer kernels. Forward passes accumulate in a fixed order so that naive
// loop implementations reproduce them bit for bit:
//   conv   out = bias; then += w * x over (c, u, v) in row-major order
//   dense  out = bias; then += w * x over i ascending
//   avg    sum over the block in row-major order, then divide
// Explicitly instantiated for float and double.

namespace rotordiag::nn {

/// Valid (unpadded) cross-correlation. input [C, H, W], weights [O, C, kh, kw],
/// bias [O] -> [O, (H - kh)/s + 1, (W - kw)/s + 1]; both divisions must be exact.
template <class T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, int stride);

template <class T>
struct ConvGrads {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    BasicTensor<T> input; // empty unless requested
};

template <class T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& weights, int stride,
                             const BasicTensor<T>& grad_out, bool want_input_grad);

template <class T>
BasicTensor<T> relu(const BasicTensor<T>& x);

/// Passes grad through where the forward input was strictly positive.
template <class T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out);

template <class T>
struct MaxPoolResult {
    BasicTensor<T> output;
    std::vector<std::size_t> argmax; // flat input index of each output's winner
};

/// Non-overlapping size x size max over [C, H, W]; ties go to the first
/// element in row-major scan order.
template <class T>
MaxPoolResult<T> maxpool(const BasicTensor<T>& x, int size);

template <class T>
BasicTensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                                const BasicTensor<T>& grad_out);

template <class T>
BasicTensor<T> avgpool(const BasicTensor<T>& x, int size);

template <class T>
BasicTensor<T> avgpool_backward(const Shape& input_shape, int size, const BasicTensor<T>& grad_out);

/// x [in], weights [out, in], bias [out] -> [out].
template <class T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                             const BasicTensor<T>& bias);

template <class T>
struct DenseGrads {
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    BasicTensor<T> input; // empty unless requested
};

template <class T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& weights,
                             const BasicTensor<T>& grad_out, bool want_input_grad);

/// Max-shifted softmax over a 1-d tensor of at least two logits.
template <class T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

inline constexpr double kCrossEntropyEpsilon = 1e-12;

/// -ln(probs[label] + 1e-12), evaluated in double.
template <class T>
double cross_entropy(const BasicTensor<T>& probs, std::size_t label);

} // namespace rotordiag::nn
