#pragma once

#include "selfsim/tensor.hpp"

namespace selfsim::nn {

/// Causal dilated convolution with implicit zero left-padding:
///
///   y[o][t] = bias[o] + sum_i sum_j w[o][i*k + j] * x[i][t - d*j]
///
/// `x` is C_in x N, `w` is C_out x (C_in * k), `bias` is C_out x 1 (may be empty).
/// Terms with t - d*j < 0 are skipped. Summation runs bias, then i, then j, so two
/// calls reading the same values produce bit-identical outputs.
[[nodiscard]] Tensor causal_dilated_conv(const Tensor& x, const Tensor& w, const Tensor& bias,
                                         std::size_t kernel, std::size_t dilation);

/// Gradient contributions of causal_dilated_conv, accumulated into dx/dw/dbias.
/// Null pointers skip that output.
void causal_dilated_conv_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t kernel,
                                  std::size_t dilation, Tensor* dx, Tensor* dw, Tensor* dbias);

/// Weights of one gated residual block: two dilated convs (tanh / sigmoid branch)
/// and the 1x1 output projection, all with biases.
struct BlockWeights {
    Tensor w_tanh;
    Tensor b_tanh;
    Tensor w_sig;
    Tensor b_sig;
    Tensor w_out;
    Tensor b_out;
};

/// x + W_o(tanh(W_tanh *_d x) ⊙ σ(W_sig *_d x)), evaluated without a tape.
[[nodiscard]] Tensor gated_residual_block(const Tensor& x, const BlockWeights& w, std::size_t kernel,
                                          std::size_t dilation);

[[nodiscard]] double sigmoid(double v);

}  // namespace selfsim::nn
