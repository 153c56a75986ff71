#include "selfsim/conv.hpp"

#include <cmath>
#include <string>

namespace selfsim::nn {

namespace {

void check_conv_shapes(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t kernel,
                       std::size_t dilation) {
    if (kernel == 0 || dilation == 0) throw std::invalid_argument("kernel and dilation must be positive");
    if (w.cols() != x.rows() * kernel) {
        throw std::invalid_argument("conv weight has " + std::to_string(w.cols()) + " columns, expected " +
                                    std::to_string(x.rows() * kernel));
    }
    if (bias.size() != 0 && bias.size() != w.rows()) {
        throw std::invalid_argument("conv bias length does not match output channels");
    }
}

}  // namespace

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor causal_dilated_conv(const Tensor& x, const Tensor& w, const Tensor& bias, std::size_t kernel,
                           std::size_t dilation) {
    check_conv_shapes(x, w, bias, kernel, dilation);
    const std::size_t n = x.cols();
    const std::size_t cin = x.rows();
    Tensor y(w.rows(), n);
    for (std::size_t o = 0; o < w.rows(); ++o) {
        double* yo = y.row(o);
        if (bias.size() != 0) {
            for (std::size_t t = 0; t < n; ++t) yo[t] = bias[o];
        }
        const double* wo = w.row(o);
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.row(i);
            for (std::size_t j = 0; j < kernel; ++j) {
                const double wij = wo[i * kernel + j];
                const std::size_t shift = dilation * j;
                for (std::size_t t = shift; t < n; ++t) yo[t] += wij * xi[t - shift];
            }
        }
    }
    return y;
}

void causal_dilated_conv_backward(const Tensor& x, const Tensor& w, const Tensor& dy, std::size_t kernel,
                                  std::size_t dilation, Tensor* dx, Tensor* dw, Tensor* dbias) {
    const std::size_t n = x.cols();
    const std::size_t cin = x.rows();
    for (std::size_t o = 0; o < w.rows(); ++o) {
        const double* g = dy.row(o);
        if (dbias != nullptr && dbias->size() != 0) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += g[t];
            (*dbias)[o] += s;
        }
        const double* wo = w.row(o);
        for (std::size_t i = 0; i < cin; ++i) {
            const double* xi = x.row(i);
            for (std::size_t j = 0; j < kernel; ++j) {
                const std::size_t shift = dilation * j;
                if (shift >= n) continue;
                if (dw != nullptr) {
                    double s = 0.0;
                    for (std::size_t t = shift; t < n; ++t) s += g[t] * xi[t - shift];
                    dw->row(o)[i * kernel + j] += s;
                }
                if (dx != nullptr) {
                    const double wij = wo[i * kernel + j];
                    double* dxi = dx->row(i);
                    for (std::size_t t = shift; t < n; ++t) dxi[t - shift] += wij * g[t];
                }
            }
        }
    }
}

Tensor gated_residual_block(const Tensor& x, const BlockWeights& w, std::size_t kernel, std::size_t dilation) {
    const Tensor a = causal_dilated_conv(x, w.w_tanh, w.b_tanh, kernel, dilation);
    const Tensor b = causal_dilated_conv(x, w.w_sig, w.b_sig, kernel, dilation);
    Tensor gated(a.rows(), a.cols());
    for (std::size_t i = 0; i < gated.size(); ++i) gated[i] = std::tanh(a[i]) * sigmoid(b[i]);
    Tensor out = causal_dilated_conv(gated, w.w_out, w.b_out, 1, 1);
    if (!out.same_shape(x)) throw std::invalid_argument("residual block channel mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + out[i];
    return out;
}

}  // namespace selfsim::nn
