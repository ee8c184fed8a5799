#pragma once

#include <vector>

#include "bea/tensor.hpp"

namespace bea::kernels {

/// 2-D convolution over a (C, H, W) map with (OC, IC, KH, KW) weights.
/// Every output element is written by exactly one thread and accumulated in
/// a fixed order, so results are bitwise identical for any thread count.
void conv2d_forward(const Tensor& in, const Tensor& weight, const std::vector<double>& bias, int stride,
                    int pad, Tensor& out, bool parallel);

/// dLoss/dInput from dLoss/dOutput.
void conv2d_backward_input(const Tensor& dout, const Tensor& weight, int stride, int pad, Tensor& din,
                           bool parallel);

/// Weight/bias gradient accumulated over a batch of (input, dOutput) pairs
/// in item order.
void conv2d_backward_params(const std::vector<const Tensor*>& ins, const std::vector<const Tensor*>& douts,
                            int stride, int pad, Tensor& dweight, std::vector<double>& dbias, bool parallel);

void leaky_relu_forward(const Tensor& in, double slope, Tensor& out);
void leaky_relu_backward(const Tensor& pre, const Tensor& dpost, double slope, Tensor& dpre);

/// SGD with momentum: v = momentum * v - lr * g; p += v.
void sgd_momentum_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr, double momentum);

int conv_out_size(int in_size, int kernel, int stride, int pad);

/// Naive loop-nest implementations kept as the ground truth the parallel
/// kernels are tested against.
namespace reference {

void conv2d_forward(const Tensor& in, const Tensor& weight, const std::vector<double>& bias, int stride,
                    int pad, Tensor& out);
void conv2d_backward_input(const Tensor& dout, const Tensor& weight, int stride, int pad, Tensor& din);
void conv2d_backward_params(const std::vector<const Tensor*>& ins, const std::vector<const Tensor*>& douts,
                            int stride, int pad, Tensor& dweight, std::vector<double>& dbias);

}  // namespace reference

}  // namespace bea::kernels
