#pragma once

#include "bea/geometry.hpp"
#include "bea/tensor.hpp"

namespace bea {

/// YOLO-style conventional loss over one activated grid, summed over
/// anchors: obj anchors get squared error on (x, y, w, h), BCE pulling
/// confidence to 1 and per-class BCE toward the one-hot target; noobj
/// anchors get BCE pulling confidence to 0.
double conventional_loss(const Tensor& activated, const Tensor& targets, const ResponsibilityMask& mask);

/// Accumulates d(conventional_loss)/d(activated), scaled by `upstream`.
void conventional_loss_backward(const Tensor& activated, const Tensor& targets, const ResponsibilityMask& mask,
                                double upstream, Tensor& d_activated);

/// Binary cross-entropy with probability clamped to [clamp, 1-clamp].
double bce(double p, double target, double clamp = 1e-7);
double bce_grad(double p, double target, double clamp = 1e-7);

}  // namespace bea
