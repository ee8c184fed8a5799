#include "bea/detector_loss.hpp"

#include <algorithm>
#include <cmath>

namespace bea {

double bce(double p, double target, double clamp) {
  const double q = std::clamp(p, clamp, 1.0 - clamp);
  return -(target * std::log(q) + (1.0 - target) * std::log(1.0 - q));
}

double bce_grad(double p, double target, double clamp) {
  if (p < clamp || p > 1.0 - clamp) return 0.0;  // clamped region
  return (p - target) / (p * (1.0 - p));
}

double conventional_loss(const Tensor& activated, const Tensor& targets, const ResponsibilityMask& mask) {
  const int ch = activated.shape().back();
  const int k = ch - 5;
  double loss = 0.0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    const double* act = activated.data() + a * ch;
    if (mask.obj_bits[a]) {
      const double* t = targets.data() + a * ch;
      for (int c = 0; c < 4; ++c) {
        const double d = act[c] - t[c];
        loss += d * d;
      }
      loss += bce(act[4], 1.0);
      for (int c = 0; c < k; ++c) loss += bce(act[5 + c], t[5 + c]);
    } else {
      loss += bce(act[4], 0.0);
    }
  }
  return loss;
}

void conventional_loss_backward(const Tensor& activated, const Tensor& targets, const ResponsibilityMask& mask,
                                double upstream, Tensor& d_activated) {
  const int ch = activated.shape().back();
  const int k = ch - 5;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    const double* act = activated.data() + a * ch;
    double* d = d_activated.data() + a * ch;
    if (mask.obj_bits[a]) {
      const double* t = targets.data() + a * ch;
      for (int c = 0; c < 4; ++c) d[c] += upstream * 2.0 * (act[c] - t[c]);
      d[4] += upstream * bce_grad(act[4], 1.0);
      for (int c = 0; c < k; ++c) d[5 + c] += upstream * bce_grad(act[5 + c], t[5 + c]);
    } else {
      d[4] += upstream * bce_grad(act[4], 0.0);
    }
  }
}

}  // namespace bea
