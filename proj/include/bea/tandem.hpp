#pragma once

#include <array>
#include <vector>

#include "bea/geometry.hpp"
#include "bea/tensor.hpp"

namespace bea {

/// Paired activated prediction grids from the two tandem heads.
/// Channel layout per anchor: (x, y, w, h, conf, class...).
struct TandemOutput {
  Tensor alpha;
  Tensor beta;
};

enum class Reduction { mean, sum };

struct LossWeights {
  double w_conv = 1.0;
  double w_tandem = 1.0;
  double w_diversity = 0.0;
  bool enable_ta = true;
  bool enable_tq = true;
  double eps_tq = 1e-3;
  // mean decouples the loss magnitude from grid size; sum keeps the literal
  // double-sum reduction.
  Reduction reduction = Reduction::mean;
  // The tandem channel set is (x, y, w, h, conf); this optionally extends it
  // to the per-class probabilities.
  bool include_class_channels = false;
};

/// Tandem-quelling term for one channel: mean (or sum) over noobj anchors of
/// 2 / sqrt((alpha - beta)^2 + eps). 0 when no anchor is noobj.
double channel_tq(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                  double eps, Reduction reduction = Reduction::mean);

/// Tandem-aiding term for one channel: mean (or sum) over obj anchors of
/// sqrt((alpha - beta)^2) / 2. 0 when no anchor is obj.
double channel_ta(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                  Reduction reduction = Reduction::mean);

/// Accumulates d(channel_tq)/d(alpha) and /d(beta), scaled by `upstream`.
void channel_tq_backward(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                         double eps, Reduction reduction, double upstream, Tensor& d_alpha, Tensor& d_beta);
void channel_ta_backward(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                         Reduction reduction, double upstream, Tensor& d_alpha, Tensor& d_beta);

struct TandemLossResult {
  double total = 0.0;  // enabled parts only
  double l_ta = 0.0;   // always computed
  double l_tq = 0.0;
  std::vector<double> ta_per_channel;
  std::vector<double> tq_per_channel;
};

/// Tandem loss over the channel set (x, y, w, h, conf), optionally extended
/// with class channels. Both parts are always reported; only the enabled
/// parts contribute to `total`.
TandemLossResult tandem_loss(const TandemOutput& out, const ResponsibilityMask& mask, const LossWeights& weights);

/// Gradient of the enabled tandem-loss parts, scaled by `upstream`.
void tandem_loss_backward(const TandemOutput& out, const ResponsibilityMask& mask, const LossWeights& weights,
                          double upstream, Tensor& d_alpha, Tensor& d_beta);

/// w_conv * conv + w_tandem * tandem + w_diversity * div.
double bea_loss(double conv, double tandem, double div, const LossWeights& weights);

/// Observation-only training monitors: confidence-channel tandem terms and
/// the elementwise MSE between the full alpha and beta grids.
struct MonitorValues {
  double l_ta_conf = 0.0;
  double l_tq_conf = 0.0;
  double mse_alpha_beta = 0.0;
};

MonitorValues tandem_monitor(const TandemOutput& out, const ResponsibilityMask& mask);

}  // namespace bea
