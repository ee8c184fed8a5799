#include "bea/tandem.hpp"

#include <cmath>
#include <stdexcept>

namespace bea {

namespace {

constexpr int kConfChannel = 4;

int grid_channels(const Tensor& t) { return t.shape().back(); }

void check_pair(const Tensor& alpha, const Tensor& beta, const ResponsibilityMask& mask) {
  if (!alpha.same_shape(beta)) throw std::invalid_argument("tandem: alpha/beta shape mismatch");
  const std::size_t anchors = alpha.size() / static_cast<std::size_t>(grid_channels(alpha));
  if (anchors != mask.size()) throw std::invalid_argument("tandem: mask does not match grid");
}

}  // namespace

double channel_tq(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                  double eps, Reduction reduction) {
  check_pair(alpha, beta, mask);
  const int ch = grid_channels(alpha);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask.obj_bits[a]) continue;
    const double d = alpha[a * ch + channel] - beta[a * ch + channel];
    total += 2.0 / std::sqrt(d * d + eps);
    ++n;
  }
  if (n == 0) return 0.0;
  return reduction == Reduction::mean ? total / static_cast<double>(n) : total;
}

double channel_ta(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                  Reduction reduction) {
  check_pair(alpha, beta, mask);
  const int ch = grid_channels(alpha);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask.obj_bits[a]) continue;
    const double d = alpha[a * ch + channel] - beta[a * ch + channel];
    total += std::sqrt(d * d) / 2.0;
    ++n;
  }
  if (n == 0) return 0.0;
  return reduction == Reduction::mean ? total / static_cast<double>(n) : total;
}

void channel_tq_backward(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                         double eps, Reduction reduction, double upstream, Tensor& d_alpha, Tensor& d_beta) {
  check_pair(alpha, beta, mask);
  const int ch = grid_channels(alpha);
  std::size_t n = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) n += mask.obj_bits[a] == 0;
  if (n == 0) return;
  const double scale = upstream * (reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0);
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask.obj_bits[a]) continue;
    const std::size_t i = a * ch + channel;
    const double d = alpha[i] - beta[i];
    // d/dd [ 2 (d^2+eps)^{-1/2} ] = -2 d (d^2+eps)^{-3/2}
    const double g = -2.0 * d / std::pow(d * d + eps, 1.5) * scale;
    d_alpha[i] += g;
    d_beta[i] -= g;
  }
}

void channel_ta_backward(const Tensor& alpha, const Tensor& beta, int channel, const ResponsibilityMask& mask,
                         Reduction reduction, double upstream, Tensor& d_alpha, Tensor& d_beta) {
  check_pair(alpha, beta, mask);
  const int ch = grid_channels(alpha);
  std::size_t n = 0;
  for (std::size_t a = 0; a < mask.size(); ++a) n += mask.obj_bits[a] != 0;
  if (n == 0) return;
  const double scale = upstream * (reduction == Reduction::mean ? 1.0 / static_cast<double>(n) : 1.0);
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask.obj_bits[a]) continue;
    const std::size_t i = a * ch + channel;
    const double d = alpha[i] - beta[i];
    const double ad = std::sqrt(d * d);
    if (ad < 1e-300) continue;  // subgradient 0 at the kink
    const double g = d / (2.0 * ad) * scale;
    d_alpha[i] += g;
    d_beta[i] -= g;
  }
}

namespace {

std::vector<int> tandem_channels(const Tensor& grid, const LossWeights& weights) {
  std::vector<int> chans = {0, 1, 2, 3, kConfChannel};
  if (weights.include_class_channels) {
    for (int c = 5; c < grid_channels(grid); ++c) chans.push_back(c);
  }
  return chans;
}

}  // namespace

TandemLossResult tandem_loss(const TandemOutput& out, const ResponsibilityMask& mask, const LossWeights& weights) {
  TandemLossResult res;
  for (int c : tandem_channels(out.alpha, weights)) {
    const double ta = channel_ta(out.alpha, out.beta, c, mask, weights.reduction);
    const double tq = channel_tq(out.alpha, out.beta, c, mask, weights.eps_tq, weights.reduction);
    res.ta_per_channel.push_back(ta);
    res.tq_per_channel.push_back(tq);
    res.l_ta += ta;
    res.l_tq += tq;
  }
  if (weights.enable_ta) res.total += res.l_ta;
  if (weights.enable_tq) res.total += res.l_tq;
  return res;
}

void tandem_loss_backward(const TandemOutput& out, const ResponsibilityMask& mask, const LossWeights& weights,
                          double upstream, Tensor& d_alpha, Tensor& d_beta) {
  for (int c : tandem_channels(out.alpha, weights)) {
    if (weights.enable_ta) {
      channel_ta_backward(out.alpha, out.beta, c, mask, weights.reduction, upstream, d_alpha, d_beta);
    }
    if (weights.enable_tq) {
      channel_tq_backward(out.alpha, out.beta, c, mask, weights.eps_tq, weights.reduction, upstream, d_alpha,
                          d_beta);
    }
  }
}

double bea_loss(double conv, double tandem, double div, const LossWeights& weights) {
  return weights.w_conv * conv + weights.w_tandem * tandem + weights.w_diversity * div;
}

MonitorValues tandem_monitor(const TandemOutput& out, const ResponsibilityMask& mask) {
  MonitorValues m;
  m.l_ta_conf = channel_ta(out.alpha, out.beta, kConfChannel, mask, Reduction::mean);
  m.l_tq_conf = channel_tq(out.alpha, out.beta, kConfChannel, mask, 1e-3, Reduction::mean);
  double sq = 0.0;
  for (std::size_t i = 0; i < out.alpha.size(); ++i) {
    const double d = out.alpha[i] - out.beta[i];
    sq += d * d;
  }
  m.mse_alpha_beta = out.alpha.size() > 0 ? sq / static_cast<double>(out.alpha.size()) : 0.0;
  return m;
}

}  // namespace bea
