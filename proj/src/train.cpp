#include "bea/train.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "bea/detector_loss.hpp"
#include "bea/kernels.hpp"
#include "bea/rng.hpp"

namespace bea {

namespace {

struct ItemResult {
  double conv = 0.0;
  double tandem_full = 0.0;     // ta+tq, both parts
  double tandem_enabled = 0.0;  // what the switches admit into the objective
  MonitorValues monitors;
  DetectorModel::BackTrace back;
};

struct DiversityBuffers {
  FeatureMap x, y;
  FeatureMap dx, dy;
  std::vector<Tensor> d_feat_alpha, d_feat_beta;
};

}  // namespace

History train(DetectorModel& model, const std::vector<LabeledImage>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const ModelConfig& mc = model.config();
  const GridSpec& grid = mc.grid;
  const bool bea_mode = mc.bea;
  const bool use_diversity = bea_mode && cfg.diversity_kind.has_value() && cfg.weights.w_diversity > 0.0;

  History history;

  // Anchor assignments are a pure function of the GT; compute once.
  std::vector<AssignmentResult> assignments;
  assignments.reserve(dataset.size());
  for (const LabeledImage& item : dataset) {
    assignments.push_back(assign_responsibility(item.gts, grid));
    history.dropped_gts += assignments.back().dropped;
  }
  if (history.dropped_gts > 0) {
    std::cerr << "train: " << history.dropped_gts << " ground-truth boxes dropped (anchor collisions)\n";
  }

  DetectorModel::Grads grads = model.make_grads();
  DetectorModel::Velocity velocity = model.make_velocity();

  std::vector<std::size_t> indices(dataset.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;

  const int decay_epoch = static_cast<int>(std::ceil(cfg.lr_decay_at * cfg.epochs));
  const int s2 = grid.s * grid.s;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(cfg.seed, 0x5u + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = indices.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(indices[i - 1], indices[j]);
    }
    const double lr = cfg.learning_rate * (epoch >= decay_epoch ? cfg.lr_decay_factor : 1.0);

    EpochStats stats;
    stats.epoch = epoch;
    std::size_t items_seen = 0;
    std::size_t batches_seen = 0;

    for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(indices.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const int n = static_cast<int>(end - start);
      const double inv_n = 1.0 / n;

      std::vector<DetectorModel::Trace> traces(static_cast<std::size_t>(n));
      std::vector<ItemResult> results(static_cast<std::size_t>(n));
      std::vector<Tensor> act_alpha(static_cast<std::size_t>(n)), act_beta(static_cast<std::size_t>(n));

#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        model.forward(dataset[indices[start + u]].image, traces[u]);
        act_alpha[u] = activate_grid(traces[u].alpha.raw_grid, grid);
        if (bea_mode) act_beta[u] = activate_grid(traces[u].beta->raw_grid, grid);
      }

      DiversityBuffers div;
      double div_value = 0.0;
      if (use_diversity) {
        div.x = FeatureMap(n * s2, mc.head_channels, FeatureSource::alpha);
        div.y = FeatureMap(n * s2, mc.head_channels, FeatureSource::beta);
        for (int i = 0; i < n; ++i) {
          const std::size_t u = static_cast<std::size_t>(i);
          for (int p = 0; p < s2; ++p) {
            for (int c = 0; c < mc.head_channels; ++c) {
              div.x.at(i * s2 + p, c) = traces[u].alpha.post1[static_cast<std::size_t>(c) * s2 + p];
              div.y.at(i * s2 + p, c) = traces[u].beta->post1[static_cast<std::size_t>(c) * s2 + p];
            }
          }
        }
        div_value = diversity_loss(div.x, div.y, *cfg.diversity_kind);
        div.dx = FeatureMap(div.x.n, div.x.d);
        div.dy = FeatureMap(div.y.n, div.y.d);
        diversity_loss_backward(div.x, div.y, *cfg.diversity_kind, cfg.weights.w_diversity, div.dx, div.dy);
        div.d_feat_alpha.assign(static_cast<std::size_t>(n), Tensor({mc.head_channels, grid.s, grid.s}));
        div.d_feat_beta.assign(static_cast<std::size_t>(n), Tensor({mc.head_channels, grid.s, grid.s}));
        for (int i = 0; i < n; ++i) {
          const std::size_t u = static_cast<std::size_t>(i);
          for (int p = 0; p < s2; ++p) {
            for (int c = 0; c < mc.head_channels; ++c) {
              div.d_feat_alpha[u][static_cast<std::size_t>(c) * s2 + p] = div.dx.at(i * s2 + p, c);
              div.d_feat_beta[u][static_cast<std::size_t>(c) * s2 + p] = div.dy.at(i * s2 + p, c);
            }
          }
        }
      }

#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        const std::size_t u = static_cast<std::size_t>(i);
        const AssignmentResult& assign = assignments[indices[start + u]];
        ItemResult& res = results[u];

        Tensor d_act_a = Tensor::zeros_like(act_alpha[u]);
        res.conv = conventional_loss(act_alpha[u], assign.targets, assign.mask);
        conventional_loss_backward(act_alpha[u], assign.targets, assign.mask, cfg.weights.w_conv * inv_n,
                                   d_act_a);

        DetectorModel::ItemGrad ig;
        ig.d_raw_alpha = Tensor(grid.grid_shape());

        if (bea_mode) {
          Tensor d_act_b = Tensor::zeros_like(act_beta[u]);
          res.conv += conventional_loss(act_beta[u], assign.targets, assign.mask);
          conventional_loss_backward(act_beta[u], assign.targets, assign.mask, cfg.weights.w_conv * inv_n,
                                     d_act_b);

          TandemOutput pair{act_alpha[u], act_beta[u]};
          const TandemLossResult tl = tandem_loss(pair, assign.mask, cfg.weights);
          res.tandem_full = tl.l_ta + tl.l_tq;
          res.tandem_enabled = tl.total;
          tandem_loss_backward(pair, assign.mask, cfg.weights, cfg.weights.w_tandem * inv_n, d_act_a, d_act_b);
          if (cfg.monitors) res.monitors = tandem_monitor(pair, assign.mask);

          ig.d_raw_beta = Tensor(grid.grid_shape());
          activate_grid_backward(act_beta[u], d_act_b, grid, ig.d_raw_beta);
          if (use_diversity) ig.d_beta_feat = &div.d_feat_beta[u];
        }

        activate_grid_backward(act_alpha[u], d_act_a, grid, ig.d_raw_alpha);
        if (use_diversity) ig.d_alpha_feat = &div.d_feat_alpha[u];
        model.backward_item(traces[u], ig, res.back);
      }

      double batch_conv = 0.0, batch_tandem_full = 0.0, batch_tandem_enabled = 0.0;
      MonitorValues batch_mon;
      for (int i = 0; i < n; ++i) {
        const ItemResult& r = results[static_cast<std::size_t>(i)];
        batch_conv += r.conv;
        batch_tandem_full += r.tandem_full;
        batch_tandem_enabled += r.tandem_enabled;
        batch_mon.l_ta_conf += r.monitors.l_ta_conf;
        batch_mon.l_tq_conf += r.monitors.l_tq_conf;
        batch_mon.mse_alpha_beta += r.monitors.mse_alpha_beta;
      }
      const double batch_total = bea_loss(batch_conv * inv_n, batch_tandem_enabled * inv_n, div_value,
                                          cfg.weights);
      if (!std::isfinite(batch_total)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", batch starting at " << start
            << " (conv=" << batch_conv * inv_n << ", tandem=" << batch_tandem_enabled * inv_n
            << ", diversity=" << div_value << "); items:";
        for (std::size_t u = start; u < end; ++u) msg << ' ' << indices[u];
        throw std::runtime_error(msg.str());
      }

      std::vector<const DetectorModel::Trace*> trace_ptrs(static_cast<std::size_t>(n));
      std::vector<const DetectorModel::BackTrace*> back_ptrs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        trace_ptrs[static_cast<std::size_t>(i)] = &traces[static_cast<std::size_t>(i)];
        back_ptrs[static_cast<std::size_t>(i)] = &results[static_cast<std::size_t>(i)].back;
      }
      grads.zero();
      model.accumulate_param_grads(trace_ptrs, back_ptrs, grads, true);
      model.sgd_step(grads, velocity, lr, cfg.momentum);

      stats.l_conv += batch_conv;
      stats.l_tandem += batch_tandem_full;
      stats.l_diversity += div_value;
      stats.total += batch_total;
      stats.l_ta_conf += batch_mon.l_ta_conf;
      stats.l_tq_conf += batch_mon.l_tq_conf;
      stats.mse_alpha_beta += batch_mon.mse_alpha_beta;
      items_seen += static_cast<std::size_t>(n);
      ++batches_seen;
    }

    const double inv_items = 1.0 / static_cast<double>(items_seen);
    stats.l_conv *= inv_items;
    stats.l_tandem *= inv_items;
    stats.l_ta_conf *= inv_items;
    stats.l_tq_conf *= inv_items;
    stats.mse_alpha_beta *= inv_items;
    stats.l_diversity /= static_cast<double>(batches_seen);
    stats.total /= static_cast<double>(batches_seen);
    history.epochs.push_back(stats);
  }

  return history;
}

}  // namespace bea
