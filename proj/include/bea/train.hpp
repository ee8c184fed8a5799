#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bea/dataset.hpp"
#include "bea/diversity.hpp"
#include "bea/model.hpp"
#include "bea/tandem.hpp"

namespace bea {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::uint64_t seed = 1;
  LossWeights weights;
  std::optional<DiversityKind> diversity_kind;
  double lr_decay_factor = 0.1;
  double lr_decay_at = 0.8;  // fraction of epochs after which lr decays
  bool monitors = true;      // record observation-only tandem monitors
};

struct EpochStats {
  int epoch = 0;
  double l_conv = 0.0;
  double l_tandem = 0.0;  // full ta+tq value, recorded even when not trained
  double l_diversity = 0.0;
  double total = 0.0;  // trained objective
  double l_ta_conf = 0.0;
  double l_tq_conf = 0.0;
  double mse_alpha_beta = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
  int dropped_gts = 0;  // GTs that found no free anchor at assignment
};

/// Minimizes the composed loss with SGD + momentum. Batch items run in
/// parallel; gradient reductions accumulate in a fixed order, so a given
/// (config, seed) yields a bitwise-identical trajectory for any thread
/// count. Throws on a non-finite loss with a diagnostic of the offending
/// batch.
History train(DetectorModel& model, const std::vector<LabeledImage>& dataset, const TrainConfig& cfg);

}  // namespace bea
