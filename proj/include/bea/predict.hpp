#pragma once

#include <vector>

#include "bea/geometry.hpp"
#include "bea/model.hpp"
#include "bea/tandem.hpp"

namespace bea {

/// Activated tandem grids for one image. Throws when the model is not BEA.
TandemOutput forward_bea(const DetectorModel& model, const Tensor& image);

/// Activated single-head grid (alpha) for one image.
Tensor forward_single(const DetectorModel& model, const Tensor& image);

struct ImagePrediction {
  std::vector<Detection> detections;
  double u_ood = 0.0;
};

/// Tandem aggregation: per anchor the boxes are averaged and objectness /
/// class scores take the elementwise max; the image's u_ood is captured from
/// the raw tandem pair before aggregation. Anchors below conf_floor are
/// dropped, survivors go through NMS.
ImagePrediction aggregate_and_predict(const TandemOutput& out, const GridSpec& grid, double conf_floor,
                                      double nms_thresh);

/// Single-detector path: confidence thresholding plus NMS; u_ood falls back
/// to 1 - max confidence over the grid.
ImagePrediction predict_single_grid(const Tensor& activated, const GridSpec& grid, double conf_floor,
                                    double nms_thresh);

/// Per-image inference over a dataset (parallel across images).
std::vector<ImagePrediction> predict_dataset(const DetectorModel& model, const std::vector<Tensor>& images,
                                             double conf_floor, double nms_thresh);

/// Alpha-head-only predictions from a BEA model (aggregation ablation).
std::vector<ImagePrediction> predict_dataset_alpha_only(const DetectorModel& model,
                                                        const std::vector<Tensor>& images, double conf_floor,
                                                        double nms_thresh);

}  // namespace bea
