#include "bea/predict.hpp"

#include <algorithm>
#include <stdexcept>

#include "bea/metrics.hpp"

namespace bea {

TandemOutput forward_bea(const DetectorModel& model, const Tensor& image) {
  if (!model.is_bea()) throw std::invalid_argument("forward_bea: model has a single head");
  DetectorModel::Trace trace;
  model.forward(image, trace);
  TandemOutput out;
  out.alpha = activate_grid(trace.alpha.raw_grid, model.config().grid);
  out.beta = activate_grid(trace.beta->raw_grid, model.config().grid);
  return out;
}

Tensor forward_single(const DetectorModel& model, const Tensor& image) {
  DetectorModel::Trace trace;
  model.forward(image, trace);
  return activate_grid(trace.alpha.raw_grid, model.config().grid);
}

ImagePrediction aggregate_and_predict(const TandemOutput& out, const GridSpec& grid, double conf_floor,
                                      double nms_thresh) {
  ImagePrediction pred;
  pred.u_ood = u_ood_image(out);

  std::vector<Detection> candidates;
  for (int row = 0; row < grid.s; ++row) {
    for (int col = 0; col < grid.s; ++col) {
      for (int a = 0; a < grid.b; ++a) {
        const Detection da = anchor_detection(out.alpha, grid, row, col, a);
        const Detection db = anchor_detection(out.beta, grid, row, col, a);
        Detection agg;
        agg.box = average_boxes(da.box, db.box);
        agg.confidence = std::max(da.confidence, db.confidence);
        agg.class_probs.resize(da.class_probs.size());
        for (std::size_t c = 0; c < agg.class_probs.size(); ++c) {
          agg.class_probs[c] = std::max(da.class_probs[c], db.class_probs[c]);
        }
        agg.class_id = argmax_class(agg.class_probs);
        if (agg.confidence >= conf_floor) candidates.push_back(std::move(agg));
      }
    }
  }
  pred.detections = nms(candidates, nms_thresh);
  return pred;
}

ImagePrediction predict_single_grid(const Tensor& activated, const GridSpec& grid, double conf_floor,
                                    double nms_thresh) {
  ImagePrediction pred;
  std::vector<Detection> candidates;
  double max_conf = 0.0;
  for (int row = 0; row < grid.s; ++row) {
    for (int col = 0; col < grid.s; ++col) {
      for (int a = 0; a < grid.b; ++a) {
        Detection det = anchor_detection(activated, grid, row, col, a);
        max_conf = std::max(max_conf, det.confidence);
        if (det.confidence >= conf_floor) candidates.push_back(std::move(det));
      }
    }
  }
  pred.u_ood = 1.0 - max_conf;
  pred.detections = nms(candidates, nms_thresh);
  return pred;
}

std::vector<ImagePrediction> predict_dataset(const DetectorModel& model, const std::vector<Tensor>& images,
                                             double conf_floor, double nms_thresh) {
  std::vector<ImagePrediction> preds(images.size());
  const GridSpec& grid = model.config().grid;
  const int n = static_cast<int>(images.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    if (model.is_bea()) {
      preds[u] = aggregate_and_predict(forward_bea(model, images[u]), grid, conf_floor, nms_thresh);
    } else {
      preds[u] = predict_single_grid(forward_single(model, images[u]), grid, conf_floor, nms_thresh);
    }
  }
  return preds;
}

std::vector<ImagePrediction> predict_dataset_alpha_only(const DetectorModel& model,
                                                        const std::vector<Tensor>& images, double conf_floor,
                                                        double nms_thresh) {
  std::vector<ImagePrediction> preds(images.size());
  const GridSpec& grid = model.config().grid;
  const int n = static_cast<int>(images.size());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    preds[u] = predict_single_grid(forward_single(model, images[u]), grid, conf_floor, nms_thresh);
  }
  return preds;
}

}  // namespace bea
