#pragma once

#include <utility>
#include <vector>

#include "bea/geometry.hpp"
#include "bea/tandem.hpp"

namespace bea {

/// Detection with its match verdict (member of D_c vs D_i) and predicted
/// uncertainty u_pred = 1 - confidence.
struct EvaluatedDetection {
  Detection detection;
  bool matched = false;
  double u_pred = 1.0;
  int image_id = 0;
};

/// Eq. complement-of-confidence uncertainty.
double u_pred(double confidence);

/// Greedy matching in descending score order: each detection claims the
/// unclaimed same-class GT with highest IoU >= iou_thresh (ties toward the
/// lower GT index). Output is sorted by descending score.
std::vector<EvaluatedDetection> match_detections(const std::vector<Detection>& dets,
                                                 const std::vector<GroundTruth>& gts, double iou_thresh,
                                                 int image_id = 0);

/// All-point interpolated average precision of a score-ranked detection
/// list. n_gt == 0: 1.0 with no detections, else 0.0.
double average_precision(const std::vector<EvaluatedDetection>& evaluated, int n_gt);

/// Class-averaged AP at fixed match flags; classes without GT are skipped.
double ap50_from_evaluated(const std::vector<EvaluatedDetection>& evaluated,
                           const std::vector<int>& gt_per_class);

std::vector<double> default_iou_thresholds();  // 0.50:0.05:0.95

struct MeanApResult {
  double map = 0.0;
  double ap50 = 0.0;
};

/// AP averaged over classes then thresholds (mAP), plus the 0.50-only AP50.
/// Matching is redone per threshold, per image.
MeanApResult mean_ap(const std::vector<std::vector<Detection>>& dets_per_image,
                     const std::vector<std::vector<GroundTruth>>& gts_per_image, int num_classes,
                     const std::vector<double>& thresholds = default_iou_thresholds());

struct UncertaintyErrorResult {
  double ue = 0.0;
  double delta_opt = 0.0;
  double tprj = 0.0;  // correct detections rejected at delta_opt
  double fprt = 0.0;  // incorrect detections retained at delta_opt
};

/// Minimizes (TPRj + FPRt)/2 over candidate thresholds: midpoints between
/// consecutive sorted unique u_pred values plus one value below the min and
/// one above the max; ties resolve to the smallest delta.
/// Throws std::invalid_argument when D_c or D_i is empty.
UncertaintyErrorResult uncertainty_error(const std::vector<EvaluatedDetection>& evaluated);

/// Binary entropy in nats with probability clamped to [clamp, 1-clamp].
double binary_entropy(double p, double clamp = 1e-7);

/// Per-image OOD score: mean over anchors of B(s,b) * H(s,b), where B is the
/// l2 disagreement over (x, y, w, h, conf) and H the l2 gap of per-class
/// binary entropies between the tandem heads.
double u_ood_image(const TandemOutput& out);

struct RetentionCurve {
  std::vector<double> fractions;
  std::vector<double> ap50_values;
  double auc = 0.0;
};

std::vector<double> default_retention_fractions();  // 0.05:0.05:1.00

/// AP50 of the ceil(f*N) lowest-uncertainty detections (ties keep the higher
/// score first) against the full GT, per fraction; auc is the trapezoid area
/// normalized by the fraction span.
RetentionCurve retention_curve(const std::vector<EvaluatedDetection>& evaluated,
                               const std::vector<int>& gt_per_class,
                               const std::vector<double>& fractions = default_retention_fractions());

struct OodScore {
  int image_id = 0;
  double u_ood = 0.0;
  bool is_ood = false;
};

/// Mann-Whitney statistic: P(u_ood(ood) > u_ood(in)) + P(tie)/2.
/// Throws std::invalid_argument unless both labels are present.
double roc_auc(const std::vector<OodScore>& scores);

/// (FPR, TPR) sweep for plotting, from (0,0) to (1,1).
std::vector<std::pair<double, double>> roc_curve(const std::vector<OodScore>& scores);

}  // namespace bea
