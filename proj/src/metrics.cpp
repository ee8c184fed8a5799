#include "bea/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bea {

double u_pred(double confidence) { return 1.0 - confidence; }

std::vector<EvaluatedDetection> match_detections(const std::vector<Detection>& dets,
                                                 const std::vector<GroundTruth>& gts, double iou_thresh,
                                                 int image_id) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score() > dets[b].score(); });

  std::vector<bool> claimed(gts.size(), false);
  std::vector<EvaluatedDetection> out;
  out.reserve(dets.size());
  for (std::size_t i : order) {
    const Detection& det = dets[i];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g] || gts[g].class_id != det.class_id) continue;
      const double v = iou(det.box, gts[g].box);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(g);
      }
    }
    EvaluatedDetection ev;
    ev.detection = det;
    ev.matched = best_gt >= 0;
    ev.u_pred = u_pred(det.confidence);
    ev.image_id = image_id;
    if (best_gt >= 0) claimed[static_cast<std::size_t>(best_gt)] = true;
    out.push_back(std::move(ev));
  }
  return out;
}

double average_precision(const std::vector<EvaluatedDetection>& evaluated, int n_gt) {
  if (n_gt == 0) return evaluated.empty() ? 1.0 : 0.0;
  if (evaluated.empty()) return 0.0;

  std::vector<std::size_t> order(evaluated.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return evaluated[a].detection.score() > evaluated[b].detection.score();
  });

  std::vector<double> precision(order.size()), recall(order.size());
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    evaluated[order[i]].matched ? ++tp : ++fp;
    precision[i] = static_cast<double>(tp) / (tp + fp);
    recall[i] = static_cast<double>(tp) / n_gt;
  }
  // precision envelope, then area under the stepwise PR curve
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i) {
    const std::size_t u = static_cast<std::size_t>(i);
    precision[u] = std::max(precision[u], precision[u + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double ap50_from_evaluated(const std::vector<EvaluatedDetection>& evaluated,
                           const std::vector<int>& gt_per_class) {
  double sum = 0.0;
  int classes = 0;
  for (std::size_t c = 0; c < gt_per_class.size(); ++c) {
    if (gt_per_class[c] == 0) continue;
    std::vector<EvaluatedDetection> cls;
    for (const EvaluatedDetection& ev : evaluated) {
      if (ev.detection.class_id == static_cast<int>(c)) cls.push_back(ev);
    }
    sum += average_precision(cls, gt_per_class[c]);
    ++classes;
  }
  if (classes == 0) return evaluated.empty() ? 1.0 : 0.0;
  return sum / classes;
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.50 + 0.05 * i);
  return t;
}

MeanApResult mean_ap(const std::vector<std::vector<Detection>>& dets_per_image,
                     const std::vector<std::vector<GroundTruth>>& gts_per_image, int num_classes,
                     const std::vector<double>& thresholds) {
  std::vector<int> gt_per_class(static_cast<std::size_t>(num_classes), 0);
  for (const auto& gts : gts_per_image)
    for (const GroundTruth& gt : gts) ++gt_per_class[static_cast<std::size_t>(gt.class_id)];

  auto class_mean_at = [&](double thresh) {
    std::vector<EvaluatedDetection> pooled;
    for (std::size_t i = 0; i < dets_per_image.size(); ++i) {
      auto ev = match_detections(dets_per_image[i], gts_per_image[i], thresh, static_cast<int>(i));
      pooled.insert(pooled.end(), ev.begin(), ev.end());
    }
    return ap50_from_evaluated(pooled, gt_per_class);
  };

  MeanApResult res;
  double sum = 0.0;
  for (double t : thresholds) sum += class_mean_at(t);
  res.map = thresholds.empty() ? 0.0 : sum / static_cast<double>(thresholds.size());
  res.ap50 = class_mean_at(0.50);
  return res;
}

UncertaintyErrorResult uncertainty_error(const std::vector<EvaluatedDetection>& evaluated) {
  std::vector<double> u_correct, u_incorrect;
  for (const EvaluatedDetection& ev : evaluated) {
    (ev.matched ? u_correct : u_incorrect).push_back(ev.u_pred);
  }
  if (u_correct.empty() || u_incorrect.empty()) {
    throw std::invalid_argument("uncertainty_error: needs at least one correct and one incorrect detection");
  }

  std::vector<double> values;
  values.reserve(evaluated.size());
  for (const EvaluatedDetection& ev : evaluated) values.push_back(ev.u_pred);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> candidates;
  candidates.push_back(values.front() - 0.5);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) candidates.push_back((values[i] + values[i + 1]) / 2.0);
  candidates.push_back(values.back() + 0.5);

  UncertaintyErrorResult best;
  best.ue = 2.0;
  for (double delta : candidates) {
    const double tprj =
        static_cast<double>(std::count_if(u_correct.begin(), u_correct.end(), [&](double u) { return u > delta; })) /
        static_cast<double>(u_correct.size());
    const double fprt = static_cast<double>(std::count_if(u_incorrect.begin(), u_incorrect.end(),
                                                          [&](double u) { return u <= delta; })) /
                        static_cast<double>(u_incorrect.size());
    const double ue = (tprj + fprt) / 2.0;
    if (ue < best.ue) {
      best.ue = ue;
      best.delta_opt = delta;
      best.tprj = tprj;
      best.fprt = fprt;
    }
  }
  return best;
}

double binary_entropy(double p, double clamp) {
  const double q = std::clamp(p, clamp, 1.0 - clamp);
  return -q * std::log(q) - (1.0 - q) * std::log(1.0 - q);
}

double u_ood_image(const TandemOutput& out) {
  const int ch = out.alpha.shape().back();
  const int k = ch - 5;
  const std::size_t anchors = out.alpha.size() / static_cast<std::size_t>(ch);
  if (anchors == 0) return 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < anchors; ++a) {
    const double* va = out.alpha.data() + a * ch;
    const double* vb = out.beta.data() + a * ch;
    double box_sq = 0.0;
    for (int c = 0; c < 5; ++c) {
      const double d = va[c] - vb[c];
      box_sq += d * d;
    }
    double ent_sq = 0.0;
    for (int c = 0; c < k; ++c) {
      const double d = binary_entropy(va[5 + c]) - binary_entropy(vb[5 + c]);
      ent_sq += d * d;
    }
    total += std::sqrt(box_sq) * std::sqrt(ent_sq);
  }
  return total / static_cast<double>(anchors);
}

std::vector<double> default_retention_fractions() {
  std::vector<double> f;
  for (int i = 1; i <= 20; ++i) f.push_back(0.05 * i);
  f.back() = 1.0;
  return f;
}

RetentionCurve retention_curve(const std::vector<EvaluatedDetection>& evaluated,
                               const std::vector<int>& gt_per_class, const std::vector<double>& fractions) {
  RetentionCurve curve;
  curve.fractions = fractions;
  curve.ap50_values.assign(fractions.size(), 0.0);
  if (evaluated.empty()) return curve;

  std::vector<std::size_t> order(evaluated.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (evaluated[a].u_pred != evaluated[b].u_pred) return evaluated[a].u_pred < evaluated[b].u_pred;
    return evaluated[a].detection.score() > evaluated[b].detection.score();
  });

  const double n = static_cast<double>(evaluated.size());
  for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
    const std::size_t keep = static_cast<std::size_t>(std::ceil(fractions[fi] * n));
    std::vector<EvaluatedDetection> subset;
    subset.reserve(keep);
    for (std::size_t i = 0; i < std::min(keep, order.size()); ++i) subset.push_back(evaluated[order[i]]);
    curve.ap50_values[fi] = ap50_from_evaluated(subset, gt_per_class);
  }

  if (fractions.size() >= 2) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
      area += (fractions[i + 1] - fractions[i]) * (curve.ap50_values[i] + curve.ap50_values[i + 1]) / 2.0;
    }
    curve.auc = area / (fractions.back() - fractions.front());
  } else if (fractions.size() == 1) {
    curve.auc = curve.ap50_values[0];
  }
  return curve;
}

double roc_auc(const std::vector<OodScore>& scores) {
  std::size_t n_ood = 0, n_in = 0;
  for (const OodScore& s : scores) (s.is_ood ? n_ood : n_in)++;
  if (n_ood == 0 || n_in == 0) {
    throw std::invalid_argument("roc_auc: both in-distribution and OOD samples are required");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].u_ood < scores[b].u_ood; });

  // average ranks over ties, then the Mann-Whitney rank-sum statistic
  double rank_sum_ood = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]].u_ood == scores[order[i]].u_ood) ++j;
    const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (scores[order[t]].is_ood) rank_sum_ood += avg_rank;
    }
    i = j + 1;
  }
  const double no = static_cast<double>(n_ood), ni = static_cast<double>(n_in);
  return (rank_sum_ood - no * (no + 1.0) / 2.0) / (no * ni);
}

std::vector<std::pair<double, double>> roc_curve(const std::vector<OodScore>& scores) {
  std::size_t n_ood = 0, n_in = 0;
  for (const OodScore& s : scores) (s.is_ood ? n_ood : n_in)++;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].u_ood > scores[b].u_ood; });

  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(0.0, 0.0);
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]].u_ood == scores[order[i]].u_ood) ++j;
    for (std::size_t t = i; t <= j; ++t) scores[order[t]].is_ood ? ++tp : ++fp;
    pts.emplace_back(n_in ? static_cast<double>(fp) / n_in : 0.0, n_ood ? static_cast<double>(tp) / n_ood : 0.0);
    i = j + 1;
  }
  return pts;
}

}  // namespace bea
