#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bea/tensor.hpp"

namespace bea {

/// Axis-aligned box in center form, coordinates as fractions of image size.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double x1() const { return cx - w / 2.0; }
  double y1() const { return cy - h / 2.0; }
  double x2() const { return cx + w / 2.0; }
  double y2() const { return cy + h / 2.0; }
  double area() const { return w * h; }

  static Box from_corners(double x1, double y1, double x2, double y2) {
    return Box{(x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1};
  }
};

double iou(const Box& a, const Box& b);

/// Arithmetic mean of center-form coordinates.
Box average_boxes(const Box& a, const Box& b);

/// IoU of two sizes with centers aligned; used for anchor-prior matching.
double shape_iou(double w1, double h1, double w2, double h2);

/// Single-scale prediction grid: S x S cells, B anchor priors per cell,
/// K classes. Channel layout per anchor is (x, y, w, h, conf, class...).
struct GridSpec {
  int s = 8;
  int b = 2;
  std::vector<std::pair<double, double>> anchor_sizes = {{0.15, 0.15}, {0.35, 0.35}};
  int k = 3;

  int channels() const { return 5 + k; }
  int num_anchors() const { return s * s * b; }
  std::vector<int> grid_shape() const { return {s, s, b, channels()}; }
};

struct Detection {
  Box box;
  double confidence = 0.0;
  std::vector<double> class_probs;
  int class_id = 0;

  double score() const { return confidence; }
};

/// Argmax with ties broken toward the lowest index.
int argmax_class(const std::vector<double>& probs);

struct GroundTruth {
  Box box;
  int class_id = 0;
};

/// obj / noobj indicators over the S x S x B anchors. Stored as one bit per
/// anchor; noobj is the elementwise complement by construction.
struct ResponsibilityMask {
  int s = 0;
  int b = 0;
  std::vector<std::uint8_t> obj_bits;

  ResponsibilityMask() = default;
  ResponsibilityMask(int s_, int b_) : s(s_), b(b_), obj_bits(static_cast<std::size_t>(s_) * s_ * b_, 0) {}

  std::size_t flat(int row, int col, int anchor) const {
    return (static_cast<std::size_t>(row) * s + col) * b + anchor;
  }
  bool obj(int row, int col, int anchor) const { return obj_bits[flat(row, col, anchor)] != 0; }
  bool noobj(int row, int col, int anchor) const { return !obj(row, col, anchor); }
  std::size_t size() const { return obj_bits.size(); }
  int count_obj() const;
};

/// Responsibility assignment plus the per-anchor regression/class targets in
/// activated-channel layout (x, y offsets in-cell; w, h as image fractions;
/// conf target 1; one-hot classes). Target entries are meaningful only where
/// the mask marks obj.
struct AssignmentResult {
  ResponsibilityMask mask;
  Tensor targets;   // S x S x B x (5+K)
  int dropped = 0;  // GTs that found no free anchor in their cell
};

AssignmentResult assign_responsibility(const std::vector<GroundTruth>& gts, const GridSpec& grid);

/// Raw head activations -> activated channels: sigmoid on x, y, conf and
/// class logits; anchor-scaled exp on w, h (clamped to (0, 1]).
Tensor activate_grid(const Tensor& raw, const GridSpec& grid);

/// Detection for one anchor of an activated grid (absolute box coordinates).
Detection anchor_detection(const Tensor& activated, const GridSpec& grid, int row, int col, int anchor);

/// Raw grid -> one Detection per anchor, absolute coordinates.
/// Throws std::invalid_argument on a shape mismatch with the grid.
std::vector<Detection> decode_grid(const Tensor& raw, const GridSpec& grid);

/// Greedy per-class non-maximum suppression: survivors sorted by descending
/// score; no two same-class survivors overlap above iou_thresh.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh);

}  // namespace bea
