#include "bea/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace bea {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

constexpr double kMinBoxSide = 1e-9;

}  // namespace

double iou(const Box& a, const Box& b) {
  const double ix1 = std::max(a.x1(), b.x1());
  const double iy1 = std::max(a.y1(), b.y1());
  const double ix2 = std::min(a.x2(), b.x2());
  const double iy2 = std::min(a.y2(), b.y2());
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box average_boxes(const Box& a, const Box& b) {
  return Box{(a.cx + b.cx) / 2.0, (a.cy + b.cy) / 2.0, (a.w + b.w) / 2.0, (a.h + b.h) / 2.0};
}

double shape_iou(double w1, double h1, double w2, double h2) {
  const double inter = std::min(w1, w2) * std::min(h1, h2);
  const double uni = w1 * h1 + w2 * h2 - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

int argmax_class(const std::vector<double>& probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
    if (probs[static_cast<std::size_t>(i)] > probs[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

int ResponsibilityMask::count_obj() const {
  int n = 0;
  for (std::uint8_t v : obj_bits) n += v != 0;
  return n;
}

AssignmentResult assign_responsibility(const std::vector<GroundTruth>& gts, const GridSpec& grid) {
  AssignmentResult res;
  res.mask = ResponsibilityMask(grid.s, grid.b);
  res.targets = Tensor(grid.grid_shape());

  for (const GroundTruth& gt : gts) {
    const int col = std::min(grid.s - 1, static_cast<int>(gt.box.cx * grid.s));
    const int row = std::min(grid.s - 1, static_cast<int>(gt.box.cy * grid.s));

    // Rank the cell's priors by shape IoU, ties toward the lower index.
    std::vector<int> order(static_cast<std::size_t>(grid.b));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> fit(order.size());
    for (int a = 0; a < grid.b; ++a) {
      const auto& prior = grid.anchor_sizes[static_cast<std::size_t>(a)];
      fit[static_cast<std::size_t>(a)] = shape_iou(gt.box.w, gt.box.h, prior.first, prior.second);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fit[static_cast<std::size_t>(a)] > fit[static_cast<std::size_t>(b)]; });

    int chosen = -1;
    for (int a : order) {
      if (!res.mask.obj(row, col, a)) {
        chosen = a;
        break;
      }
    }
    if (chosen < 0) {
      ++res.dropped;
      continue;
    }

    res.mask.obj_bits[res.mask.flat(row, col, chosen)] = 1;
    const std::size_t base = res.targets.idx4(row, col, chosen, 0);
    double* t = res.targets.data() + base;
    t[0] = gt.box.cx * grid.s - col;  // in-cell offset, [0,1)
    t[1] = gt.box.cy * grid.s - row;
    t[2] = gt.box.w;
    t[3] = gt.box.h;
    t[4] = 1.0;
    for (int k = 0; k < grid.k; ++k) t[5 + k] = (k == gt.class_id) ? 1.0 : 0.0;
  }
  return res;
}

Tensor activate_grid(const Tensor& raw, const GridSpec& grid) {
  if (raw.shape() != grid.grid_shape()) {
    throw std::invalid_argument("activate_grid: raw shape does not match grid spec");
  }
  Tensor act = Tensor::zeros_like(raw);
  const int ch = grid.channels();
  const std::size_t anchors = static_cast<std::size_t>(grid.num_anchors());
  for (std::size_t a = 0; a < anchors; ++a) {
    const double* r = raw.data() + a * ch;
    double* o = act.data() + a * ch;
    const int prior = static_cast<int>(a % static_cast<std::size_t>(grid.b));
    const auto& size = grid.anchor_sizes[static_cast<std::size_t>(prior)];
    o[0] = sigmoid(r[0]);
    o[1] = sigmoid(r[1]);
    o[2] = std::clamp(size.first * std::exp(r[2]), kMinBoxSide, 1.0);
    o[3] = std::clamp(size.second * std::exp(r[3]), kMinBoxSide, 1.0);
    for (int c = 4; c < ch; ++c) o[c] = sigmoid(r[c]);
  }
  return act;
}

Detection anchor_detection(const Tensor& activated, const GridSpec& grid, int row, int col, int anchor) {
  const std::size_t base = activated.idx4(row, col, anchor, 0);
  const double* v = activated.data() + base;
  Detection det;
  det.box.cx = (v[0] + col) / grid.s;
  det.box.cy = (v[1] + row) / grid.s;
  det.box.w = v[2];
  det.box.h = v[3];
  det.confidence = v[4];
  det.class_probs.assign(v + 5, v + 5 + grid.k);
  det.class_id = argmax_class(det.class_probs);
  return det;
}

std::vector<Detection> decode_grid(const Tensor& raw, const GridSpec& grid) {
  const Tensor act = activate_grid(raw, grid);
  std::vector<Detection> dets;
  dets.reserve(static_cast<std::size_t>(grid.num_anchors()));
  for (int row = 0; row < grid.s; ++row)
    for (int col = 0; col < grid.s; ++col)
      for (int a = 0; a < grid.b; ++a) dets.push_back(anchor_detection(act, grid, row, col, a));
  return dets;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_thresh) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score() > dets[b].score(); });

  std::vector<Detection> kept;
  for (std::size_t i : order) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id == dets[i].class_id && iou(k.box, dets[i].box) > iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(dets[i]);
  }
  return kept;
}

}  // namespace bea
