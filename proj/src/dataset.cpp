#include "bea/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bea/rng.hpp"

namespace bea {

ShapeKind shape_kind_from_string(const std::string& name) {
  if (name == "circle") return ShapeKind::circle;
  if (name == "square") return ShapeKind::square;
  if (name == "triangle") return ShapeKind::triangle;
  if (name == "cross") return ShapeKind::cross;
  if (name == "ring") return ShapeKind::ring;
  throw std::invalid_argument("unknown shape kind: " + name);
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::circle: return "circle";
    case ShapeKind::square: return "square";
    case ShapeKind::triangle: return "triangle";
    case ShapeKind::cross: return "cross";
    case ShapeKind::ring: return "ring";
  }
  return "circle";
}

OodMode ood_mode_from_string(const std::string& name) {
  if (name == "none") return OodMode::none;
  if (name == "near") return OodMode::near;
  if (name == "far") return OodMode::far;
  throw std::invalid_argument("unknown ood mode: " + name);
}

std::string to_string(OodMode mode) {
  switch (mode) {
    case OodMode::none: return "none";
    case OodMode::near: return "near";
    case OodMode::far: return "far";
  }
  return "none";
}

namespace {

constexpr double kMinSide = 0.10;  // shape bbox side range, image fractions
constexpr double kMaxSide = 0.40;
constexpr double kEdgeMargin = 0.055;

bool inside_shape(ShapeKind kind, double px, double py, const Box& box) {
  const double dx = px - box.cx;
  const double dy = py - box.cy;
  const double hw = box.w / 2.0;
  const double hh = box.h / 2.0;
  switch (kind) {
    case ShapeKind::circle:
      return dx * dx + dy * dy <= hw * hw;
    case ShapeKind::square:
      return std::abs(dx) <= hw && std::abs(dy) <= hh;
    case ShapeKind::triangle: {
      // apex up: scanline half-width grows linearly toward the base
      if (dy < -hh || dy > hh) return false;
      const double half_width = hw * (dy + hh) / (2.0 * hh);
      return std::abs(dx) <= half_width;
    }
    case ShapeKind::cross: {
      const double bar = hw / 3.0;
      return (std::abs(dx) <= bar && std::abs(dy) <= hh) || (std::abs(dy) <= bar && std::abs(dx) <= hw);
    }
    case ShapeKind::ring: {
      const double r2 = dx * dx + dy * dy;
      const double outer = hw;
      const double inner = 0.55 * hw;
      return r2 <= outer * outer && r2 >= inner * inner;
    }
  }
  return false;
}

void render_shape(Tensor& image, ShapeKind kind, const Box& box, double intensity) {
  const int size = image.dim(1);
  const int x_lo = std::max(0, static_cast<int>(std::floor(box.x1() * size)));
  const int x_hi = std::min(size - 1, static_cast<int>(std::ceil(box.x2() * size)));
  const int y_lo = std::max(0, static_cast<int>(std::floor(box.y1() * size)));
  const int y_hi = std::min(size - 1, static_cast<int>(std::ceil(box.y2() * size)));
  for (int py = y_lo; py <= y_hi; ++py) {
    for (int px = x_lo; px <= x_hi; ++px) {
      const double cx = (px + 0.5) / size;
      const double cy = (py + 0.5) / size;
      if (inside_shape(kind, cx, cy, box)) image.at(0, py, px) = intensity;
    }
  }
}

void render_texture(Tensor& image, Rng& rng) {
  const int size = image.dim(1);
  const double amplitude = rng.uniform(0.25, 0.45);
  if (rng.uniform() < 0.5) {
    // sinusoidal grating at a random orientation and period
    const double period = rng.uniform(4.0, 16.0);
    const double angle = rng.uniform(0.0, 3.14159265358979323846);
    const double phase = rng.uniform(0.0, 6.28318530717958647692);
    const double fx = std::cos(angle) / period;
    const double fy = std::sin(angle) / period;
    for (int py = 0; py < size; ++py)
      for (int px = 0; px < size; ++px)
        image.at(0, py, px) = 0.5 + amplitude * std::sin(6.28318530717958647692 * (fx * px + fy * py) + phase);
  } else {
    const int tile = rng.uniform_int(3, 10);
    const int ox = rng.uniform_int(0, tile - 1);
    const int oy = rng.uniform_int(0, tile - 1);
    for (int py = 0; py < size; ++py)
      for (int px = 0; px < size; ++px) {
        const bool on = (((px + ox) / tile) + ((py + oy) / tile)) % 2 == 0;
        image.at(0, py, px) = 0.5 + (on ? amplitude : -amplitude);
      }
  }
}

struct PlacedShape {
  ShapeKind kind;
  Box box;
  int class_id;
};

std::vector<PlacedShape> place_shapes(const SceneSpec& spec, const std::vector<ShapeKind>& pool, Rng& rng) {
  const int count = rng.uniform_int(spec.objects_min, spec.objects_max);
  std::vector<PlacedShape> placed;
  for (int i = 0; i < count; ++i) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      Box box;
      box.cx = rng.uniform(kEdgeMargin, 1.0 - kEdgeMargin);
      box.cy = rng.uniform(kEdgeMargin, 1.0 - kEdgeMargin);
      const double fit = 2.0 * std::min({box.cx, 1.0 - box.cx, box.cy, 1.0 - box.cy});
      const double side = rng.uniform(kMinSide, std::min(kMaxSide, fit));
      box.w = side;
      box.h = side;
      bool overlaps = false;
      for (const PlacedShape& other : placed) {
        if (iou(box, other.box) > 0.1) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      const int pick = rng.uniform_int(0, static_cast<int>(pool.size()) - 1);
      placed.push_back(PlacedShape{pool[static_cast<std::size_t>(pick)], box, pick});
      break;
    }
  }
  return placed;
}

LabeledImage generate_one(const SceneSpec& spec, std::uint64_t item_seed) {
  Rng rng(item_seed);
  LabeledImage out;
  out.image = Tensor({1, spec.image_size, spec.image_size});

  if (spec.ood_mode == OodMode::far) {
    render_texture(out.image, rng);
  } else {
    out.image.fill(0.5);
    const std::vector<ShapeKind> pool = spec.ood_mode == OodMode::near
                                            ? std::vector<ShapeKind>{ShapeKind::cross, ShapeKind::ring}
                                            : spec.shape_classes;
    const auto placed = place_shapes(spec, pool, rng);
    for (const PlacedShape& p : placed) {
      render_shape(out.image, p.kind, p.box, rng.uniform(0.75, 0.95));
      if (spec.ood_mode == OodMode::none) out.gts.push_back(GroundTruth{p.box, p.class_id});
    }
  }

  for (std::size_t i = 0; i < out.image.size(); ++i) {
    out.image[i] = std::clamp(out.image[i] + rng.normal(0.0, spec.noise_std), 0.0, 1.0);
  }
  return out;
}

}  // namespace

std::vector<LabeledImage> generate_dataset(const SceneSpec& spec, int n, std::uint64_t seed) {
  std::vector<LabeledImage> items(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    items[static_cast<std::size_t>(i)] = generate_one(spec, mix_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return items;
}

}  // namespace bea
