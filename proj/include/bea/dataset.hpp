#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bea/geometry.hpp"
#include "bea/tensor.hpp"

namespace bea {

enum class ShapeKind { circle, square, triangle, cross, ring };

ShapeKind shape_kind_from_string(const std::string& name);
std::string to_string(ShapeKind kind);

enum class OodMode { none, near, far };

OodMode ood_mode_from_string(const std::string& name);
std::string to_string(OodMode mode);

/// Synthetic scene generator settings. In-distribution images draw 1..3
/// shapes from shape_classes on a noisy background. near-OOD swaps in shapes
/// outside the class list (cross, ring); far-OOD renders structured textures
/// (gratings / checkerboards) with no shapes. OOD images carry no ground
/// truth.
struct SceneSpec {
  int image_size = 64;
  std::vector<ShapeKind> shape_classes = {ShapeKind::circle, ShapeKind::square, ShapeKind::triangle};
  int objects_min = 1;
  int objects_max = 3;
  double noise_std = 0.08;
  OodMode ood_mode = OodMode::none;

  int num_classes() const { return static_cast<int>(shape_classes.size()); }
};

struct LabeledImage {
  Tensor image;  // (1, size, size), values in [0, 1]
  std::vector<GroundTruth> gts;
};

/// Deterministic for a given (spec, seed); item i depends only on
/// mix_seed(seed, i), so generation order (and parallelism) cannot change
/// the output.
std::vector<LabeledImage> generate_dataset(const SceneSpec& spec, int n, std::uint64_t seed);

}  // namespace bea
