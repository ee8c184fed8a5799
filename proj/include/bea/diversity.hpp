#pragma once

#include <string>
#include <vector>

namespace bea {

enum class FeatureSource { alpha, beta };

/// N x D feature matrix (rows: flattened spatial positions / examples,
/// columns: channels), row-major.
struct FeatureMap {
  int n = 0;
  int d = 0;
  std::vector<double> values;
  FeatureSource source = FeatureSource::alpha;

  FeatureMap() = default;
  FeatureMap(int n_, int d_, FeatureSource src = FeatureSource::alpha)
      : n(n_), d(d_), values(static_cast<std::size_t>(n_) * d_, 0.0), source(src) {}

  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * d + j]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * d + j]; }
};

/// Linear CKA on column-centered features:
///   ||Yc' Xc||_F^2 / (||Xc' Xc||_F ||Yc' Yc||_F).
/// Returns 0 when either input is constant. Throws on row-count mismatch.
double linear_cka(const FeatureMap& x, const FeatureMap& y);

enum class SimilarityAxis { rows, cols, both };

/// Mean cosine similarity across the chosen axis's vector pairs; `both`
/// averages the two axis scores. Zero vectors contribute similarity 0.
/// Throws on shape mismatch.
double cosine_axis_similarity(const FeatureMap& x, const FeatureMap& y, SimilarityAxis axis);

enum class DiversityKind { linear_cka, cos_rows, cos_cols, cos_both };

DiversityKind diversity_kind_from_string(const std::string& name);
std::string to_string(DiversityKind kind);

/// Similarity score used directly as a penalty (cosine kinds clamp negative
/// scores to 0).
double diversity_loss(const FeatureMap& x, const FeatureMap& y, DiversityKind kind);

/// Accumulates d(diversity_loss)/dx and /dy, scaled by `upstream`.
void diversity_loss_backward(const FeatureMap& x, const FeatureMap& y, DiversityKind kind, double upstream,
                             FeatureMap& dx, FeatureMap& dy);

}  // namespace bea
