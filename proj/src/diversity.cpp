#include "bea/diversity.hpp"

#include <cmath>
#include <stdexcept>

namespace bea {

namespace {

// Column-center in place.
void center_columns(FeatureMap& m) {
  for (int j = 0; j < m.d; ++j) {
    double mean = 0.0;
    for (int i = 0; i < m.n; ++i) mean += m.at(i, j);
    mean /= m.n;
    for (int i = 0; i < m.n; ++i) m.at(i, j) -= mean;
  }
}

// A' B for A: n x da, B: n x db -> da x db (row-major).
std::vector<double> gram(const FeatureMap& a, const FeatureMap& b) {
  std::vector<double> g(static_cast<std::size_t>(a.d) * b.d, 0.0);
  for (int i = 0; i < a.n; ++i) {
    for (int p = 0; p < a.d; ++p) {
      const double av = a.at(i, p);
      if (av == 0.0) continue;
      for (int q = 0; q < b.d; ++q) {
        g[static_cast<std::size_t>(p) * b.d + q] += av * b.at(i, q);
      }
    }
  }
  return g;
}

double frob_sq(const std::vector<double>& m) {
  double s = 0.0;
  for (double v : m) s += v * v;
  return s;
}

struct CkaTerms {
  FeatureMap xc, yc;
  double num = 0.0;  // ||Yc' Xc||_F^2
  double a = 0.0;    // ||Xc' Xc||_F
  double b = 0.0;    // ||Yc' Yc||_F
  bool degenerate = false;
};

CkaTerms cka_terms(const FeatureMap& x, const FeatureMap& y) {
  if (x.n != y.n) throw std::invalid_argument("linear_cka: row-count mismatch");
  CkaTerms t;
  t.xc = x;
  t.yc = y;
  center_columns(t.xc);
  center_columns(t.yc);
  t.num = frob_sq(gram(t.yc, t.xc));
  t.a = std::sqrt(frob_sq(gram(t.xc, t.xc)));
  t.b = std::sqrt(frob_sq(gram(t.yc, t.yc)));
  t.degenerate = t.a <= 0.0 || t.b <= 0.0;
  return t;
}

double cosine_pair(const double* u, const double* v, int len, int stride) {
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (int i = 0; i < len; ++i) {
    const double ui = u[static_cast<std::size_t>(i) * stride];
    const double vi = v[static_cast<std::size_t>(i) * stride];
    uu += ui * ui;
    vv += vi * vi;
    uv += ui * vi;
  }
  if (uu <= 0.0 || vv <= 0.0) return 0.0;
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

// d cos(u,v)/du = v/(|u||v|) - cos * u/|u|^2, accumulated with weight.
void cosine_pair_backward(const double* u, const double* v, int len, int stride, double weight, double* du,
                          double* dv) {
  double uu = 0.0, vv = 0.0, uv = 0.0;
  for (int i = 0; i < len; ++i) {
    const double ui = u[static_cast<std::size_t>(i) * stride];
    const double vi = v[static_cast<std::size_t>(i) * stride];
    uu += ui * ui;
    vv += vi * vi;
    uv += ui * vi;
  }
  if (uu <= 0.0 || vv <= 0.0) return;
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  const double c = uv / (nu * nv);
  for (int i = 0; i < len; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * stride;
    du[k] += weight * (v[k] / (nu * nv) - c * u[k] / uu);
    dv[k] += weight * (u[k] / (nu * nv) - c * v[k] / vv);
  }
}

double cosine_axis(const FeatureMap& x, const FeatureMap& y, SimilarityAxis axis) {
  if (axis == SimilarityAxis::rows) {
    double s = 0.0;
    for (int i = 0; i < x.n; ++i) {
      s += cosine_pair(x.values.data() + static_cast<std::size_t>(i) * x.d,
                       y.values.data() + static_cast<std::size_t>(i) * y.d, x.d, 1);
    }
    return s / x.n;
  }
  double s = 0.0;
  for (int j = 0; j < x.d; ++j) {
    s += cosine_pair(x.values.data() + j, y.values.data() + j, x.n, x.d);
  }
  return s / x.d;
}

void cosine_axis_backward(const FeatureMap& x, const FeatureMap& y, SimilarityAxis axis, double upstream,
                          FeatureMap& dx, FeatureMap& dy) {
  if (axis == SimilarityAxis::rows) {
    const double w = upstream / x.n;
    for (int i = 0; i < x.n; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * x.d;
      cosine_pair_backward(x.values.data() + off, y.values.data() + off, x.d, 1, w, dx.values.data() + off,
                           dy.values.data() + off);
    }
    return;
  }
  const double w = upstream / x.d;
  for (int j = 0; j < x.d; ++j) {
    cosine_pair_backward(x.values.data() + j, y.values.data() + j, x.n, x.d, w, dx.values.data() + j,
                         dy.values.data() + j);
  }
}

}  // namespace

double linear_cka(const FeatureMap& x, const FeatureMap& y) {
  const CkaTerms t = cka_terms(x, y);
  if (t.degenerate) return 0.0;
  return t.num / (t.a * t.b);
}

double cosine_axis_similarity(const FeatureMap& x, const FeatureMap& y, SimilarityAxis axis) {
  if (x.n != y.n || x.d != y.d) throw std::invalid_argument("cosine_axis_similarity: shape mismatch");
  if (axis == SimilarityAxis::both) {
    return (cosine_axis(x, y, SimilarityAxis::rows) + cosine_axis(x, y, SimilarityAxis::cols)) / 2.0;
  }
  return cosine_axis(x, y, axis);
}

DiversityKind diversity_kind_from_string(const std::string& name) {
  if (name == "linear_cka") return DiversityKind::linear_cka;
  if (name == "cos_rows") return DiversityKind::cos_rows;
  if (name == "cos_cols") return DiversityKind::cos_cols;
  if (name == "cos_both") return DiversityKind::cos_both;
  throw std::invalid_argument("unknown diversity kind: " + name);
}

std::string to_string(DiversityKind kind) {
  switch (kind) {
    case DiversityKind::linear_cka: return "linear_cka";
    case DiversityKind::cos_rows: return "cos_rows";
    case DiversityKind::cos_cols: return "cos_cols";
    case DiversityKind::cos_both: return "cos_both";
  }
  return "linear_cka";
}

double diversity_loss(const FeatureMap& x, const FeatureMap& y, DiversityKind kind) {
  switch (kind) {
    case DiversityKind::linear_cka: return linear_cka(x, y);
    case DiversityKind::cos_rows: return std::max(0.0, cosine_axis_similarity(x, y, SimilarityAxis::rows));
    case DiversityKind::cos_cols: return std::max(0.0, cosine_axis_similarity(x, y, SimilarityAxis::cols));
    case DiversityKind::cos_both: return std::max(0.0, cosine_axis_similarity(x, y, SimilarityAxis::both));
  }
  return 0.0;
}

void diversity_loss_backward(const FeatureMap& x, const FeatureMap& y, DiversityKind kind, double upstream,
                             FeatureMap& dx, FeatureMap& dy) {
  if (kind == DiversityKind::linear_cka) {
    const CkaTerms t = cka_terms(x, y);
    if (t.degenerate) return;
    // dCKA/dXc = 2 Yc (Yc'Xc) / (a b) - 2 num Xc (Xc'Xc) / (a^3 b), then the
    // column-centering projection maps dXc to dX.
    const auto apply = [&](const FeatureMap& uc, const FeatureMap& vc, double un, double vn, FeatureMap& du) {
      const std::vector<double> g_vu = gram(vc, uc);  // vd x ud
      const std::vector<double> g_uu = gram(uc, uc);  // ud x ud
      const double c1 = 2.0 / (un * vn);
      const double c2 = 2.0 * t.num / (un * un * un * vn);
      FeatureMap duc(uc.n, uc.d);
      for (int i = 0; i < uc.n; ++i) {
        for (int q = 0; q < uc.d; ++q) {
          double acc = 0.0;
          for (int p = 0; p < vc.d; ++p) acc += vc.at(i, p) * g_vu[static_cast<std::size_t>(p) * uc.d + q];
          double acc2 = 0.0;
          for (int p = 0; p < uc.d; ++p) acc2 += uc.at(i, p) * g_uu[static_cast<std::size_t>(p) * uc.d + q];
          duc.at(i, q) = c1 * acc - c2 * acc2;
        }
      }
      for (int q = 0; q < uc.d; ++q) {
        double mean = 0.0;
        for (int i = 0; i < uc.n; ++i) mean += duc.at(i, q);
        mean /= uc.n;
        for (int i = 0; i < uc.n; ++i) du.at(i, q) += upstream * (duc.at(i, q) - mean);
      }
    };
    apply(t.xc, t.yc, t.a, t.b, dx);
    apply(t.yc, t.xc, t.b, t.a, dy);
    return;
  }

  const SimilarityAxis axis = kind == DiversityKind::cos_rows  ? SimilarityAxis::rows
                              : kind == DiversityKind::cos_cols ? SimilarityAxis::cols
                                                                : SimilarityAxis::both;
  if (cosine_axis_similarity(x, y, axis) <= 0.0) return;  // clamped region
  if (axis == SimilarityAxis::both) {
    cosine_axis_backward(x, y, SimilarityAxis::rows, upstream / 2.0, dx, dy);
    cosine_axis_backward(x, y, SimilarityAxis::cols, upstream / 2.0, dx, dy);
  } else {
    cosine_axis_backward(x, y, axis, upstream, dx, dy);
  }
}

}  // namespace bea
