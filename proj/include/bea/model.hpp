#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "bea/geometry.hpp"
#include "bea/tensor.hpp"

namespace bea {

/// Tiny anchor-based detector: a strided conv backbone shared by one or two
/// duplicated detector heads branching from its last feature map.
struct ModelConfig {
  GridSpec grid;
  std::vector<int> backbone_channels = {16, 32, 64};
  int head_channels = 64;
  bool bea = true;  // duplicated heads iff true
  int image_size = 64;
  int in_channels = 1;
  double leaky_slope = 0.1;
};

struct ConvLayer {
  Tensor w;  // (OC, IC, KH, KW)
  std::vector<double> b;
  int stride = 1;
  int pad = 1;
};

struct ConvGrad {
  Tensor dw;
  std::vector<double> db;
};

class DetectorModel {
 public:
  explicit DetectorModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  bool is_bea() const { return cfg_.bea; }
  std::size_t num_params() const;

  /// He-style init; the two heads draw from distinct streams so they start
  /// different even though they see the same features.
  void init_params(std::uint64_t seed);

  struct HeadTrace {
    Tensor pre1, post1;  // head conv1 out and its activation
    Tensor raw_map;      // (B*(5+K), S, S)
    Tensor raw_grid;     // (S, S, B, 5+K)
  };

  /// Per-image forward record; keeps what backward needs.
  struct Trace {
    Tensor input;
    std::vector<Tensor> bb_pre, bb_post;
    HeadTrace alpha;
    std::optional<HeadTrace> beta;
  };

  void forward(const Tensor& image, Trace& trace) const;

  struct Grads {
    std::vector<ConvGrad> backbone;
    std::vector<ConvGrad> head_alpha;
    std::vector<ConvGrad> head_beta;
    void zero();
  };
  Grads make_grads() const;

  /// Per-item upstream gradients flowing back into the network.
  struct ItemGrad {
    Tensor d_raw_alpha;               // (S, S, B, 5+K)
    Tensor d_raw_beta;                // ignored when !bea
    const Tensor* d_alpha_feat = nullptr;  // optional extra grad on alpha.post1
    const Tensor* d_beta_feat = nullptr;
  };

  /// Derivative stacks mirroring Trace, filled by backward_item.
  struct BackTrace {
    std::vector<Tensor> bb_dpre;
    Tensor a_dpre1, a_dmap;
    Tensor b_dpre1, b_dmap;
  };

  /// Chain rule for one item down to every conv layer's d(pre-activation).
  /// Pure w.r.t. the model; safe to call concurrently per item.
  void backward_item(const Trace& trace, const ItemGrad& g, BackTrace& bt) const;

  /// Accumulates weight/bias gradients over a batch in item order.
  void accumulate_param_grads(const std::vector<const Trace*>& traces,
                              const std::vector<const BackTrace*>& backs, Grads& grads, bool parallel) const;

  struct Velocity {
    std::vector<ConvGrad> backbone, head_alpha, head_beta;
  };
  Velocity make_velocity() const;
  void sgd_step(const Grads& grads, Velocity& vel, double lr, double momentum);

  void save(const std::filesystem::path& path) const;
  static DetectorModel load(const std::filesystem::path& path);

  // exposed for checkpoint round-trip checks
  std::vector<ConvLayer>& backbone() { return backbone_; }
  std::vector<ConvLayer>& head_alpha() { return head_alpha_; }
  std::vector<ConvLayer>& head_beta() { return head_beta_; }
  const std::vector<ConvLayer>& backbone() const { return backbone_; }
  const std::vector<ConvLayer>& head_alpha() const { return head_alpha_; }
  const std::vector<ConvLayer>& head_beta() const { return head_beta_; }

 private:
  void forward_head(const std::vector<ConvLayer>& head, const Tensor& feat, HeadTrace& ht) const;
  void backward_head(const std::vector<ConvLayer>& head, const HeadTrace& ht, const Tensor& feat,
                     const Tensor& d_raw_grid, const Tensor* d_feat_extra, Tensor& d_pre1, Tensor& d_map,
                     Tensor& d_feat_accum) const;

  ModelConfig cfg_;
  std::vector<ConvLayer> backbone_;
  std::vector<ConvLayer> head_alpha_;
  std::vector<ConvLayer> head_beta_;
};

/// (B*(5+K), S, S) map <-> (S, S, B, 5+K) grid; channel index = b*(5+K)+ch.
Tensor grid_from_map(const Tensor& map, const GridSpec& grid);
Tensor map_from_grid(const Tensor& grid_t, const GridSpec& grid);

/// Activation derivative: maps d(activated)/d(channel) back onto raw logits.
/// Sigmoid channels use act*(1-act); w/h channels use act itself, zeroed
/// where the (0,1] clamp is active.
void activate_grid_backward(const Tensor& activated, const Tensor& d_activated, const GridSpec& grid,
                            Tensor& d_raw);

}  // namespace bea
