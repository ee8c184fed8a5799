#include "bea/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "bea/kernels.hpp"
#include "bea/rng.hpp"

namespace bea {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'B', 'E', 'A', 'M', 'O', 'D', 'L', '1'};

void init_conv(ConvLayer& layer, Rng& rng) {
  const int fan_in = layer.w.dim(1) * layer.w.dim(2) * layer.w.dim(3);
  const double scale = std::sqrt(2.0 / fan_in);
  for (std::size_t i = 0; i < layer.w.size(); ++i) layer.w[i] = scale * rng.normal();
  std::fill(layer.b.begin(), layer.b.end(), 0.0);
}

json grid_to_json(const GridSpec& g) {
  json anchors = json::array();
  for (const auto& a : g.anchor_sizes) anchors.push_back({a.first, a.second});
  return json{{"s", g.s}, {"b", g.b}, {"anchor_sizes", anchors}, {"k", g.k}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.s = j.at("s").get<int>();
  g.b = j.at("b").get<int>();
  g.k = j.at("k").get<int>();
  g.anchor_sizes.clear();
  for (const auto& a : j.at("anchor_sizes")) {
    g.anchor_sizes.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
  }
  return g;
}

json model_config_to_json(const ModelConfig& c) {
  return json{{"grid", grid_to_json(c.grid)},
              {"backbone_channels", c.backbone_channels},
              {"head_channels", c.head_channels},
              {"bea", c.bea},
              {"image_size", c.image_size},
              {"in_channels", c.in_channels},
              {"leaky_slope", c.leaky_slope}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.grid = grid_from_json(j.at("grid"));
  c.backbone_channels = j.at("backbone_channels").get<std::vector<int>>();
  c.head_channels = j.at("head_channels").get<int>();
  c.bea = j.at("bea").get<bool>();
  c.image_size = j.at("image_size").get<int>();
  c.in_channels = j.at("in_channels").get<int>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  return c;
}

}  // namespace

DetectorModel::DetectorModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
  if (static_cast<int>(cfg_.grid.anchor_sizes.size()) != cfg_.grid.b) {
    throw std::invalid_argument("model: anchor_sizes length must equal B");
  }
  int map = cfg_.image_size;
  int in_ch = cfg_.in_channels;
  for (int out_ch : cfg_.backbone_channels) {
    ConvLayer l;
    l.w = Tensor({out_ch, in_ch, 3, 3});
    l.b.assign(static_cast<std::size_t>(out_ch), 0.0);
    l.stride = 2;
    l.pad = 1;
    backbone_.push_back(std::move(l));
    map /= 2;
    in_ch = out_ch;
  }
  if (map != cfg_.grid.s) {
    throw std::invalid_argument("model: image_size / 2^len(backbone) must equal grid S");
  }

  const int out_channels = cfg_.grid.b * cfg_.grid.channels();
  auto make_head = [&]() {
    std::vector<ConvLayer> head(2);
    head[0].w = Tensor({cfg_.head_channels, in_ch, 3, 3});
    head[0].b.assign(static_cast<std::size_t>(cfg_.head_channels), 0.0);
    head[0].stride = 1;
    head[0].pad = 1;
    head[1].w = Tensor({out_channels, cfg_.head_channels, 1, 1});
    head[1].b.assign(static_cast<std::size_t>(out_channels), 0.0);
    head[1].stride = 1;
    head[1].pad = 0;
    return head;
  };
  head_alpha_ = make_head();
  if (cfg_.bea) head_beta_ = make_head();
}

std::size_t DetectorModel::num_params() const {
  std::size_t n = 0;
  auto count = [&n](const std::vector<ConvLayer>& layers) {
    for (const ConvLayer& l : layers) n += l.w.size() + l.b.size();
  };
  count(backbone_);
  count(head_alpha_);
  count(head_beta_);
  return n;
}

void DetectorModel::init_params(std::uint64_t seed) {
  Rng bb_rng(mix_seed(seed, 101));
  for (ConvLayer& l : backbone_) init_conv(l, bb_rng);
  Rng a_rng(mix_seed(seed, 202));
  for (ConvLayer& l : head_alpha_) init_conv(l, a_rng);
  Rng b_rng(mix_seed(seed, 303));
  for (ConvLayer& l : head_beta_) init_conv(l, b_rng);
}

void DetectorModel::forward_head(const std::vector<ConvLayer>& head, const Tensor& feat, HeadTrace& ht) const {
  const int s = cfg_.grid.s;
  ht.pre1 = Tensor({cfg_.head_channels, s, s});
  kernels::conv2d_forward(feat, head[0].w, head[0].b, head[0].stride, head[0].pad, ht.pre1, false);
  ht.post1 = Tensor::zeros_like(ht.pre1);
  kernels::leaky_relu_forward(ht.pre1, cfg_.leaky_slope, ht.post1);
  ht.raw_map = Tensor({cfg_.grid.b * cfg_.grid.channels(), s, s});
  kernels::conv2d_forward(ht.post1, head[1].w, head[1].b, head[1].stride, head[1].pad, ht.raw_map, false);
  ht.raw_grid = grid_from_map(ht.raw_map, cfg_.grid);
}

void DetectorModel::forward(const Tensor& image, Trace& trace) const {
  if (image.dim(0) != cfg_.in_channels || image.dim(1) != cfg_.image_size || image.dim(2) != cfg_.image_size) {
    throw std::invalid_argument("forward: image shape does not match model config");
  }
  // center pixel values
  trace.input = image;
  for (std::size_t i = 0; i < trace.input.size(); ++i) trace.input[i] -= 0.5;

  trace.bb_pre.resize(backbone_.size());
  trace.bb_post.resize(backbone_.size());
  const Tensor* cur = &trace.input;
  int map = cfg_.image_size;
  for (std::size_t l = 0; l < backbone_.size(); ++l) {
    map /= 2;
    trace.bb_pre[l] = Tensor({backbone_[l].w.dim(0), map, map});
    kernels::conv2d_forward(*cur, backbone_[l].w, backbone_[l].b, backbone_[l].stride, backbone_[l].pad,
                            trace.bb_pre[l], false);
    trace.bb_post[l] = Tensor::zeros_like(trace.bb_pre[l]);
    kernels::leaky_relu_forward(trace.bb_pre[l], cfg_.leaky_slope, trace.bb_post[l]);
    cur = &trace.bb_post[l];
  }

  forward_head(head_alpha_, *cur, trace.alpha);
  if (cfg_.bea) {
    trace.beta.emplace();
    forward_head(head_beta_, *cur, *trace.beta);
  } else {
    trace.beta.reset();
  }
}

void DetectorModel::Grads::zero() {
  auto z = [](std::vector<ConvGrad>& gs) {
    for (ConvGrad& g : gs) {
      g.dw.fill(0.0);
      std::fill(g.db.begin(), g.db.end(), 0.0);
    }
  };
  z(backbone);
  z(head_alpha);
  z(head_beta);
}

namespace {

std::vector<ConvGrad> grads_like(const std::vector<ConvLayer>& layers) {
  std::vector<ConvGrad> out;
  for (const ConvLayer& l : layers) {
    ConvGrad g;
    g.dw = Tensor::zeros_like(l.w);
    g.db.assign(l.b.size(), 0.0);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace

DetectorModel::Grads DetectorModel::make_grads() const {
  Grads g;
  g.backbone = grads_like(backbone_);
  g.head_alpha = grads_like(head_alpha_);
  g.head_beta = grads_like(head_beta_);
  return g;
}

DetectorModel::Velocity DetectorModel::make_velocity() const {
  Velocity v;
  v.backbone = grads_like(backbone_);
  v.head_alpha = grads_like(head_alpha_);
  v.head_beta = grads_like(head_beta_);
  return v;
}

void DetectorModel::backward_head(const std::vector<ConvLayer>& head, const HeadTrace& ht, const Tensor& feat,
                                  const Tensor& d_raw_grid, const Tensor* d_feat_extra, Tensor& d_pre1,
                                  Tensor& d_map, Tensor& d_feat_accum) const {
  d_map = map_from_grid(d_raw_grid, cfg_.grid);
  Tensor d_post1 = Tensor::zeros_like(ht.post1);
  kernels::conv2d_backward_input(d_map, head[1].w, head[1].stride, head[1].pad, d_post1, false);
  if (d_feat_extra != nullptr) {
    for (std::size_t i = 0; i < d_post1.size(); ++i) d_post1[i] += (*d_feat_extra)[i];
  }
  d_pre1 = Tensor::zeros_like(ht.pre1);
  kernels::leaky_relu_backward(ht.pre1, d_post1, cfg_.leaky_slope, d_pre1);
  Tensor d_feat = Tensor::zeros_like(feat);
  kernels::conv2d_backward_input(d_pre1, head[0].w, head[0].stride, head[0].pad, d_feat, false);
  for (std::size_t i = 0; i < d_feat.size(); ++i) d_feat_accum[i] += d_feat[i];
}

void DetectorModel::backward_item(const Trace& trace, const ItemGrad& g, BackTrace& bt) const {
  const Tensor& feat = trace.bb_post.back();
  Tensor d_feat = Tensor::zeros_like(feat);

  backward_head(head_alpha_, trace.alpha, feat, g.d_raw_alpha, g.d_alpha_feat, bt.a_dpre1, bt.a_dmap, d_feat);
  if (cfg_.bea) {
    backward_head(head_beta_, *trace.beta, feat, g.d_raw_beta, g.d_beta_feat, bt.b_dpre1, bt.b_dmap, d_feat);
  }

  bt.bb_dpre.resize(backbone_.size());
  Tensor d_post = std::move(d_feat);
  for (int l = static_cast<int>(backbone_.size()) - 1; l >= 0; --l) {
    const std::size_t li = static_cast<std::size_t>(l);
    bt.bb_dpre[li] = Tensor::zeros_like(trace.bb_pre[li]);
    kernels::leaky_relu_backward(trace.bb_pre[li], d_post, cfg_.leaky_slope, bt.bb_dpre[li]);
    if (l > 0) {
      d_post = Tensor::zeros_like(trace.bb_post[li - 1]);
      kernels::conv2d_backward_input(bt.bb_dpre[li], backbone_[li].w, backbone_[li].stride, backbone_[li].pad,
                                     d_post, false);
    }
  }
}

void DetectorModel::accumulate_param_grads(const std::vector<const Trace*>& traces,
                                           const std::vector<const BackTrace*>& backs, Grads& grads,
                                           bool parallel) const {
  const std::size_t n = traces.size();
  std::vector<const Tensor*> ins(n), douts(n);

  for (std::size_t l = 0; l < backbone_.size(); ++l) {
    for (std::size_t i = 0; i < n; ++i) {
      ins[i] = l == 0 ? &traces[i]->input : &traces[i]->bb_post[l - 1];
      douts[i] = &backs[i]->bb_dpre[l];
    }
    kernels::conv2d_backward_params(ins, douts, backbone_[l].stride, backbone_[l].pad, grads.backbone[l].dw,
                                    grads.backbone[l].db, parallel);
  }

  auto head_grads = [&](const std::vector<ConvLayer>& head, std::vector<ConvGrad>& hg, bool beta) {
    for (std::size_t i = 0; i < n; ++i) {
      ins[i] = &traces[i]->bb_post.back();
      douts[i] = beta ? &backs[i]->b_dpre1 : &backs[i]->a_dpre1;
    }
    kernels::conv2d_backward_params(ins, douts, head[0].stride, head[0].pad, hg[0].dw, hg[0].db, parallel);
    for (std::size_t i = 0; i < n; ++i) {
      ins[i] = beta ? &traces[i]->beta->post1 : &traces[i]->alpha.post1;
      douts[i] = beta ? &backs[i]->b_dmap : &backs[i]->a_dmap;
    }
    kernels::conv2d_backward_params(ins, douts, head[1].stride, head[1].pad, hg[1].dw, hg[1].db, parallel);
  };
  head_grads(head_alpha_, grads.head_alpha, false);
  if (cfg_.bea) head_grads(head_beta_, grads.head_beta, true);
}

void DetectorModel::sgd_step(const Grads& grads, Velocity& vel, double lr, double momentum) {
  auto step = [&](std::vector<ConvLayer>& layers, const std::vector<ConvGrad>& gs, std::vector<ConvGrad>& vs) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      kernels::sgd_momentum_step(layers[l].w, gs[l].dw, vs[l].dw, lr, momentum);
      for (std::size_t i = 0; i < layers[l].b.size(); ++i) {
        vs[l].db[i] = momentum * vs[l].db[i] - lr * gs[l].db[i];
        layers[l].b[i] += vs[l].db[i];
      }
    }
  };
  step(backbone_, grads.backbone, vel.backbone);
  step(head_alpha_, grads.head_alpha, vel.head_alpha);
  if (cfg_.bea) step(head_beta_, grads.head_beta, vel.head_beta);
}

Tensor grid_from_map(const Tensor& map, const GridSpec& grid) {
  Tensor out(grid.grid_shape());
  const int ch = grid.channels();
  for (int row = 0; row < grid.s; ++row)
    for (int col = 0; col < grid.s; ++col)
      for (int a = 0; a < grid.b; ++a)
        for (int c = 0; c < ch; ++c) out.at(row, col, a, c) = map.at(a * ch + c, row, col);
  return out;
}

Tensor map_from_grid(const Tensor& grid_t, const GridSpec& grid) {
  Tensor out({grid.b * grid.channels(), grid.s, grid.s});
  const int ch = grid.channels();
  for (int row = 0; row < grid.s; ++row)
    for (int col = 0; col < grid.s; ++col)
      for (int a = 0; a < grid.b; ++a)
        for (int c = 0; c < ch; ++c) out.at(a * ch + c, row, col) = grid_t.at(row, col, a, c);
  return out;
}

void activate_grid_backward(const Tensor& activated, const Tensor& d_activated, const GridSpec& grid,
                            Tensor& d_raw) {
  const int ch = grid.channels();
  const std::size_t anchors = static_cast<std::size_t>(grid.num_anchors());
  for (std::size_t a = 0; a < anchors; ++a) {
    const double* act = activated.data() + a * ch;
    const double* up = d_activated.data() + a * ch;
    double* out = d_raw.data() + a * ch;
    out[0] = up[0] * act[0] * (1.0 - act[0]);
    out[1] = up[1] * act[1] * (1.0 - act[1]);
    out[2] = act[2] >= 1.0 || act[2] <= 1e-9 ? 0.0 : up[2] * act[2];
    out[3] = act[3] >= 1.0 || act[3] <= 1e-9 ? 0.0 : up[3] * act[3];
    for (int c = 4; c < ch; ++c) out[c] = up[c] * act[c] * (1.0 - act[c]);
  }
}

void DetectorModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::string cfg = model_config_to_json(cfg_).dump();
  const std::uint64_t cfg_len = cfg.size();
  out.write(reinterpret_cast<const char*>(&cfg_len), sizeof(cfg_len));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  auto write_layers = [&out](const std::vector<ConvLayer>& layers) {
    for (const ConvLayer& l : layers) {
      const std::uint64_t wn = l.w.size();
      out.write(reinterpret_cast<const char*>(&wn), sizeof(wn));
      out.write(reinterpret_cast<const char*>(l.w.data()), static_cast<std::streamsize>(wn * sizeof(double)));
      const std::uint64_t bn = l.b.size();
      out.write(reinterpret_cast<const char*>(&bn), sizeof(bn));
      out.write(reinterpret_cast<const char*>(l.b.data()), static_cast<std::streamsize>(bn * sizeof(double)));
    }
  };
  write_layers(backbone_);
  write_layers(head_alpha_);
  write_layers(head_beta_);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

DetectorModel DetectorModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a model checkpoint: " + path.string());
  }
  std::uint64_t cfg_len = 0;
  in.read(reinterpret_cast<char*>(&cfg_len), sizeof(cfg_len));
  std::string cfg_str(cfg_len, '\0');
  in.read(cfg_str.data(), static_cast<std::streamsize>(cfg_len));
  DetectorModel model(model_config_from_json(json::parse(cfg_str)));

  auto read_layers = [&in, &path](std::vector<ConvLayer>& layers) {
    for (ConvLayer& l : layers) {
      std::uint64_t wn = 0;
      in.read(reinterpret_cast<char*>(&wn), sizeof(wn));
      if (wn != l.w.size()) throw std::runtime_error("checkpoint layout mismatch: " + path.string());
      in.read(reinterpret_cast<char*>(l.w.data()), static_cast<std::streamsize>(wn * sizeof(double)));
      std::uint64_t bn = 0;
      in.read(reinterpret_cast<char*>(&bn), sizeof(bn));
      if (bn != l.b.size()) throw std::runtime_error("checkpoint layout mismatch: " + path.string());
      in.read(reinterpret_cast<char*>(l.b.data()), static_cast<std::streamsize>(bn * sizeof(double)));
    }
  };
  read_layers(model.backbone_);
  read_layers(model.head_alpha_);
  read_layers(model.head_beta_);
  if (!in) throw std::runtime_error("checkpoint truncated: " + path.string());
  return model;
}

}  // namespace bea
