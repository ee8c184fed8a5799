#include "bea/serialization.hpp"

#include <stdexcept>

namespace bea {

using nlohmann::json;

void to_json(json& j, const GridSpec& g) {
  json anchors = json::array();
  for (const auto& a : g.anchor_sizes) anchors.push_back({a.first, a.second});
  j = json{{"s", g.s}, {"b", g.b}, {"anchor_sizes", anchors}, {"k", g.k}};
}

void from_json(const json& j, GridSpec& g) {
  g.s = j.value("s", g.s);
  g.b = j.value("b", g.b);
  g.k = j.value("k", g.k);
  if (j.contains("anchor_sizes")) {
    g.anchor_sizes.clear();
    for (const auto& a : j.at("anchor_sizes")) {
      g.anchor_sizes.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    }
  }
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"grid", c.grid},
           {"backbone_channels", c.backbone_channels},
           {"head_channels", c.head_channels},
           {"bea", c.bea},
           {"image_size", c.image_size},
           {"in_channels", c.in_channels},
           {"leaky_slope", c.leaky_slope}};
}

void from_json(const json& j, ModelConfig& c) {
  if (j.contains("grid")) j.at("grid").get_to(c.grid);
  c.backbone_channels = j.value("backbone_channels", c.backbone_channels);
  c.head_channels = j.value("head_channels", c.head_channels);
  c.bea = j.value("bea", c.bea);
  c.image_size = j.value("image_size", c.image_size);
  c.in_channels = j.value("in_channels", c.in_channels);
  c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
}

void to_json(json& j, const LossWeights& w) {
  j = json{{"w_conv", w.w_conv},
           {"w_tandem", w.w_tandem},
           {"w_diversity", w.w_diversity},
           {"enable_ta", w.enable_ta},
           {"enable_tq", w.enable_tq},
           {"eps_tq", w.eps_tq},
           {"reduction", w.reduction == Reduction::mean ? "mean" : "sum"},
           {"include_class_channels", w.include_class_channels}};
}

void from_json(const json& j, LossWeights& w) {
  w.w_conv = j.value("w_conv", w.w_conv);
  w.w_tandem = j.value("w_tandem", w.w_tandem);
  w.w_diversity = j.value("w_diversity", w.w_diversity);
  w.enable_ta = j.value("enable_ta", w.enable_ta);
  w.enable_tq = j.value("enable_tq", w.enable_tq);
  w.eps_tq = j.value("eps_tq", w.eps_tq);
  if (j.contains("reduction")) {
    const std::string r = j.at("reduction").get<std::string>();
    if (r == "mean") {
      w.reduction = Reduction::mean;
    } else if (r == "sum") {
      w.reduction = Reduction::sum;
    } else {
      throw std::invalid_argument("unknown reduction: " + r);
    }
  }
  w.include_class_channels = j.value("include_class_channels", w.include_class_channels);
}

void to_json(json& j, const SceneSpec& s) {
  json classes = json::array();
  for (ShapeKind k : s.shape_classes) classes.push_back(to_string(k));
  j = json{{"image_size", s.image_size},      {"shape_classes", classes},
           {"objects_min", s.objects_min},    {"objects_max", s.objects_max},
           {"noise_std", s.noise_std},        {"ood_mode", to_string(s.ood_mode)}};
}

void from_json(const json& j, SceneSpec& s) {
  s.image_size = j.value("image_size", s.image_size);
  if (j.contains("shape_classes")) {
    s.shape_classes.clear();
    for (const auto& name : j.at("shape_classes")) {
      s.shape_classes.push_back(shape_kind_from_string(name.get<std::string>()));
    }
  }
  s.objects_min = j.value("objects_min", s.objects_min);
  s.objects_max = j.value("objects_max", s.objects_max);
  s.noise_std = j.value("noise_std", s.noise_std);
  if (j.contains("ood_mode")) s.ood_mode = ood_mode_from_string(j.at("ood_mode").get<std::string>());
}

void to_json(json& j, const TrainConfig& c) {
  j = json{{"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"learning_rate", c.learning_rate},
           {"momentum", c.momentum},
           {"seed", c.seed},
           {"weights", c.weights},
           {"lr_decay_factor", c.lr_decay_factor},
           {"lr_decay_at", c.lr_decay_at},
           {"monitors", c.monitors}};
  j["diversity_kind"] = c.diversity_kind ? json(to_string(*c.diversity_kind)) : json(nullptr);
}

void from_json(const json& j, TrainConfig& c) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.seed = j.value("seed", c.seed);
  if (j.contains("weights")) j.at("weights").get_to(c.weights);
  if (j.contains("diversity_kind") && !j.at("diversity_kind").is_null()) {
    c.diversity_kind = diversity_kind_from_string(j.at("diversity_kind").get<std::string>());
  }
  c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
  c.lr_decay_at = j.value("lr_decay_at", c.lr_decay_at);
  c.monitors = j.value("monitors", c.monitors);
}

}  // namespace bea
