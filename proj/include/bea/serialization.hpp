#pragma once

#include <json.hpp>

#include "bea/dataset.hpp"
#include "bea/diversity.hpp"
#include "bea/model.hpp"
#include "bea/tandem.hpp"
#include "bea/train.hpp"

namespace bea {

// ADL (de)serializers for the config types. from_json accepts partial
// objects and keeps defaults for missing keys, so handwritten config files
// stay short; to_json always writes the fully resolved config.

void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

void to_json(nlohmann::json& j, const SceneSpec& s);
void from_json(const nlohmann::json& j, SceneSpec& s);

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace bea
