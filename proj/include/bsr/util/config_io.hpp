// Copyright (c) 2026 the burstsr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include <json.hpp>

#include "bsr/data/synthesis.hpp"
#include "bsr/model/config.hpp"
#include "bsr/train/trainer.hpp"

namespace bsr::util {

using json = nlohmann::json;

// All parsers reject unknown keys (fail fast on typos) and fill missing keys
// from the defaults.

json to_json(const model::ModelConfig& cfg);
model::ModelConfig model_config_from_json(const json& j);

json to_json(const train::TrainConfig& cfg);
train::TrainConfig train_config_from_json(const json& j);

json to_json(const data::SynthesisConfig& cfg);
data::SynthesisConfig synthesis_config_from_json(const json& j);

// A config file has up to three sections: "model", "train", "synthesis".
struct ExperimentConfig {
    model::ModelConfig model;
    train::TrainConfig train;
    data::SynthesisConfig synthesis;
};

json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Sets a dotted path ("train.lr_start=2e-4"); the value is parsed as JSON
// when possible, else taken as a string.
void apply_override(json& j, const std::string& assignment);

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

}  // namespace bsr::util
