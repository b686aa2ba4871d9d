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

#include "bsr/util/config_io.hpp"

#include <fstream>
#include <initializer_list>

#include "bsr/errors.hpp"

namespace bsr::util {

namespace {

void check_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(std::string(what) + ": object expected");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const model::ModelConfig& cfg) {
    return json{{"channels", cfg.channels},
                {"encoder_blocks", cfg.encoder_blocks},
                {"fusion_blocks", cfg.fusion_blocks},
                {"upsampler_blocks", cfg.upsampler_blocks},
                {"scale", cfg.scale},
                {"deform_groups", cfg.deform_groups},
                {"fusion_variant", model::to_string(cfg.fusion_variant)},
                {"align_variant", model::to_string(cfg.align_variant)},
                {"flow_source", model::to_string(cfg.flow_source)},
                {"fixed_burst_length", cfg.fixed_burst_length}};
}

model::ModelConfig model_config_from_json(const json& j) {
    check_keys(j, "model config",
               {"channels", "encoder_blocks", "fusion_blocks", "upsampler_blocks", "scale",
                "deform_groups", "fusion_variant", "align_variant", "flow_source",
                "fixed_burst_length"});
    model::ModelConfig cfg;
    get_if(j, "channels", cfg.channels);
    get_if(j, "encoder_blocks", cfg.encoder_blocks);
    get_if(j, "fusion_blocks", cfg.fusion_blocks);
    get_if(j, "upsampler_blocks", cfg.upsampler_blocks);
    get_if(j, "scale", cfg.scale);
    get_if(j, "deform_groups", cfg.deform_groups);
    if (j.contains("fusion_variant"))
        cfg.fusion_variant = model::fusion_variant_from_string(j.at("fusion_variant"));
    if (j.contains("align_variant"))
        cfg.align_variant = model::align_variant_from_string(j.at("align_variant"));
    if (j.contains("flow_source"))
        cfg.flow_source = model::flow_source_from_string(j.at("flow_source"));
    get_if(j, "fixed_burst_length", cfg.fixed_burst_length);
    cfg.validate();
    return cfg;
}

json to_json(const train::TrainConfig& cfg) {
    return json{{"batch_size", cfg.batch_size},
                {"patch_size", cfg.patch_size},
                {"total_iters", cfg.total_iters},
                {"lr_start", cfg.lr_start},
                {"lr_end", cfg.lr_end},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"weight_decay", cfg.weight_decay},
                {"grad_clip", cfg.grad_clip},
                {"loss_variant", metrics::to_string(cfg.loss_variant)},
                {"seed", cfg.seed},
                {"checkpoint_every", cfg.checkpoint_every}};
}

train::TrainConfig train_config_from_json(const json& j) {
    check_keys(j, "train config",
               {"batch_size", "patch_size", "total_iters", "lr_start", "lr_end", "beta1", "beta2",
                "weight_decay", "grad_clip", "loss_variant", "seed", "checkpoint_every"});
    train::TrainConfig cfg;
    get_if(j, "batch_size", cfg.batch_size);
    get_if(j, "patch_size", cfg.patch_size);
    get_if(j, "total_iters", cfg.total_iters);
    get_if(j, "lr_start", cfg.lr_start);
    get_if(j, "lr_end", cfg.lr_end);
    get_if(j, "beta1", cfg.beta1);
    get_if(j, "beta2", cfg.beta2);
    get_if(j, "weight_decay", cfg.weight_decay);
    get_if(j, "grad_clip", cfg.grad_clip);
    if (j.contains("loss_variant"))
        cfg.loss_variant = metrics::loss_variant_from_string(j.at("loss_variant"));
    get_if(j, "seed", cfg.seed);
    get_if(j, "checkpoint_every", cfg.checkpoint_every);
    cfg.validate();
    return cfg;
}

json to_json(const data::SynthesisConfig& cfg) {
    return json{{"scale", cfg.scale},
                {"patch_raw", cfg.patch_raw},
                {"burst_size", cfg.burst_size},
                {"max_translation", cfg.max_translation},
                {"max_rotation", cfg.max_rotation},
                {"gamma_lo", cfg.gamma_lo},
                {"gamma_hi", cfg.gamma_hi},
                {"wb_lo", cfg.wb_lo},
                {"wb_hi", cfg.wb_hi},
                {"shot_lo", cfg.shot_lo},
                {"shot_hi", cfg.shot_hi},
                {"read_lo", cfg.read_lo},
                {"read_hi", cfg.read_hi},
                {"use_tone_curve", cfg.use_tone_curve}};
}

data::SynthesisConfig synthesis_config_from_json(const json& j) {
    check_keys(j, "synthesis config",
               {"scale", "patch_raw", "burst_size", "max_translation", "max_rotation", "gamma_lo",
                "gamma_hi", "wb_lo", "wb_hi", "shot_lo", "shot_hi", "read_lo", "read_hi",
                "use_tone_curve"});
    data::SynthesisConfig cfg;
    get_if(j, "scale", cfg.scale);
    get_if(j, "patch_raw", cfg.patch_raw);
    get_if(j, "burst_size", cfg.burst_size);
    get_if(j, "max_translation", cfg.max_translation);
    get_if(j, "max_rotation", cfg.max_rotation);
    get_if(j, "gamma_lo", cfg.gamma_lo);
    get_if(j, "gamma_hi", cfg.gamma_hi);
    get_if(j, "wb_lo", cfg.wb_lo);
    get_if(j, "wb_hi", cfg.wb_hi);
    get_if(j, "shot_lo", cfg.shot_lo);
    get_if(j, "shot_hi", cfg.shot_hi);
    get_if(j, "read_lo", cfg.read_lo);
    get_if(j, "read_hi", cfg.read_hi);
    get_if(j, "use_tone_curve", cfg.use_tone_curve);
    cfg.validate();
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    return json{{"model", to_json(cfg.model)},
                {"train", to_json(cfg.train)},
                {"synthesis", to_json(cfg.synthesis)}};
}

ExperimentConfig experiment_from_json(const json& j) {
    check_keys(j, "experiment config", {"model", "train", "synthesis"});
    ExperimentConfig cfg;
    if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) cfg.train = train_config_from_json(j.at("train"));
    if (j.contains("synthesis")) cfg.synthesis = synthesis_config_from_json(j.at("synthesis"));
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return experiment_from_json(load_json_file(path));
}

void apply_override(json& j, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like section.key=value: " + assignment);
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &j;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ConfigError("bad override path: " + path);
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    json j = json::parse(f, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError("malformed JSON in " + path);
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << "\n";
}

}  // namespace bsr::util
