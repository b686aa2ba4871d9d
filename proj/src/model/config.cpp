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

#include "bsr/model/config.hpp"

namespace bsr::model {

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void conv_spec(std::vector<nn::ParamSpec>& out, const std::string& name, int cout, int cin,
               int k, bool zero_init = false) {
    out.push_back({name + ".w", {cout, cin, k, k}, zero_init});
    out.push_back({name + ".b", {cout}, zero_init});
}

void block_specs(std::vector<nn::ParamSpec>& out, const std::string& prefix, int count,
                 int channels) {
    for (int i = 0; i < count; ++i) {
        const std::string b = prefix + ".block" + std::to_string(i);
        conv_spec(out, b + ".conv1", channels, channels, 3);
        conv_spec(out, b + ".conv2", channels, channels, 3, /*zero_init=*/true);
    }
}

}  // namespace

std::string to_string(FusionVariant v) {
    switch (v) {
        case FusionVariant::kKfgr: return "kfgr";
        case FusionVariant::kBaseline: return "baseline";
        case FusionVariant::kBidirectional: return "bidirectional";
        case FusionVariant::kReversed: return "reversed";
        case FusionVariant::kSum: return "sum";
        case FusionVariant::kConcat: return "concat";
    }
    return "kfgr";
}

std::string to_string(AlignVariant v) {
    switch (v) {
        case AlignVariant::kFlowGuidedDeformable: return "flow_guided_deformable";
        case AlignVariant::kFlowOnly: return "flow_only";
        case AlignVariant::kDeformableOnly: return "deformable_only";
        case AlignVariant::kIdentity: return "identity";
    }
    return "flow_guided_deformable";
}

std::string to_string(FlowSource v) {
    switch (v) {
        case FlowSource::kLearned: return "learned";
        case FlowSource::kZero: return "zero";
        case FlowSource::kOracle: return "oracle";
    }
    return "learned";
}

FusionVariant fusion_variant_from_string(const std::string& s) {
    if (s == "kfgr") return FusionVariant::kKfgr;
    if (s == "baseline") return FusionVariant::kBaseline;
    if (s == "bidirectional") return FusionVariant::kBidirectional;
    if (s == "reversed") return FusionVariant::kReversed;
    if (s == "sum") return FusionVariant::kSum;
    if (s == "concat") return FusionVariant::kConcat;
    throw ConfigError("unknown fusion_variant: " + s);
}

AlignVariant align_variant_from_string(const std::string& s) {
    if (s == "flow_guided_deformable") return AlignVariant::kFlowGuidedDeformable;
    if (s == "flow_only") return AlignVariant::kFlowOnly;
    if (s == "deformable_only") return AlignVariant::kDeformableOnly;
    if (s == "identity") return AlignVariant::kIdentity;
    throw ConfigError("unknown align_variant: " + s);
}

FlowSource flow_source_from_string(const std::string& s) {
    if (s == "learned") return FlowSource::kLearned;
    if (s == "zero") return FlowSource::kZero;
    if (s == "oracle") return FlowSource::kOracle;
    throw ConfigError("unknown flow_source: " + s);
}

void ModelConfig::validate() const {
    if (channels < 1) throw ConfigError("channels must be >= 1");
    if (encoder_blocks < 1 || fusion_blocks < 1 || upsampler_blocks < 1)
        throw ConfigError("block counts must be >= 1");
    if (scale < 1) throw ConfigError("scale must be >= 1");
    if (!power_of_two(2 * scale))
        throw ConfigError("upsampler needs 2*scale to be a power of two");
    if (deform_groups < 1) throw ConfigError("deform_groups must be >= 1");
    if (channels % deform_groups != 0)
        throw ConfigError("channels must be divisible by deform_groups");
    if (fusion_variant == FusionVariant::kConcat && fixed_burst_length < 1)
        throw ConfigError("concat fusion requires fixed_burst_length >= 1");
}

FlowLadderWidths flow_ladder_widths(int channels) {
    FlowLadderWidths w;
    w.c1 = std::max(4, channels / 2);
    w.c2 = std::max(4, channels);
    w.c3 = std::max(4, channels / 2);
    w.c4 = std::max(2, channels / 4);
    return w;
}

std::vector<nn::ParamSpec> param_specs(const ModelConfig& cfg) {
    cfg.validate();
    const int c = cfg.channels;
    std::vector<nn::ParamSpec> specs;

    conv_spec(specs, "enc.conv0", c, 4, 3);
    block_specs(specs, "enc", cfg.encoder_blocks, c);

    const FlowLadderWidths fw = flow_ladder_widths(c);
    for (int l = 0; l < kFlowPyramidLevels; ++l) {
        const std::string p = "flow.l" + std::to_string(l);
        conv_spec(specs, p + ".conv0", fw.c1, 10, 7);
        conv_spec(specs, p + ".conv1", fw.c2, fw.c1, 7);
        conv_spec(specs, p + ".conv2", fw.c3, fw.c2, 7);
        conv_spec(specs, p + ".conv3", fw.c4, fw.c3, 7);
        conv_spec(specs, p + ".head", 2, fw.c4, 7, /*zero_init=*/true);
    }

    conv_spec(specs, "align.conv0", c, 2 * c + 2, 3);
    conv_spec(specs, "align.conv1", c, c, 3);
    conv_spec(specs, "align.conv2", c, c, 3);
    conv_spec(specs, "align.head", 3 * cfg.deform_groups, c, 3, /*zero_init=*/true);

    int reduce_in = 0;
    switch (cfg.fusion_variant) {
        case FusionVariant::kKfgr:
        case FusionVariant::kReversed:
        case FusionVariant::kBidirectional: reduce_in = 3 * c; break;
        case FusionVariant::kBaseline: reduce_in = 2 * c; break;
        case FusionVariant::kSum: reduce_in = c; break;
        case FusionVariant::kConcat: reduce_in = cfg.fixed_burst_length * c; break;
    }
    conv_spec(specs, "fuse.reduce", c, reduce_in, 3);
    block_specs(specs, "fuse", cfg.fusion_blocks, c);
    conv_spec(specs, "fuse.final", c, c, 3, /*zero_init=*/true);
    if (cfg.fusion_variant == FusionVariant::kBidirectional) {
        conv_spec(specs, "fuse.back.reduce", c, 2 * c, 3);
        block_specs(specs, "fuse.back", cfg.fusion_blocks, c);
        conv_spec(specs, "fuse.back.final", c, c, 3, /*zero_init=*/true);
    }

    block_specs(specs, "ups", cfg.upsampler_blocks, c);
    int stages = 0;
    for (int f = 2 * cfg.scale; f > 1; f /= 2) ++stages;
    for (int sidx = 0; sidx < stages; ++sidx)
        conv_spec(specs, "ups.stage" + std::to_string(sidx) + ".conv", 4 * c, c, 3);
    conv_spec(specs, "ups.final", 3, c, 3);

    return specs;
}

int64_t count_parameters(const ModelConfig& cfg) {
    int64_t n = 0;
    for (const nn::ParamSpec& s : param_specs(cfg)) {
        int64_t k = 1;
        for (int d : s.dims) k *= d;
        n += k;
    }
    return n;
}

}  // namespace bsr::model
