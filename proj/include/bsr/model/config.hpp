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

#include <cstdint>
#include <string>
#include <vector>

#include "bsr/errors.hpp"
#include "bsr/nn/params.hpp"

namespace bsr::model {

enum class FusionVariant { kKfgr, kBaseline, kBidirectional, kReversed, kSum, kConcat };
enum class AlignVariant { kFlowGuidedDeformable, kFlowOnly, kDeformableOnly, kIdentity };
// Where alignment flow comes from: the learned pyramid estimator, a zero-flow
// stub, or caller-supplied fields (e.g. derived from known synthesis motion).
enum class FlowSource { kLearned, kZero, kOracle };

std::string to_string(FusionVariant v);
std::string to_string(AlignVariant v);
std::string to_string(FlowSource v);
FusionVariant fusion_variant_from_string(const std::string& s);
AlignVariant align_variant_from_string(const std::string& s);
FlowSource flow_source_from_string(const std::string& s);

struct ModelConfig {
    int channels = 64;
    int encoder_blocks = 5;
    int fusion_blocks = 40;
    int upsampler_blocks = 5;
    int scale = 4;
    int deform_groups = 8;
    FusionVariant fusion_variant = FusionVariant::kKfgr;
    AlignVariant align_variant = AlignVariant::kFlowGuidedDeformable;
    FlowSource flow_source = FlowSource::kLearned;
    int fixed_burst_length = 0;  // required >= 1 for the concat variant

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Widths of the 7x7 conv ladder used at each flow-pyramid level, derived from
// the feature width so desk-scale configs shrink the estimator too.
struct FlowLadderWidths {
    int c1, c2, c3, c4;
};
FlowLadderWidths flow_ladder_widths(int channels);

inline constexpr int kFlowPyramidLevels = 3;

// Full table of learnable tensors for a config; the single source of truth
// shared by initialization, checkpointing and count_parameters.
std::vector<nn::ParamSpec> param_specs(const ModelConfig& cfg);

int64_t count_parameters(const ModelConfig& cfg);

}  // namespace bsr::model
