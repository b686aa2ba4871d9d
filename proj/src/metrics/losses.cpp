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

#include "bsr/metrics/losses.hpp"

#include <cmath>

namespace bsr::metrics {

std::string to_string(LossVariant v) {
    switch (v) {
        case LossVariant::kLastOnly: return "last_only";
        case LossVariant::kEveryStep: return "every_step";
        case LossVariant::kImplicitWeighting: return "implicit_weighting";
    }
    return "last_only";
}

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "last_only") return LossVariant::kLastOnly;
    if (s == "every_step") return LossVariant::kEveryStep;
    if (s == "implicit_weighting") return LossVariant::kImplicitWeighting;
    throw ConfigError("unknown loss_variant: " + s);
}

LossValue l1_loss(const Tensor<float>& pred, const Tensor<float>& target) {
    require_same_shape(pred, target, "l1_loss");
    if (pred.numel() == 0) throw InvalidInput("l1_loss: empty tensors");
    double acc = 0.0;
    for (int64_t i = 0; i < pred.numel(); ++i)
        acc += std::abs(static_cast<double>(pred.v[static_cast<size_t>(i)]) -
                        static_cast<double>(target.v[static_cast<size_t>(i)]));
    return {acc / static_cast<double>(pred.numel()), -1};
}

LossValue implicit_weighting_loss(model::BurstSrNet<float>& net,
                                  const std::vector<Tensor<float>>& burst,
                                  const Tensor<float>& target, Rng& rng) {
    if (burst.size() < 2)
        throw InvalidBurstLength("implicit weighting loss needs at least 2 frames");
    nn::Graph<float> g;
    auto fp = net.begin_forward(g, burst);
    nn::ValueId tgt = g.input(target);
    BuiltLoss built = build_loss(g, fp, tgt, LossVariant::kImplicitWeighting, rng);
    return {static_cast<double>(g.value(built.node).v[0]), built.sampled_index};
}

LossValue every_step_loss(model::BurstSrNet<float>& net, const std::vector<Tensor<float>>& burst,
                          const Tensor<float>& target) {
    Rng unused(0);
    nn::Graph<float> g;
    auto fp = net.begin_forward(g, burst);
    nn::ValueId tgt = g.input(target);
    BuiltLoss built = build_loss(g, fp, tgt, LossVariant::kEveryStep, unused);
    return {static_cast<double>(g.value(built.node).v[0]), -1};
}

}  // namespace bsr::metrics
