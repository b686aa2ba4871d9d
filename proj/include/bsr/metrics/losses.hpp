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

#include "bsr/errors.hpp"
#include "bsr/model/network.hpp"
#include "bsr/nn/graph.hpp"
#include "bsr/rng.hpp"
#include "bsr/tensor.hpp"

namespace bsr::metrics {

enum class LossVariant { kLastOnly, kEveryStep, kImplicitWeighting };

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

struct LossValue {
    double value = 0.0;
    int sampled_index = -1;  // recurrence index drawn for the weighting loss
};

// Mean absolute difference over all elements.
LossValue l1_loss(const Tensor<float>& pred, const Tensor<float>& target);

// ---- graph builders (shared by the trainer and the wrappers below) ----

template <class T>
nn::ValueId l1_node(nn::Graph<T>& g, nn::ValueId pred, nn::ValueId target) {
    require_same_shape(g.value(pred), g.value(target), "l1");
    return g.mean_all(g.abs_val(g.sub(pred, target)));
}

struct BuiltLoss {
    nn::ValueId node = -1;
    int sampled_index = -1;
};

// Attaches the configured training objective to a forward pass.
//  last_only:          |y_N - y|
//  every_step:         mean_i |y_i - y|
//  implicit_weighting: |y_i - y| + |y_N - y|, i ~ U{1..N-1}; needs N >= 2.
template <class T>
BuiltLoss build_loss(nn::Graph<T>& g, typename model::BurstSrNet<T>::ForwardPass& fp,
                     nn::ValueId target, LossVariant variant, Rng& rng) {
    BuiltLoss out;
    switch (variant) {
        case LossVariant::kLastOnly:
            out.node = l1_node(g, fp.sr(fp.n), target);
            break;
        case LossVariant::kEveryStep: {
            nn::ValueId acc = -1;
            for (int i = 1; i <= fp.n; ++i) {
                nn::ValueId term = l1_node(g, fp.sr(i), target);
                acc = acc < 0 ? term : g.add(acc, term);
            }
            out.node = g.scale(acc, T(1) / static_cast<T>(fp.n));
            break;
        }
        case LossVariant::kImplicitWeighting: {
            if (fp.n < 2)
                throw InvalidBurstLength("implicit weighting loss needs at least 2 frames");
            out.sampled_index = rng.uniform_int(1, fp.n - 1);
            out.node = g.add(l1_node(g, fp.sr(out.sampled_index), target),
                             l1_node(g, fp.sr(fp.n), target));
            break;
        }
    }
    return out;
}

// ---- value-only wrappers over a model ----

LossValue implicit_weighting_loss(model::BurstSrNet<float>& net,
                                  const std::vector<Tensor<float>>& burst,
                                  const Tensor<float>& target, Rng& rng);

LossValue every_step_loss(model::BurstSrNet<float>& net, const std::vector<Tensor<float>>& burst,
                          const Tensor<float>& target);

}  // namespace bsr::metrics
