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
#include <map>
#include <string>
#include <vector>

#include "bsr/errors.hpp"
#include "bsr/model/config.hpp"
#include "bsr/nn/graph.hpp"
#include "bsr/nn/params.hpp"
#include "bsr/tensor.hpp"

namespace bsr::model {

using nn::Graph;
using nn::ValueId;

// Burst super-resolution network: per-frame encoder, flow-guided deformable
// alignment to the base frame, frame-by-frame recurrent fusion (the base
// frame re-enters every recurrence as a key condition), and a pixel-shuffle
// up-sampler. Fusion and alignment variants are selected via ModelConfig.
//
// Instantiated at float for training/inference and at double for
// finite-difference gradient checks.
template <class T>
class BurstSrNet {
public:
    // Call counters used by tests to observe sharing contracts. Not
    // synchronized; reset before use.
    struct Trace {
        int64_t encode_calls = 0;
        int64_t flow_calls = 0;
        int64_t align_calls = 0;
        int64_t fuse_calls = 0;
        int64_t upsample_calls = 0;
        int64_t intermediate_upsample_calls = 0;
        void reset() { *this = Trace{}; }
    };

    explicit BurstSrNet(ModelConfig cfg) : cfg_(std::move(cfg)), params_(param_specs(cfg_)) {}

    const ModelConfig& config() const { return cfg_; }
    nn::ParamSet<T>& params() { return params_; }
    const nn::ParamSet<T>& params() const { return params_; }

    void init_params(uint64_t seed) { params_.init(seed); }

    // Replaces parameters from another precision (gradient-check plumbing).
    template <class U>
    void load_params(const nn::ParamSet<U>& src) {
        params_ = src.template cast<T>();
    }

    Trace trace;

    // ---- graph builders ----

    // (4, h, w) packed frame -> (C, h, w) feature map.
    ValueId encode(Graph<T>& g, ValueId frame) {
        const Tensor<T>& t = g.value(frame);
        if (t.rank() != 3 || t.dim(0) != 4) throw InvalidShape("encode: packed (4,h,w) expected");
        if (t.dim(1) < 8 || t.dim(2) < 8)
            throw InvalidShape("encode: input below receptive minimum (8x8)");
        ++trace.encode_calls;
        ValueId x = conv(g, frame, "enc.conv0");
        return res_blocks(g, x, "enc", cfg_.encoder_blocks);
    }

    // Coarse-to-fine residual flow between two packed frames, evaluated on a
    // half-resolution pyramid and upsampled back to the input resolution.
    // Displacements are in packed-pixel units. Zero-initialized per-level
    // heads make the initial flow identically zero.
    ValueId estimate_flow(Graph<T>& g, ValueId base, ValueId other) {
        const Tensor<T>& tb = g.value(base);
        const Tensor<T>& to = g.value(other);
        require_same_shape(tb, to, "estimate_flow");
        if (tb.rank() != 3 || tb.dim(0) != 4)
            throw InvalidShape("estimate_flow: packed (4,h,w) expected");
        const int h = tb.dim(1), w = tb.dim(2);
        if (h < 8 || w < 8) throw InvalidShape("estimate_flow: input below 8x8");
        ++trace.flow_calls;

        std::vector<ValueId> pb(kFlowPyramidLevels), po(kFlowPyramidLevels);
        pb[0] = g.avg_pool2(base);
        po[0] = g.avg_pool2(other);
        for (int l = 1; l < kFlowPyramidLevels; ++l) {
            pb[l] = g.avg_pool2(pb[l - 1]);
            po[l] = g.avg_pool2(po[l - 1]);
        }

        ValueId flow = -1;
        for (int l = kFlowPyramidLevels - 1; l >= 0; --l) {
            const Tensor<T>& lvl = g.value(pb[l]);
            ValueId up;
            if (flow < 0) {
                up = g.input(Tensor<T>::zeros({2, lvl.dim(1), lvl.dim(2)}));
            } else {
                up = g.scale(g.resize_bilinear(flow, lvl.dim(1), lvl.dim(2)), T(2));
            }
            ValueId warped = g.warp_grouped(po[l], up, 1);
            ValueId x = g.concat_channels({pb[l], warped, up});
            const std::string p = "flow.l" + std::to_string(l);
            x = g.leaky_relu(conv(g, x, p + ".conv0"), T(0.1));
            x = g.leaky_relu(conv(g, x, p + ".conv1"), T(0.1));
            x = g.leaky_relu(conv(g, x, p + ".conv2"), T(0.1));
            x = g.leaky_relu(conv(g, x, p + ".conv3"), T(0.1));
            ValueId residual = conv(g, x, p + ".head");
            flow = g.add(up, residual);
        }
        return g.scale(g.resize_bilinear(flow, h, w), T(2));
    }

    // Warps f_i towards f_base: bilinear pre-warp by the guiding flow, then
    // per-group residual offsets and gating masks predicted from
    // (f_base, pre-warped f_i, flow). The gate blends the offset-resampled
    // feature with the pre-warped one, so zero-initialized heads leave the
    // pre-warp untouched and zero flow reproduces f_i exactly.
    ValueId align(Graph<T>& g, ValueId f_base, ValueId f_i, ValueId flow) {
        const Tensor<T>& tb = g.value(f_base);
        const Tensor<T>& ti = g.value(f_i);
        require_same_shape(tb, ti, "align");
        ++trace.align_calls;
        if (cfg_.align_variant == AlignVariant::kIdentity) return f_i;
        const Tensor<T>& tf = g.value(flow);
        if (tf.rank() != 3 || tf.dim(0) != 2 || tf.dim(1) != tb.dim(1) || tf.dim(2) != tb.dim(2))
            throw InvalidShape("align: flow must be (2,h,w) matching features");

        ValueId prewarped = g.warp_grouped(f_i, flow, 1);
        if (cfg_.align_variant == AlignVariant::kFlowOnly) return prewarped;

        const int groups = cfg_.deform_groups;
        ValueId x = g.concat_channels({f_base, prewarped, flow});
        x = g.leaky_relu(conv(g, x, "align.conv0"), T(0.1));
        x = g.leaky_relu(conv(g, x, "align.conv1"), T(0.1));
        x = g.leaky_relu(conv(g, x, "align.conv2"), T(0.1));
        ValueId head = conv(g, x, "align.head");
        ValueId offsets = g.slice_channels(head, 0, 2 * groups);
        ValueId mask = g.sigmoid(g.slice_channels(head, 2 * groups, 3 * groups));

        std::vector<ValueId> flow_rep(static_cast<size_t>(groups), flow);
        ValueId sample_flows = g.add(offsets, g.concat_channels(flow_rep));
        ValueId sampled = g.warp_grouped(f_i, sample_flows, groups);
        return g.add(prewarped, g.group_scale(g.sub(sampled, prewarped), mask, groups));
    }

    // One recurrence: h_i = branch(concat(...)) + h_prev. The branch is a 3x3
    // reduction conv, the fusion residual blocks, and a zero-initialized 3x3
    // conv, so a fresh model propagates h unchanged.
    ValueId fuse_step(Graph<T>& g, ValueId h_prev, ValueId f_aligned, ValueId f_base) {
        require_same_shape(g.value(h_prev), g.value(f_aligned), "fuse_step");
        ++trace.fuse_calls;
        ValueId cat;
        switch (cfg_.fusion_variant) {
            case FusionVariant::kBaseline:
                cat = g.concat_channels({h_prev, f_aligned});
                break;
            case FusionVariant::kKfgr:
            case FusionVariant::kReversed:
                cat = g.concat_channels({f_base, h_prev, f_aligned});
                break;
            default:
                throw InvalidInput("fuse_step: not a stepwise fusion variant");
        }
        return g.add(fusion_branch(g, cat, "fuse"), h_prev);
    }

    // States h_1..h_N; h_1 = f_base, recurrences consume the aligned features.
    // Under sum/concat the recursion is replaced by mean/concatenation of all
    // features through the same residual backbone. For concat only the final
    // state exists (marked -1 elsewhere).
    std::vector<ValueId> recurrent_fuse(Graph<T>& g, ValueId f_base,
                                        const std::vector<ValueId>& aligned) {
        if (f_base < 0) throw InvalidInput("recurrent_fuse: missing base feature");
        const int n = static_cast<int>(aligned.size()) + 1;
        std::vector<ValueId> states;
        states.reserve(static_cast<size_t>(n));
        states.push_back(f_base);
        if (n == 1) return states;

        switch (cfg_.fusion_variant) {
            case FusionVariant::kKfgr:
            case FusionVariant::kBaseline: {
                for (ValueId a : aligned)
                    states.push_back(fuse_step(g, states.back(), a, f_base));
                break;
            }
            case FusionVariant::kReversed: {
                for (auto it = aligned.rbegin(); it != aligned.rend(); ++it)
                    states.push_back(fuse_step(g, states.back(), *it, f_base));
                break;
            }
            case FusionVariant::kBidirectional: {
                // Backward sweep over the aligned features, then a forward
                // sweep conditioned on the backward states.
                const int m = static_cast<int>(aligned.size());
                std::vector<ValueId> back(static_cast<size_t>(m));
                back[static_cast<size_t>(m) - 1] = aligned.back();
                for (int j = m - 2; j >= 0; --j) {
                    ValueId cat = g.concat_channels({back[static_cast<size_t>(j) + 1],
                                                     aligned[static_cast<size_t>(j)]});
                    back[static_cast<size_t>(j)] =
                        g.add(fusion_branch(g, cat, "fuse.back"), back[static_cast<size_t>(j) + 1]);
                }
                for (int j = 0; j < m; ++j) {
                    ++trace.fuse_calls;
                    ValueId cat = g.concat_channels({states.back(), aligned[static_cast<size_t>(j)],
                                                     back[static_cast<size_t>(j)]});
                    states.push_back(g.add(fusion_branch(g, cat, "fuse"), states.back()));
                }
                break;
            }
            case FusionVariant::kSum: {
                // Mean (not raw sum) keeps magnitudes independent of N.
                std::vector<ValueId> feats{f_base};
                for (int i = 2; i <= n; ++i) {
                    feats.push_back(aligned[static_cast<size_t>(i) - 2]);
                    ++trace.fuse_calls;
                    ValueId m = g.mean_stack(feats);
                    states.push_back(g.add(fusion_branch(g, m, "fuse"), f_base));
                }
                break;
            }
            case FusionVariant::kConcat: {
                if (n != cfg_.fixed_burst_length)
                    throw FixedLengthError("concat fusion built for burst length " +
                                           std::to_string(cfg_.fixed_burst_length) + ", got " +
                                           std::to_string(n));
                for (int i = 2; i < n; ++i) states.push_back(-1);
                std::vector<ValueId> feats{f_base};
                feats.insert(feats.end(), aligned.begin(), aligned.end());
                ++trace.fuse_calls;
                ValueId cat = g.concat_channels(feats);
                states.push_back(g.add(fusion_branch(g, cat, "fuse"), f_base));
                break;
            }
        }
        return states;
    }

    // (C, h, w) -> (3, 2s*h, 2s*w): residual blocks, log2(2s) pixel-shuffle
    // stages each with a bilinear skip, and a final conv to RGB. Output is
    // unbounded; clip only for metrics/export.
    ValueId upsample(Graph<T>& g, ValueId h) {
        ++trace.upsample_calls;
        ValueId x = res_blocks(g, h, "ups", cfg_.upsampler_blocks);
        int stages = 0;
        for (int f = 2 * cfg_.scale; f > 1; f /= 2) ++stages;
        for (int sidx = 0; sidx < stages; ++sidx) {
            const Tensor<T>& t = g.value(x);
            const int th = t.dim(1), tw = t.dim(2);
            ValueId y = conv(g, x, "ups.stage" + std::to_string(sidx) + ".conv");
            y = g.leaky_relu(g.pixel_shuffle(y, 2), T(0.1));
            x = g.add(y, g.resize_bilinear(x, 2 * th, 2 * tw));
        }
        return conv(g, x, "ups.final");
    }

    // ---- full pipeline ----

    // One encoder/flow/alignment/fusion pass over a burst; SR outputs at any
    // recurrence index are built on demand and cached, sharing the pass.
    struct ForwardPass {
        Graph<T>* g = nullptr;
        BurstSrNet* net = nullptr;
        int n = 0;
        ValueId f_base = -1;
        std::vector<ValueId> states;  // h_1..h_N (concat: only the last valid)
        std::map<int, ValueId> sr_cache;

        // SR image after merging the first i frames (1-based); i = n is the
        // full-burst output.
        ValueId sr(int i) {
            if (i < 1 || i > n) throw InvalidInput("sr index out of range [1, N]");
            auto it = sr_cache.find(i);
            if (it != sr_cache.end()) return it->second;
            ValueId h = states[static_cast<size_t>(i) - 1];
            if (h < 0)
                throw FixedLengthError("intermediate states unavailable for concat fusion");
            if (i < n) ++net->trace.intermediate_upsample_calls;
            ValueId out = net->upsample(*g, h);
            sr_cache.emplace(i, out);
            return out;
        }
    };

    ForwardPass begin_forward(Graph<T>& g, const std::vector<Tensor<T>>& burst,
                              const std::vector<Tensor<T>>* oracle_flows = nullptr) {
        if (burst.empty()) throw InvalidInput("forward: empty burst");
        const int n = static_cast<int>(burst.size());
        for (const auto& f : burst) {
            if (f.rank() != 3 || f.dim(0) != 4)
                throw InvalidShape("forward: packed (4,h,w) frames expected");
            if (!f.same_shape(burst.front()))
                throw InvalidShape("forward: ragged frame dimensions");
        }
        if (cfg_.flow_source == FlowSource::kOracle && n > 1) {
            if (!oracle_flows || static_cast<int>(oracle_flows->size()) != n - 1)
                throw InvalidInput("forward: oracle flow source needs N-1 flow fields");
        }
        const int h = burst.front().dim(1), w = burst.front().dim(2);

        ForwardPass fp;
        fp.g = &g;
        fp.net = this;
        fp.n = n;

        std::vector<ValueId> frame_ids;
        frame_ids.reserve(static_cast<size_t>(n));
        for (const auto& f : burst) frame_ids.push_back(g.input(f));

        fp.f_base = encode(g, frame_ids[0]);
        std::vector<ValueId> aligned;
        aligned.reserve(static_cast<size_t>(n) - 1);
        for (int i = 1; i < n; ++i) {
            ValueId fi = encode(g, frame_ids[static_cast<size_t>(i)]);
            ValueId flow = -1;
            if (cfg_.align_variant != AlignVariant::kIdentity) {
                if (cfg_.align_variant == AlignVariant::kDeformableOnly) {
                    flow = g.input(Tensor<T>::zeros({2, h, w}));
                } else {
                    switch (cfg_.flow_source) {
                        case FlowSource::kLearned:
                            flow = estimate_flow(g, frame_ids[0], frame_ids[static_cast<size_t>(i)]);
                            break;
                        case FlowSource::kZero:
                            flow = g.input(Tensor<T>::zeros({2, h, w}));
                            break;
                        case FlowSource::kOracle: {
                            const Tensor<T>& of = (*oracle_flows)[static_cast<size_t>(i) - 1];
                            require_shape(of, {2, h, w}, "oracle flow");
                            flow = g.input(of);
                            break;
                        }
                    }
                }
            }
            aligned.push_back(align(g, fp.f_base, fi, flow));
        }
        fp.states = recurrent_fuse(g, fp.f_base, aligned);
        return fp;
    }

    Tensor<T> forward(const std::vector<Tensor<T>>& burst,
                      const std::vector<Tensor<T>>* oracle_flows = nullptr) {
        Graph<T> g;
        ForwardPass fp = begin_forward(g, burst, oracle_flows);
        return g.value(fp.sr(fp.n));
    }

    Tensor<T> forward_intermediate(const std::vector<Tensor<T>>& burst, int i,
                                   const std::vector<Tensor<T>>* oracle_flows = nullptr) {
        Graph<T> g;
        ForwardPass fp = begin_forward(g, burst, oracle_flows);
        return g.value(fp.sr(i));
    }

    // ---- shared building blocks ----

    ValueId conv(Graph<T>& g, ValueId x, const std::string& name) {
        nn::Param<T>& w = params_[name + ".w"];
        nn::Param<T>& b = params_[name + ".b"];
        return g.conv2d(x, g.param(w.value, w.grad), g.param(b.value, b.grad));
    }

private:
    ValueId res_blocks(Graph<T>& g, ValueId x, const std::string& prefix, int count) {
        for (int i = 0; i < count; ++i) {
            const std::string b = prefix + ".block" + std::to_string(i);
            ValueId y = g.relu(conv(g, x, b + ".conv1"));
            x = g.add(conv(g, y, b + ".conv2"), x);
        }
        return x;
    }

    ValueId fusion_branch(Graph<T>& g, ValueId cat, const std::string& prefix) {
        ValueId x = g.leaky_relu(conv(g, cat, prefix + ".reduce"), T(0.1));
        x = res_blocks(g, x, prefix, cfg_.fusion_blocks);
        return conv(g, x, prefix + ".final");
    }

    ModelConfig cfg_;
    nn::ParamSet<T> params_;
};

}  // namespace bsr::model
