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

#include <Eigen/Core>

#include <cmath>
#include <cstring>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bsr/errors.hpp"
#include "bsr/tensor.hpp"

namespace bsr::nn {

using ValueId = int;

// Reverse-mode tape over dense tensors. Every op computes its value eagerly
// and records a closure that scatters output gradients back to its inputs.
// Single-threaded; evaluation order is the recording order, so results are
// bit-reproducible run to run.
//
// Values live in the graph. Parameters are bound by reference so their
// gradients accumulate in external storage across multiple graphs (one graph
// per sample, summed over a batch).
template <class T>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    ValueId input(Tensor<T> t, bool requires_grad = false) {
        return push(std::move(t), requires_grad, nullptr, nullptr, {});
    }

    // Leaf bound to external value/grad storage (a model parameter). The grad
    // tensor must already have the value's shape; contributions accumulate.
    ValueId param(Tensor<T>& value, Tensor<T>& grad) {
        auto it = param_cache_.find(&value);
        if (it != param_cache_.end()) return it->second;
        ValueId id = push(Tensor<T>{}, true, &value, &grad, {});
        param_cache_.emplace(&value, id);
        return id;
    }

    const Tensor<T>& value(ValueId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        return n.ext_value ? *n.ext_value : n.value;
    }

    // Gradient of a node after backward(); empty tensor if nothing flowed.
    const Tensor<T>& gradient(ValueId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        if (n.ext_grad) return *n.ext_grad;
        return n.grad;
    }

    size_t size() const { return nodes_.size(); }

    // ---- elementwise ----

    ValueId add(ValueId a, ValueId b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        require_same_shape(ta, tb, "add");
        Tensor<T> out(ta.dims);
        for (int64_t i = 0; i < ta.numel(); ++i) out.v[i] = ta.v[i] + tb.v[i];
        return push(std::move(out), needs(a) || needs(b),
                    [a, b](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        g.accumulate(a, gy);
                        g.accumulate(b, gy);
                    });
    }

    ValueId sub(ValueId a, ValueId b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        require_same_shape(ta, tb, "sub");
        Tensor<T> out(ta.dims);
        for (int64_t i = 0; i < ta.numel(); ++i) out.v[i] = ta.v[i] - tb.v[i];
        return push(std::move(out), needs(a) || needs(b),
                    [a, b](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        g.accumulate(a, gy);
                        if (g.needs(b)) {
                            Tensor<T>& gb = g.ensure_grad(b);
                            for (int64_t i = 0; i < gy.numel(); ++i) gb.v[i] -= gy.v[i];
                        }
                    });
    }

    ValueId mul(ValueId a, ValueId b) {
        const Tensor<T>& ta = value(a);
        const Tensor<T>& tb = value(b);
        require_same_shape(ta, tb, "mul");
        Tensor<T> out(ta.dims);
        for (int64_t i = 0; i < ta.numel(); ++i) out.v[i] = ta.v[i] * tb.v[i];
        return push(std::move(out), needs(a) || needs(b),
                    [a, b](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& ta = g.value(a);
                        const Tensor<T>& tb = g.value(b);
                        if (g.needs(a)) {
                            Tensor<T>& ga = g.ensure_grad(a);
                            for (int64_t i = 0; i < gy.numel(); ++i) ga.v[i] += gy.v[i] * tb.v[i];
                        }
                        if (g.needs(b)) {
                            Tensor<T>& gb = g.ensure_grad(b);
                            for (int64_t i = 0; i < gy.numel(); ++i) gb.v[i] += gy.v[i] * ta.v[i];
                        }
                    });
    }

    ValueId scale(ValueId x, T s) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.dims);
        for (int64_t i = 0; i < tx.numel(); ++i) out.v[i] = tx.v[i] * s;
        return push(std::move(out), needs(x),
                    [x, s](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        if (!g.needs(x)) return;
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gy.numel(); ++i) gx.v[i] += gy.v[i] * s;
                    });
    }

    ValueId relu(ValueId x) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.dims);
        for (int64_t i = 0; i < tx.numel(); ++i) out.v[i] = tx.v[i] > T(0) ? tx.v[i] : T(0);
        return push(std::move(out), needs(x),
                    [x](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gy.numel(); ++i)
                            if (tx.v[i] > T(0)) gx.v[i] += gy.v[i];
                    });
    }

    ValueId leaky_relu(ValueId x, T slope) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.dims);
        for (int64_t i = 0; i < tx.numel(); ++i)
            out.v[i] = tx.v[i] > T(0) ? tx.v[i] : slope * tx.v[i];
        return push(std::move(out), needs(x),
                    [x, slope](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gy.numel(); ++i)
                            gx.v[i] += tx.v[i] > T(0) ? gy.v[i] : slope * gy.v[i];
                    });
    }

    ValueId sigmoid(ValueId x) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.dims);
        for (int64_t i = 0; i < tx.numel(); ++i)
            out.v[i] = T(1) / (T(1) + std::exp(-tx.v[i]));
        return push(std::move(out), needs(x),
                    [x](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& ty = g.value(self);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gy.numel(); ++i)
                            gx.v[i] += gy.v[i] * ty.v[i] * (T(1) - ty.v[i]);
                    });
    }

    ValueId abs_val(ValueId x) {
        const Tensor<T>& tx = value(x);
        Tensor<T> out(tx.dims);
        for (int64_t i = 0; i < tx.numel(); ++i) out.v[i] = std::abs(tx.v[i]);
        return push(std::move(out), needs(x),
                    [x](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gy.numel(); ++i) {
                            if (tx.v[i] > T(0)) gx.v[i] += gy.v[i];
                            else if (tx.v[i] < T(0)) gx.v[i] -= gy.v[i];
                        }
                    });
    }

    // ---- reductions ----

    ValueId mean_all(ValueId x) {
        const Tensor<T>& tx = value(x);
        if (tx.numel() == 0) throw InvalidInput("mean_all: empty tensor");
        Wide acc = 0;
        for (int64_t i = 0; i < tx.numel(); ++i) acc += static_cast<Wide>(tx.v[i]);
        Tensor<T> out({1});
        out.v[0] = static_cast<T>(acc / static_cast<Wide>(tx.numel()));
        const T inv_n = T(1) / static_cast<T>(tx.numel());
        return push(std::move(out), needs(x),
                    [x, inv_n](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const T gy = g.node_grad(self).v[0] * inv_n;
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int64_t i = 0; i < gx.numel(); ++i) gx.v[i] += gy;
                    });
    }

    // Elementwise mean over a stack of same-shape tensors. Accumulates in a
    // wider type so the result is invariant to the stacking order in practice.
    ValueId mean_stack(const std::vector<ValueId>& xs) {
        if (xs.empty()) throw InvalidInput("mean_stack: no inputs");
        const Tensor<T>& t0 = value(xs[0]);
        for (ValueId x : xs) require_same_shape(value(x), t0, "mean_stack");
        Tensor<T> out(t0.dims);
        const Wide inv_n = Wide(1) / static_cast<Wide>(xs.size());
        for (int64_t i = 0; i < t0.numel(); ++i) {
            Wide acc = 0;
            for (ValueId x : xs) acc += static_cast<Wide>(value(x).v[i]);
            out.v[i] = static_cast<T>(acc * inv_n);
        }
        bool any = false;
        for (ValueId x : xs) any = any || needs(x);
        const T inv = T(1) / static_cast<T>(xs.size());
        return push(std::move(out), any,
                    [xs, inv](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        for (ValueId x : xs) {
                            if (!g.needs(x)) continue;
                            Tensor<T>& gx = g.ensure_grad(x);
                            for (int64_t i = 0; i < gy.numel(); ++i) gx.v[i] += gy.v[i] * inv;
                        }
                    });
    }

    // ---- shape ops ----

    ValueId concat_channels(const std::vector<ValueId>& xs) {
        if (xs.empty()) throw InvalidInput("concat_channels: no inputs");
        const Tensor<T>& t0 = value(xs[0]);
        if (t0.rank() != 3) throw InvalidShape("concat_channels: rank-3 tensors expected");
        const int h = t0.dim(1), w = t0.dim(2);
        int c_total = 0;
        for (ValueId x : xs) {
            const Tensor<T>& t = value(x);
            if (t.rank() != 3 || t.dim(1) != h || t.dim(2) != w)
                throw InvalidShape("concat_channels: spatial dims mismatch");
            c_total += t.dim(0);
        }
        Tensor<T> out({c_total, h, w});
        size_t off = 0;
        for (ValueId x : xs) {
            const Tensor<T>& t = value(x);
            std::memcpy(out.data() + off, t.data(), sizeof(T) * static_cast<size_t>(t.numel()));
            off += static_cast<size_t>(t.numel());
        }
        bool any = false;
        for (ValueId x : xs) any = any || needs(x);
        return push(std::move(out), any,
                    [xs](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        size_t off = 0;
                        for (ValueId x : xs) {
                            const int64_t n = g.value(x).numel();
                            if (g.needs(x)) {
                                Tensor<T>& gx = g.ensure_grad(x);
                                for (int64_t i = 0; i < n; ++i) gx.v[i] += gy.v[off + i];
                            }
                            off += static_cast<size_t>(n);
                        }
                    });
    }

    ValueId slice_channels(ValueId x, int c0, int c1) {
        const Tensor<T>& tx = value(x);
        if (tx.rank() != 3) throw InvalidShape("slice_channels: rank-3 tensor expected");
        if (c0 < 0 || c1 > tx.dim(0) || c0 >= c1)
            throw InvalidShape("slice_channels: bad channel range");
        const int h = tx.dim(1), w = tx.dim(2);
        const size_t plane = static_cast<size_t>(h) * w;
        Tensor<T> out({c1 - c0, h, w});
        std::memcpy(out.data(), tx.data() + static_cast<size_t>(c0) * plane,
                    sizeof(T) * static_cast<size_t>(out.numel()));
        return push(std::move(out), needs(x),
                    [x, c0, plane](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        Tensor<T>& gx = g.ensure_grad(x);
                        T* dst = gx.data() + static_cast<size_t>(c0) * plane;
                        for (int64_t i = 0; i < gy.numel(); ++i) dst[i] += gy.v[i];
                    });
    }

    // (C*r*r, h, w) -> (C, r*h, r*w); channel c*r*r + dy*r + dx lands at
    // spatial offset (dy, dx) inside each r x r block.
    ValueId pixel_shuffle(ValueId x, int r) {
        const Tensor<T>& tx = value(x);
        if (tx.rank() != 3) throw InvalidShape("pixel_shuffle: rank-3 tensor expected");
        if (r < 1 || tx.dim(0) % (r * r) != 0)
            throw InvalidShape("pixel_shuffle: channels not divisible by r^2");
        const int c_out = tx.dim(0) / (r * r), h = tx.dim(1), w = tx.dim(2);
        Tensor<T> out({c_out, h * r, w * r});
        for (int c = 0; c < c_out; ++c)
            for (int dy = 0; dy < r; ++dy)
                for (int dx = 0; dx < r; ++dx) {
                    const int ci = (c * r + dy) * r + dx;
                    for (int y = 0; y < h; ++y) {
                        const T* src = tx.data() + (static_cast<size_t>(ci) * h + y) * w;
                        T* dst = out.data() +
                                 (static_cast<size_t>(c) * h * r + y * r + dy) * (w * r) + dx;
                        for (int xx = 0; xx < w; ++xx) dst[static_cast<size_t>(xx) * r] = src[xx];
                    }
                }
        return push(std::move(out), needs(x),
                    [x, r, c_out, h, w](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int c = 0; c < c_out; ++c)
                            for (int dy = 0; dy < r; ++dy)
                                for (int dx = 0; dx < r; ++dx) {
                                    const int ci = (c * r + dy) * r + dx;
                                    for (int y = 0; y < h; ++y) {
                                        T* dst = gx.data() + (static_cast<size_t>(ci) * h + y) * w;
                                        const T* src = gy.data() +
                                                       (static_cast<size_t>(c) * h * r + y * r + dy) *
                                                           (w * r) +
                                                       dx;
                                        for (int xx = 0; xx < w; ++xx)
                                            dst[xx] += src[static_cast<size_t>(xx) * r];
                                    }
                                }
                    });
    }

    // 2x2 average pooling, stride 2; trailing odd row/col dropped.
    ValueId avg_pool2(ValueId x) {
        const Tensor<T>& tx = value(x);
        if (tx.rank() != 3) throw InvalidShape("avg_pool2: rank-3 tensor expected");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        const int ho = h / 2, wo = w / 2;
        if (ho < 1 || wo < 1) throw InvalidShape("avg_pool2: input too small");
        Tensor<T> out({c, ho, wo});
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < ho; ++y)
                for (int xx = 0; xx < wo; ++xx)
                    out.at(ci, y, xx) = T(0.25) * (tx.at(ci, 2 * y, 2 * xx) +
                                                   tx.at(ci, 2 * y, 2 * xx + 1) +
                                                   tx.at(ci, 2 * y + 1, 2 * xx) +
                                                   tx.at(ci, 2 * y + 1, 2 * xx + 1));
        return push(std::move(out), needs(x),
                    [x, c, ho, wo](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int ci = 0; ci < c; ++ci)
                            for (int y = 0; y < ho; ++y)
                                for (int xx = 0; xx < wo; ++xx) {
                                    const T v = T(0.25) * gy.at(ci, y, xx);
                                    gx.at(ci, 2 * y, 2 * xx) += v;
                                    gx.at(ci, 2 * y, 2 * xx + 1) += v;
                                    gx.at(ci, 2 * y + 1, 2 * xx) += v;
                                    gx.at(ci, 2 * y + 1, 2 * xx + 1) += v;
                                }
                    });
    }

    // Bilinear resize with half-pixel centers, edge-clamped.
    ValueId resize_bilinear(ValueId x, int ho, int wo) {
        const Tensor<T>& tx = value(x);
        if (tx.rank() != 3) throw InvalidShape("resize_bilinear: rank-3 tensor expected");
        if (ho < 1 || wo < 1) throw InvalidShape("resize_bilinear: bad target size");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        Tensor<T> out({c, ho, wo});
        const double sy = static_cast<double>(h) / ho;
        const double sx = static_cast<double>(w) / wo;
        for (int y = 0; y < ho; ++y) {
            int y0, y1;
            T wy;
            src_coeffs((y + 0.5) * sy - 0.5, h, y0, y1, wy);
            for (int xx = 0; xx < wo; ++xx) {
                int x0, x1;
                T wx;
                src_coeffs((xx + 0.5) * sx - 0.5, w, x0, x1, wx);
                for (int ci = 0; ci < c; ++ci) {
                    const T top = (T(1) - wx) * tx.at(ci, y0, x0) + wx * tx.at(ci, y0, x1);
                    const T bot = (T(1) - wx) * tx.at(ci, y1, x0) + wx * tx.at(ci, y1, x1);
                    out.at(ci, y, xx) = (T(1) - wy) * top + wy * bot;
                }
            }
        }
        return push(std::move(out), needs(x),
                    [x, c, h, w, ho, wo, sy, sx](Graph& g, ValueId self) {
                        if (!g.needs(x)) return;
                        const Tensor<T>& gy = g.node_grad(self);
                        Tensor<T>& gx = g.ensure_grad(x);
                        for (int y = 0; y < ho; ++y) {
                            int y0, y1;
                            T wy;
                            src_coeffs((y + 0.5) * sy - 0.5, h, y0, y1, wy);
                            for (int xx = 0; xx < wo; ++xx) {
                                int x0, x1;
                                T wx;
                                src_coeffs((xx + 0.5) * sx - 0.5, w, x0, x1, wx);
                                for (int ci = 0; ci < c; ++ci) {
                                    const T v = gy.at(ci, y, xx);
                                    gx.at(ci, y0, x0) += (T(1) - wy) * (T(1) - wx) * v;
                                    gx.at(ci, y0, x1) += (T(1) - wy) * wx * v;
                                    gx.at(ci, y1, x0) += wy * (T(1) - wx) * v;
                                    gx.at(ci, y1, x1) += wy * wx * v;
                                }
                            }
                        }
                    });
    }

    // Grouped flow warp: channels are split into `groups` contiguous groups;
    // group g samples at (x + flows[2g], y + flows[2g+1]) with bilinear
    // interpolation and edge clamping. Gradients flow to both the source
    // features and the flow field; the coordinate gradient is zero where the
    // sample position was clamped to the border.
    ValueId warp_grouped(ValueId x, ValueId flows, int groups) {
        const Tensor<T>& tx = value(x);
        const Tensor<T>& tf = value(flows);
        if (tx.rank() != 3 || tf.rank() != 3)
            throw InvalidShape("warp_grouped: rank-3 tensors expected");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        if (groups < 1 || c % groups != 0)
            throw InvalidShape("warp_grouped: channels not divisible by groups");
        if (tf.dim(0) != 2 * groups || tf.dim(1) != h || tf.dim(2) != w)
            throw InvalidShape("warp_grouped: flow must be (2*groups, h, w)");
        const int cpg = c / groups;
        Tensor<T> out({c, h, w});
        for (int g = 0; g < groups; ++g) {
            for (int y = 0; y < h; ++y)
                for (int xx = 0; xx < w; ++xx) {
                    Sample s = sample_coeffs(xx + tf.at(2 * g, y, xx), y + tf.at(2 * g + 1, y, xx),
                                             h, w);
                    for (int k = 0; k < cpg; ++k) {
                        const int ci = g * cpg + k;
                        out.at(ci, y, xx) = s.w00 * tx.at(ci, s.y0, s.x0) +
                                            s.w01 * tx.at(ci, s.y0, s.x1) +
                                            s.w10 * tx.at(ci, s.y1, s.x0) +
                                            s.w11 * tx.at(ci, s.y1, s.x1);
                    }
                }
        }
        return push(std::move(out), needs(x) || needs(flows),
                    [x, flows, groups, cpg, h, w](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        const Tensor<T>& tf = g.value(flows);
                        Tensor<T>* gx = g.needs(x) ? &g.ensure_grad(x) : nullptr;
                        Tensor<T>* gf = g.needs(flows) ? &g.ensure_grad(flows) : nullptr;
                        for (int gi = 0; gi < groups; ++gi)
                            for (int y = 0; y < h; ++y)
                                for (int xx = 0; xx < w; ++xx) {
                                    Sample s = sample_coeffs(xx + tf.at(2 * gi, y, xx),
                                                             y + tf.at(2 * gi + 1, y, xx), h, w);
                                    T dsx = 0, dsy = 0;
                                    for (int k = 0; k < cpg; ++k) {
                                        const int ci = gi * cpg + k;
                                        const T v = gy.at(ci, y, xx);
                                        if (gx) {
                                            gx->at(ci, s.y0, s.x0) += s.w00 * v;
                                            gx->at(ci, s.y0, s.x1) += s.w01 * v;
                                            gx->at(ci, s.y1, s.x0) += s.w10 * v;
                                            gx->at(ci, s.y1, s.x1) += s.w11 * v;
                                        }
                                        if (gf) {
                                            const T v00 = tx.at(ci, s.y0, s.x0);
                                            const T v01 = tx.at(ci, s.y0, s.x1);
                                            const T v10 = tx.at(ci, s.y1, s.x0);
                                            const T v11 = tx.at(ci, s.y1, s.x1);
                                            dsx += v * ((T(1) - s.fy) * (v01 - v00) +
                                                        s.fy * (v11 - v10));
                                            dsy += v * ((T(1) - s.fx) * (v10 - v00) +
                                                        s.fx * (v11 - v01));
                                        }
                                    }
                                    if (gf) {
                                        if (!s.clamped_x) gf->at(2 * gi, y, xx) += dsx;
                                        if (!s.clamped_y) gf->at(2 * gi + 1, y, xx) += dsy;
                                    }
                                }
                    });
    }

    // Per-group channel scaling: out[c] = x[c] * m[group(c)].
    ValueId group_scale(ValueId x, ValueId m, int groups) {
        const Tensor<T>& tx = value(x);
        const Tensor<T>& tm = value(m);
        if (tx.rank() != 3 || tm.rank() != 3)
            throw InvalidShape("group_scale: rank-3 tensors expected");
        const int c = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        if (groups < 1 || c % groups != 0 || tm.dim(0) != groups || tm.dim(1) != h ||
            tm.dim(2) != w)
            throw InvalidShape("group_scale: mask must be (groups, h, w)");
        const int cpg = c / groups;
        const size_t plane = static_cast<size_t>(h) * w;
        Tensor<T> out({c, h, w});
        for (int ci = 0; ci < c; ++ci) {
            const T* mk = tm.data() + static_cast<size_t>(ci / cpg) * plane;
            const T* src = tx.data() + static_cast<size_t>(ci) * plane;
            T* dst = out.data() + static_cast<size_t>(ci) * plane;
            for (size_t i = 0; i < plane; ++i) dst[i] = src[i] * mk[i];
        }
        return push(std::move(out), needs(x) || needs(m),
                    [x, m, cpg, plane](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        const Tensor<T>& tm = g.value(m);
                        const int c = tx.dim(0);
                        if (g.needs(x)) {
                            Tensor<T>& gx = g.ensure_grad(x);
                            for (int ci = 0; ci < c; ++ci) {
                                const T* mk = tm.data() + static_cast<size_t>(ci / cpg) * plane;
                                const T* gyp = gy.data() + static_cast<size_t>(ci) * plane;
                                T* dst = gx.data() + static_cast<size_t>(ci) * plane;
                                for (size_t i = 0; i < plane; ++i) dst[i] += gyp[i] * mk[i];
                            }
                        }
                        if (g.needs(m)) {
                            Tensor<T>& gm = g.ensure_grad(m);
                            for (int ci = 0; ci < c; ++ci) {
                                const T* xp = tx.data() + static_cast<size_t>(ci) * plane;
                                const T* gyp = gy.data() + static_cast<size_t>(ci) * plane;
                                T* dst = gm.data() + static_cast<size_t>(ci / cpg) * plane;
                                for (size_t i = 0; i < plane; ++i) dst[i] += gyp[i] * xp[i];
                            }
                        }
                    });
    }

    // ---- convolution ----

    // Stride-1 "same" convolution with odd square kernels; zero padding.
    // x: (Cin, H, W), w: (Cout, Cin, k, k), b: (Cout).
    ValueId conv2d(ValueId x, ValueId wgt, ValueId bias) {
        const Tensor<T>& tx = value(x);
        const Tensor<T>& tw = value(wgt);
        const Tensor<T>& tb = value(bias);
        if (tx.rank() != 3 || tw.rank() != 4 || tb.rank() != 1)
            throw InvalidShape("conv2d: bad tensor ranks");
        const int cin = tx.dim(0), h = tx.dim(1), w = tx.dim(2);
        const int cout = tw.dim(0), k = tw.dim(2);
        if (tw.dim(1) != cin || tw.dim(3) != k || k % 2 == 0 || tb.dim(0) != cout)
            throw InvalidShape("conv2d: weight/bias shapes inconsistent with input");
        Tensor<T> out({cout, h, w});
        const int64_t n = static_cast<int64_t>(h) * w;
        const int kk = cin * k * k;
        im2col(tx.data(), cin, h, w, k, scratch_col_);
        {
            CMap col(scratch_col_.data(), kk, n);
            CMap wm(tw.data(), cout, kk);
            MMap y(out.data(), cout, n);
            y.noalias() = wm * col;
            for (int c = 0; c < cout; ++c) y.row(c).array() += tb.v[static_cast<size_t>(c)];
        }
        return push(std::move(out), needs(x) || needs(wgt) || needs(bias),
                    [x, wgt, bias, cin, h, w, k, cout](Graph& g, ValueId self) {
                        const Tensor<T>& gy = g.node_grad(self);
                        const Tensor<T>& tx = g.value(x);
                        const Tensor<T>& tw = g.value(wgt);
                        const int64_t n = static_cast<int64_t>(h) * w;
                        const int kk = cin * k * k;
                        CMap gym(gy.data(), cout, n);
                        if (g.needs(bias)) {
                            Tensor<T>& gb = g.ensure_grad(bias);
                            for (int c = 0; c < cout; ++c)
                                gb.v[static_cast<size_t>(c)] += gym.row(c).sum();
                        }
                        if (g.needs(wgt)) {
                            im2col(tx.data(), cin, h, w, k, g.scratch_col_);
                            CMap col(g.scratch_col_.data(), kk, n);
                            Tensor<T>& gw = g.ensure_grad(wgt);
                            MMap gwm(gw.data(), cout, kk);
                            gwm.noalias() += gym * col.transpose();
                        }
                        if (g.needs(x)) {
                            g.scratch_dcol_.resize(static_cast<size_t>(kk) * n);
                            MMap dcol(g.scratch_dcol_.data(), kk, n);
                            CMap wm(tw.data(), cout, kk);
                            dcol.noalias() = wm.transpose() * gym;
                            Tensor<T>& gx = g.ensure_grad(x);
                            col2im_add(g.scratch_dcol_.data(), cin, h, w, k, gx.data());
                        }
                    });
    }

    // ---- backward driver ----

    void backward(ValueId root) {
        Node& rn = nodes_[static_cast<size_t>(root)];
        const Tensor<T>& rv = rn.ext_value ? *rn.ext_value : rn.value;
        if (rv.numel() != 1) throw InvalidInput("backward: root must be scalar");
        ensure_grad(root).v[0] = T(1);
        for (int id = root; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (!n.backward || !n.requires_grad) continue;
            const Tensor<T>& gsrc = n.ext_grad ? *n.ext_grad : n.grad;
            if (gsrc.empty()) continue;  // nothing flowed here
            n.backward(*this, id);
        }
    }

    bool needs(ValueId id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

private:
    using Wide = std::conditional_t<std::is_same_v<T, float>, double, long double>;
    using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using MMap = Eigen::Map<RowMat>;
    using CMap = Eigen::Map<const RowMat>;

    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        Tensor<T>* ext_value = nullptr;
        Tensor<T>* ext_grad = nullptr;
        std::function<void(Graph&, ValueId)> backward;
    };

    struct Sample {
        int x0, x1, y0, y1;
        T fx, fy;
        T w00, w01, w10, w11;
        bool clamped_x, clamped_y;
    };

    static Sample sample_coeffs(T sx, T sy, int h, int w) {
        Sample s;
        T cx = sx, cy = sy;
        s.clamped_x = false;
        s.clamped_y = false;
        if (cx < T(0)) { cx = T(0); s.clamped_x = true; }
        if (cx > T(w - 1)) { cx = T(w - 1); s.clamped_x = true; }
        if (cy < T(0)) { cy = T(0); s.clamped_y = true; }
        if (cy > T(h - 1)) { cy = T(h - 1); s.clamped_y = true; }
        s.x0 = static_cast<int>(std::floor(cx));
        s.y0 = static_cast<int>(std::floor(cy));
        if (s.x0 > w - 1) s.x0 = w - 1;
        if (s.y0 > h - 1) s.y0 = h - 1;
        s.x1 = s.x0 + 1 < w ? s.x0 + 1 : w - 1;
        s.y1 = s.y0 + 1 < h ? s.y0 + 1 : h - 1;
        s.fx = cx - static_cast<T>(s.x0);
        s.fy = cy - static_cast<T>(s.y0);
        s.w00 = (T(1) - s.fy) * (T(1) - s.fx);
        s.w01 = (T(1) - s.fy) * s.fx;
        s.w10 = s.fy * (T(1) - s.fx);
        s.w11 = s.fy * s.fx;
        return s;
    }

    static void src_coeffs(double pos, int extent, int& i0, int& i1, T& frac) {
        if (pos < 0.0) pos = 0.0;
        if (pos > extent - 1) pos = extent - 1;
        i0 = static_cast<int>(std::floor(pos));
        if (i0 > extent - 1) i0 = extent - 1;
        i1 = i0 + 1 < extent ? i0 + 1 : extent - 1;
        frac = static_cast<T>(pos - i0);
    }

    static void im2col(const T* x, int cin, int h, int w, int k, std::vector<T>& col) {
        const int pad = k / 2;
        const int64_t n = static_cast<int64_t>(h) * w;
        col.resize(static_cast<size_t>(cin) * k * k * n);
        for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    T* dst = col.data() + ((static_cast<size_t>(c) * k + ky) * k + kx) * n;
                    const int x0 = pad - kx > 0 ? pad - kx : 0;
                    const int x1 = w - kx + pad < w ? w - kx + pad : w;
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - pad;
                        T* row = dst + static_cast<size_t>(y) * w;
                        if (sy < 0 || sy >= h) {
                            std::memset(row, 0, sizeof(T) * static_cast<size_t>(w));
                            continue;
                        }
                        const T* src = x + (static_cast<size_t>(c) * h + sy) * w;
                        if (x0 > 0) std::memset(row, 0, sizeof(T) * static_cast<size_t>(x0));
                        if (x1 > x0)
                            std::memcpy(row + x0, src + x0 + kx - pad,
                                        sizeof(T) * static_cast<size_t>(x1 - x0));
                        if (x1 < w)
                            std::memset(row + x1, 0, sizeof(T) * static_cast<size_t>(w - x1));
                    }
                }
    }

    static void col2im_add(const T* col, int cin, int h, int w, int k, T* dx) {
        const int pad = k / 2;
        const int64_t n = static_cast<int64_t>(h) * w;
        for (int c = 0; c < cin; ++c)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const T* src = col + ((static_cast<size_t>(c) * k + ky) * k + kx) * n;
                    const int x0 = pad - kx > 0 ? pad - kx : 0;
                    const int x1 = w - kx + pad < w ? w - kx + pad : w;
                    for (int y = 0; y < h; ++y) {
                        const int sy = y + ky - pad;
                        if (sy < 0 || sy >= h) continue;
                        const T* row = src + static_cast<size_t>(y) * w;
                        T* dst = dx + (static_cast<size_t>(c) * h + sy) * w + kx - pad;
                        for (int xx = x0; xx < x1; ++xx) dst[xx] += row[xx];
                    }
                }
    }

    template <class Fn>
    ValueId push(Tensor<T> val, bool requires_grad, Fn&& back) {
        return push(std::move(val), requires_grad, nullptr, nullptr,
                    std::function<void(Graph&, ValueId)>(std::forward<Fn>(back)));
    }

    ValueId push(Tensor<T> val, bool requires_grad, Tensor<T>* ext_val, Tensor<T>* ext_grad,
                 std::function<void(Graph&, ValueId)> back) {
        Node n;
        n.value = std::move(val);
        n.requires_grad = requires_grad;
        n.ext_value = ext_val;
        n.ext_grad = ext_grad;
        n.backward = std::move(back);
        nodes_.push_back(std::move(n));
        return static_cast<ValueId>(nodes_.size()) - 1;
    }

    const Tensor<T>& node_grad(ValueId id) const {
        const Node& n = nodes_[static_cast<size_t>(id)];
        return n.ext_grad ? *n.ext_grad : n.grad;
    }

    Tensor<T>& ensure_grad(ValueId id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.ext_grad) return *n.ext_grad;
        if (n.grad.empty()) {
            const Tensor<T>& v = n.ext_value ? *n.ext_value : n.value;
            n.grad = Tensor<T>::zeros(v.dims);
        }
        return n.grad;
    }

    void accumulate(ValueId id, const Tensor<T>& contribution) {
        if (!needs(id)) return;
        Tensor<T>& g = ensure_grad(id);
        for (int64_t i = 0; i < contribution.numel(); ++i) g.v[i] += contribution.v[i];
    }

    std::vector<Node> nodes_;
    std::unordered_map<const void*, ValueId> param_cache_;
    std::vector<T> scratch_col_;
    std::vector<T> scratch_dcol_;
};

}  // namespace bsr::nn
