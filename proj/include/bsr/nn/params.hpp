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
#include <unordered_map>
#include <vector>

#include "bsr/errors.hpp"
#include "bsr/rng.hpp"
#include "bsr/tensor.hpp"

namespace bsr::nn {

struct ParamSpec {
    std::string name;
    std::vector<int> dims;
    // Zero-initialized heads stay exactly zero at init: the final conv of every
    // residual branch and the flow/offset/mask prediction heads.
    bool zero_init = false;
};

template <class T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> adam_m;  // allocated lazily by the optimizer
    Tensor<T> adam_v;
    bool zero_init = false;
};

template <class T>
class ParamSet {
public:
    ParamSet() = default;

    explicit ParamSet(const std::vector<ParamSpec>& specs) {
        for (const ParamSpec& s : specs) {
            Param<T> p;
            p.name = s.name;
            p.value = Tensor<T>::zeros(s.dims);
            p.grad = Tensor<T>::zeros(s.dims);
            p.zero_init = s.zero_init;
            index_.emplace(s.name, static_cast<int>(items_.size()));
            items_.push_back(std::move(p));
        }
    }

    int size() const { return static_cast<int>(items_.size()); }
    Param<T>& at(int i) { return items_[static_cast<size_t>(i)]; }
    const Param<T>& at(int i) const { return items_[static_cast<size_t>(i)]; }

    Param<T>& operator[](const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return items_[static_cast<size_t>(it->second)];
    }
    const Param<T>& operator[](const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
        return items_[static_cast<size_t>(it->second)];
    }
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    int64_t total_count() const {
        int64_t n = 0;
        for (const auto& p : items_) n += p.value.numel();
        return n;
    }

    // He-style init for conv weights (fan-in = Cin*k*k), zeros for biases and
    // the designated zero-init tensors. Draw order follows parameter order, so
    // a seed pins every weight.
    void init(uint64_t seed) {
        Rng rng(seed);
        for (auto& p : items_) {
            if (p.zero_init || p.value.rank() == 1) {
                p.value.fill(T(0));
                continue;
            }
            int64_t fan_in = 1;
            for (int d = 1; d < p.value.rank(); ++d) fan_in *= p.value.dim(d);
            const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (auto& x : p.value.v) x = static_cast<T>(rng.normal(0.0, stddev));
        }
    }

    // Test helper: fills every tensor (including zero-init heads) with random
    // values so derivatives are informative everywhere.
    void randomize_all(Rng& rng, double stddev = 0.3) {
        for (auto& p : items_)
            for (auto& x : p.value.v) x = static_cast<T>(rng.normal(0.0, stddev));
    }

    void zero_grads() {
        for (auto& p : items_) p.grad.fill(T(0));
    }

    template <class U>
    ParamSet<U> cast() const {
        ParamSet<U> out;
        for (const auto& p : items_) {
            Param<U> q;
            q.name = p.name;
            q.value = p.value.template cast<U>();
            q.grad = Tensor<U>::zeros(p.value.dims);
            q.zero_init = p.zero_init;
            out.index_.emplace(q.name, static_cast<int>(out.items_.size()));
            out.items_.push_back(std::move(q));
        }
        return out;
    }

    template <class U>
    friend class ParamSet;

private:
    std::vector<Param<T>> items_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace bsr::nn
