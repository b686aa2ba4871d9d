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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "bsr/errors.hpp"

namespace bsr {

// Dense row-major tensor. Images are stored planar CHW; conv weights are
// (out, in, kh, kw). Kept deliberately small: shape + flat storage.
template <class T>
struct Tensor {
    std::vector<int> dims;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> d) : dims(std::move(d)), v(checked_numel(dims)) {}
    Tensor(std::vector<int> d, T fill) : dims(std::move(d)), v(checked_numel(dims), fill) {}

    static Tensor zeros(std::vector<int> d) { return Tensor(std::move(d)); }
    static Tensor full(std::vector<int> d, T value) { return Tensor(std::move(d), value); }

    int rank() const { return static_cast<int>(dims.size()); }
    int dim(int i) const { return dims[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    bool empty() const { return v.empty(); }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const { return dims == o.dims; }

    T& at(int a) { return v[static_cast<size_t>(a)]; }
    T at(int a) const { return v[static_cast<size_t>(a)]; }
    T& at(int a, int b) { return v[static_cast<size_t>(a) * dims[1] + b]; }
    T at(int a, int b) const { return v[static_cast<size_t>(a) * dims[1] + b]; }
    T& at(int a, int b, int c) {
        return v[(static_cast<size_t>(a) * dims[1] + b) * dims[2] + c];
    }
    T at(int a, int b, int c) const {
        return v[(static_cast<size_t>(a) * dims[1] + b) * dims[2] + c];
    }
    T& at(int a, int b, int c, int d) {
        return v[((static_cast<size_t>(a) * dims[1] + b) * dims[2] + c) * dims[3] + d];
    }
    T at(int a, int b, int c, int d) const {
        return v[((static_cast<size_t>(a) * dims[1] + b) * dims[2] + c) * dims[3] + d];
    }

    void fill(T value) { std::fill(v.begin(), v.end(), value); }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.dims = dims;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    bool all_finite() const {
        for (const T x : v) {
            if (!std::isfinite(static_cast<double>(x))) return false;
        }
        return true;
    }

    static std::string shape_str(const std::vector<int>& d) {
        std::string s = "(";
        for (size_t i = 0; i < d.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(d[i]);
        }
        return s + ")";
    }
    std::string shape_str() const { return shape_str(dims); }

private:
    static size_t checked_numel(const std::vector<int>& d) {
        size_t n = 1;
        for (int x : d) {
            if (x < 0) throw InvalidShape("negative tensor dimension");
            n *= static_cast<size_t>(x);
        }
        return n;
    }
};

template <class T>
void require_shape(const Tensor<T>& t, const std::vector<int>& dims, const char* what) {
    if (t.dims != dims) {
        throw InvalidShape(std::string(what) + ": expected " + Tensor<T>::shape_str(dims) +
                           ", got " + t.shape_str());
    }
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidShape(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                           b.shape_str());
    }
}

}  // namespace bsr
