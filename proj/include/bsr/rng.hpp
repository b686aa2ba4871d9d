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

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

namespace bsr {

// Seeded generator with portable value mapping. The engine (mt19937_64) has a
// standard-specified output sequence; the uniform/normal mappings below avoid
// libstdc++ distribution objects so that streams are reproducible across
// standard-library versions. Normal draws are stateless (no cached spare), so
// serializing the engine captures the full generator state.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const double u = uniform();
        int v = lo + static_cast<int>(u * (static_cast<double>(hi) - lo + 1.0));
        return v > hi ? hi : v;
    }

    // Standard normal via Box-Muller (cosine branch only).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Log-uniform in [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    void save(std::ostream& os) const { os << eng_; }
    void load(std::istream& is) { is >> eng_; }

    bool operator==(const Rng& other) const { return eng_ == other.eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace bsr
