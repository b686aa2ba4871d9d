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

#include <string>
#include <vector>

#include "bsr/tensor.hpp"

namespace bsr::metrics {

// Mean squared error in double precision.
double mse(const Tensor<float>& a, const Tensor<float>& b);

// 10*log10(data_range^2 / MSE); +infinity for an exact match. Inputs are
// expected to be clipped to [0, data_range] by the caller.
double psnr(const Tensor<float>& pred, const Tensor<float>& target, double data_range);

// Structural similarity with the standard parameterization: 11x11 Gaussian
// window (sigma 1.5), c1=(0.01 L)^2, c2=(0.03 L)^2, c3=c2/2, unit exponents
// (which collapses luminance/contrast/structure into the two-constant form).
// Computed over valid window positions per channel, then averaged.
double ssim(const Tensor<float>& pred, const Tensor<float>& target, double data_range);

Tensor<float> clip01(const Tensor<float>& img);

struct MetricRecord {
    std::string sample_id;
    int n_frames = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
    double runtime_ms = 0.0;
};

struct MetricReport {
    std::vector<MetricRecord> records;
    int64_t param_count = 0;

    double mean_psnr() const;
    double mean_ssim() const;
    double mean_runtime_ms() const;

    // CSV columns: sample_id, n_frames, psnr_db, ssim, runtime_ms.
    void write_csv(const std::string& path) const;
    // One whitespace-separated record per line (same fields).
    void write_records(const std::string& path) const;
};

}  // namespace bsr::metrics
