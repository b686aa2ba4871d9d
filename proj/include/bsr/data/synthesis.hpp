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

#include <array>
#include <cstdint>
#include <vector>

#include "bsr/rng.hpp"
#include "bsr/tensor.hpp"

namespace bsr::data {

// Inverse-pipeline parameters mapping an sRGB image back to approximate
// linear sensor values. color_matrix is sensor->sRGB (row-major); unprocess
// applies its inverse. Noise follows var = shot_noise * x + read_noise.
struct CameraParams {
    double gamma_exponent = 2.2;
    std::array<double, 9> color_matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    std::array<double, 3> wb_gains = {1.0, 1.0, 1.0};
    double shot_noise = 0.0;
    double read_noise = 0.0;
    bool use_tone_curve = true;

    void validate() const;
    std::array<double, 9> inverse_color_matrix() const;
};

// Rigid per-frame motion; translation in LR RAW pixels, rotation in degrees
// about the image center. The base frame (index 0) is the identity.
struct FrameTransform {
    double dx = 0.0;
    double dy = 0.0;
    double rot_deg = 0.0;
    bool identity() const { return dx == 0.0 && dy == 0.0 && rot_deg == 0.0; }
};

struct SynthesisConfig {
    int scale = 4;
    int patch_raw = 96;  // square crop edge at RAW scale; must be even
    int burst_size = 14;
    double max_translation = 4.0;  // RAW-scale pixels
    double max_rotation = 1.0;     // degrees
    double gamma_lo = 2.0, gamma_hi = 2.4;
    double wb_lo = 1.2, wb_hi = 2.4;
    double shot_lo = 1e-4, shot_hi = 1e-2;
    double read_lo = 1e-6, read_hi = 6.4e-4;
    bool use_tone_curve = true;

    void validate() const;
};

// One training/eval unit: the packed LR RAW burst, the linear-RGB HR ground
// truth, and the synthesis metadata that produced them.
struct BurstSample {
    std::vector<Tensor<float>> frames;  // each (4, h, w)
    Tensor<float> ground_truth;         // (3, s*H, s*W), H x W the RAW size
    std::vector<FrameTransform> transforms;
    CameraParams camera;
    uint64_t seed = 0;
    int scale = 4;
};

// sRGB -> linear: inverse smoothstep tone curve, inverse gamma, sRGB->sensor
// color matrix, inverse white balance; clipped to [0,1]. Input/output (3,H,W).
Tensor<float> unprocess(const Tensor<float>& srgb, const CameraParams& cam);

CameraParams sample_camera(const SynthesisConfig& cfg, Rng& rng);

// n transforms, element 0 identity, the rest uniform in the config ranges.
std::vector<FrameTransform> sample_transforms(int n, const SynthesisConfig& cfg, Rng& rng);

// Rigid warp (translation in this image's pixels, rotation about the center),
// bilinear resampling, out-of-frame samples take the nearest edge pixel.
Tensor<float> warp(const Tensor<float>& img, const FrameTransform& t);

// Bilinear-kernel downsampling by an integer factor (dims must divide).
Tensor<float> downsample_bilinear(const Tensor<float>& img, int s);

// Heteroscedastic Gaussian noise, clipped to [0,1]; one draw per element in
// (c,y,x) order.
Tensor<float> add_noise(const Tensor<float>& img, const CameraParams& cam, Rng& rng);

// (3,H,W) linear -> (H,W) RGGB Bayer mosaic; H, W must be even.
Tensor<float> mosaic(const Tensor<float>& linear);

// (H,W) mosaic -> (4,H/2,W/2) packed planes in R, Gr, Gb, B order.
Tensor<float> pack_raw(const Tensor<float>& raw);
Tensor<float> unpack_raw(const Tensor<float>& packed);

// Full synthesis chain. Draw order from the seed: camera, crop corner,
// transforms, then per-frame noise; bit-reproducible for fixed inputs.
BurstSample synthesize_burst(const Tensor<float>& srgb, int n, const SynthesisConfig& cfg,
                             uint64_t seed);

// Packed-scale displacement field realizing a frame's known synthesis motion:
// sampling frame i at (grid + flow) reproduces the base-frame content.
Tensor<float> oracle_flow(const FrameTransform& t, int h, int w);

}  // namespace bsr::data
