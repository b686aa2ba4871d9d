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

#include "bsr/data/synthesis.hpp"

#include <cmath>
#include <string>

#include "bsr/errors.hpp"

namespace bsr::data {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Two reference sensor->sRGB matrices (rows sum to one so white is preserved);
// per-sample matrices are convex blends of these.
constexpr std::array<double, 9> kRefMatrixA = {
    1.73, -0.63, -0.10,
    -0.18, 1.40, -0.22,
    0.02, -0.50, 1.48,
};
constexpr std::array<double, 9> kRefMatrixB = {
    1.52, -0.36, -0.16,
    -0.13, 1.53, -0.40,
    0.04, -0.56, 1.52,
};

double det3(const std::array<double, 9>& m) {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

std::array<double, 9> inv3(const std::array<double, 9>& m) {
    const double d = det3(m);
    if (d == 0.0) throw InvalidCameraParams("color_matrix is singular");
    const double id = 1.0 / d;
    return {
        (m[4] * m[8] - m[5] * m[7]) * id, (m[2] * m[7] - m[1] * m[8]) * id,
        (m[1] * m[5] - m[2] * m[4]) * id, (m[5] * m[6] - m[3] * m[8]) * id,
        (m[0] * m[8] - m[2] * m[6]) * id, (m[2] * m[3] - m[0] * m[5]) * id,
        (m[3] * m[7] - m[4] * m[6]) * id, (m[1] * m[6] - m[0] * m[7]) * id,
        (m[0] * m[4] - m[1] * m[3]) * id,
    };
}

double frob(const std::array<double, 9>& m) {
    double s = 0;
    for (double x : m) s += x * x;
    return std::sqrt(s);
}

inline float clamp01(float v) { return v < 0.f ? 0.f : (v > 1.f ? 1.f : v); }

// Inverse of smoothstep(x) = 3x^2 - 2x^3 on [0,1].
inline double inverse_smoothstep(double y) {
    if (y < 0.0) y = 0.0;
    if (y > 1.0) y = 1.0;
    return 0.5 - std::sin(std::asin(1.0 - 2.0 * y) / 3.0);
}

inline float sample_edge_bilinear(const float* plane, int h, int w, double sy, double sx) {
    if (sx < 0.0) sx = 0.0;
    if (sx > w - 1) sx = w - 1;
    if (sy < 0.0) sy = 0.0;
    if (sy > h - 1) sy = h - 1;
    int x0 = static_cast<int>(std::floor(sx));
    int y0 = static_cast<int>(std::floor(sy));
    if (x0 > w - 1) x0 = w - 1;
    if (y0 > h - 1) y0 = h - 1;
    const int x1 = x0 + 1 < w ? x0 + 1 : w - 1;
    const int y1 = y0 + 1 < h ? y0 + 1 : h - 1;
    const float fx = static_cast<float>(sx - x0);
    const float fy = static_cast<float>(sy - y0);
    const float* r0 = plane + static_cast<size_t>(y0) * w;
    const float* r1 = plane + static_cast<size_t>(y1) * w;
    const float top = (1.f - fx) * r0[x0] + fx * r0[x1];
    const float bot = (1.f - fx) * r1[x0] + fx * r1[x1];
    return (1.f - fy) * top + fy * bot;
}

void require_rgb(const Tensor<float>& img, const char* what) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw InvalidShape(std::string(what) + ": (3,H,W) image expected, got " + img.shape_str());
}

}  // namespace

void CameraParams::validate() const {
    if (gamma_exponent <= 0.0) throw InvalidCameraParams("gamma_exponent must be > 0");
    for (double g : wb_gains)
        if (g <= 0.0) throw InvalidCameraParams("wb_gains must be positive");
    if (shot_noise < 0.0 || read_noise < 0.0)
        throw InvalidCameraParams("noise parameters must be non-negative");
    const std::array<double, 9> inv = inv3(color_matrix);
    if (frob(color_matrix) * frob(inv) >= 1e6)
        throw InvalidCameraParams("color_matrix is ill-conditioned");
}

std::array<double, 9> CameraParams::inverse_color_matrix() const { return inv3(color_matrix); }

void SynthesisConfig::validate() const {
    if (scale < 1) throw InvalidInput("synthesis scale must be >= 1");
    if (patch_raw < 2 || patch_raw % 2 != 0)
        throw InvalidInput("patch_raw must be even and >= 2");
    if (burst_size < 1) throw InvalidBurstLength("burst_size must be >= 1");
    if (max_translation < 0.0 || max_rotation < 0.0)
        throw InvalidInput("transform ranges must be non-negative");
    if (gamma_lo <= 0.0 || gamma_hi < gamma_lo) throw InvalidInput("bad gamma range");
    if (wb_lo <= 0.0 || wb_hi < wb_lo) throw InvalidInput("bad white-balance range");
    if (shot_lo <= 0.0 || shot_hi < shot_lo) throw InvalidInput("bad shot-noise range");
    if (read_lo <= 0.0 || read_hi < read_lo) throw InvalidInput("bad read-noise range");
}

Tensor<float> unprocess(const Tensor<float>& srgb, const CameraParams& cam) {
    require_rgb(srgb, "unprocess");
    cam.validate();
    const int h = srgb.dim(1), w = srgb.dim(2);
    const std::array<double, 9> inv = cam.inverse_color_matrix();
    Tensor<float> out({3, h, w});
    const size_t plane = static_cast<size_t>(h) * w;
    const float* r = srgb.data();
    const float* g = r + plane;
    const float* b = g + plane;
    float* ro = out.data();
    float* go = ro + plane;
    float* bo = go + plane;
    for (size_t i = 0; i < plane; ++i) {
        double p[3] = {r[i], g[i], b[i]};
        for (double& x : p) {
            if (x < 0.0) x = 0.0;
            if (x > 1.0) x = 1.0;
            if (cam.use_tone_curve) x = inverse_smoothstep(x);
            x = std::pow(x, cam.gamma_exponent);
        }
        double q[3];
        for (int c = 0; c < 3; ++c)
            q[c] = inv[3 * c] * p[0] + inv[3 * c + 1] * p[1] + inv[3 * c + 2] * p[2];
        for (int c = 0; c < 3; ++c) q[c] /= cam.wb_gains[static_cast<size_t>(c)];
        ro[i] = clamp01(static_cast<float>(q[0]));
        go[i] = clamp01(static_cast<float>(q[1]));
        bo[i] = clamp01(static_cast<float>(q[2]));
    }
    return out;
}

CameraParams sample_camera(const SynthesisConfig& cfg, Rng& rng) {
    cfg.validate();
    CameraParams cam;
    cam.gamma_exponent = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
    cam.wb_gains = {rng.uniform(cfg.wb_lo, cfg.wb_hi), 1.0, rng.uniform(cfg.wb_lo, cfg.wb_hi)};
    const double t = rng.uniform();
    for (int i = 0; i < 9; ++i)
        cam.color_matrix[static_cast<size_t>(i)] =
            t * kRefMatrixA[static_cast<size_t>(i)] + (1.0 - t) * kRefMatrixB[static_cast<size_t>(i)];
    cam.shot_noise = rng.log_uniform(cfg.shot_lo, cfg.shot_hi);
    cam.read_noise = rng.log_uniform(cfg.read_lo, cfg.read_hi);
    cam.use_tone_curve = cfg.use_tone_curve;
    return cam;
}

std::vector<FrameTransform> sample_transforms(int n, const SynthesisConfig& cfg, Rng& rng) {
    if (n < 1) throw InvalidBurstLength("burst needs at least one frame");
    std::vector<FrameTransform> ts(static_cast<size_t>(n));
    for (int i = 1; i < n; ++i) {
        FrameTransform& t = ts[static_cast<size_t>(i)];
        t.dx = rng.uniform(-cfg.max_translation, cfg.max_translation);
        t.dy = rng.uniform(-cfg.max_translation, cfg.max_translation);
        t.rot_deg = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
    }
    return ts;
}

Tensor<float> warp(const Tensor<float>& img, const FrameTransform& t) {
    if (img.rank() != 3) throw InvalidShape("warp: (C,H,W) image expected");
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    Tensor<float> out({c, h, w});
    const double theta = t.rot_deg * kPi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    const size_t plane = static_cast<size_t>(h) * w;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // Inverse map of p -> R(theta)(p - c) + c + t.
            const double rx = x - cx - t.dx;
            const double ry = y - cy - t.dy;
            const double sx = ct * rx + st * ry + cx;
            const double sy = -st * rx + ct * ry + cy;
            for (int ci = 0; ci < c; ++ci)
                out.at(ci, y, x) =
                    sample_edge_bilinear(img.data() + static_cast<size_t>(ci) * plane, h, w, sy, sx);
        }
    return out;
}

Tensor<float> downsample_bilinear(const Tensor<float>& img, int s) {
    if (img.rank() != 3) throw InvalidShape("downsample: (C,H,W) image expected");
    if (s < 1) throw InvalidInput("downsample factor must be >= 1");
    const int c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (h % s != 0 || w % s != 0)
        throw InvalidShape("downsample: dims " + img.shape_str() + " not divisible by " +
                           std::to_string(s));
    if (s == 1) return img;
    const int ho = h / s, wo = w / s;
    Tensor<float> out({c, ho, wo});
    const size_t plane = static_cast<size_t>(h) * w;
    for (int ci = 0; ci < c; ++ci) {
        const float* src = img.data() + static_cast<size_t>(ci) * plane;
        for (int y = 0; y < ho; ++y) {
            const double sy = (y + 0.5) * s - 0.5;
            for (int x = 0; x < wo; ++x) {
                const double sx = (x + 0.5) * s - 0.5;
                out.at(ci, y, x) = sample_edge_bilinear(src, h, w, sy, sx);
            }
        }
    }
    return out;
}

Tensor<float> add_noise(const Tensor<float>& img, const CameraParams& cam, Rng& rng) {
    if (cam.shot_noise < 0.0 || cam.read_noise < 0.0)
        throw InvalidCameraParams("noise parameters must be non-negative");
    if (cam.shot_noise == 0.0 && cam.read_noise == 0.0) return img;
    Tensor<float> out(img.dims);
    for (int64_t i = 0; i < img.numel(); ++i) {
        const double x = img.v[static_cast<size_t>(i)];
        const double var = cam.shot_noise * (x > 0.0 ? x : 0.0) + cam.read_noise;
        const double noisy = x + std::sqrt(var) * rng.normal();
        out.v[static_cast<size_t>(i)] = clamp01(static_cast<float>(noisy));
    }
    return out;
}

Tensor<float> mosaic(const Tensor<float>& linear) {
    require_rgb(linear, "mosaic");
    const int h = linear.dim(1), w = linear.dim(2);
    if (h % 2 != 0 || w % 2 != 0) throw InvalidShape("mosaic: even dims required");
    Tensor<float> raw({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int ch = (y % 2 == 0) ? (x % 2 == 0 ? 0 : 1) : (x % 2 == 0 ? 1 : 2);
            raw.at(y, x) = linear.at(ch, y, x);
        }
    return raw;
}

Tensor<float> pack_raw(const Tensor<float>& raw) {
    if (raw.rank() != 2) throw InvalidShape("pack_raw: (H,W) mosaic expected");
    const int h = raw.dim(0), w = raw.dim(1);
    if (h % 2 != 0 || w % 2 != 0) throw InvalidShape("pack_raw: even dims required");
    Tensor<float> out({4, h / 2, w / 2});
    for (int y = 0; y < h / 2; ++y)
        for (int x = 0; x < w / 2; ++x) {
            out.at(0, y, x) = raw.at(2 * y, 2 * x);
            out.at(1, y, x) = raw.at(2 * y, 2 * x + 1);
            out.at(2, y, x) = raw.at(2 * y + 1, 2 * x);
            out.at(3, y, x) = raw.at(2 * y + 1, 2 * x + 1);
        }
    return out;
}

Tensor<float> unpack_raw(const Tensor<float>& packed) {
    if (packed.rank() != 3 || packed.dim(0) != 4)
        throw InvalidShape("unpack_raw: (4,h,w) expected");
    const int h = packed.dim(1), w = packed.dim(2);
    Tensor<float> raw({2 * h, 2 * w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            raw.at(2 * y, 2 * x) = packed.at(0, y, x);
            raw.at(2 * y, 2 * x + 1) = packed.at(1, y, x);
            raw.at(2 * y + 1, 2 * x) = packed.at(2, y, x);
            raw.at(2 * y + 1, 2 * x + 1) = packed.at(3, y, x);
        }
    return raw;
}

namespace {

// Edge-replicated rectangular extraction; the region may extend past the
// source bounds.
Tensor<float> extract_replicated(const Tensor<float>& img, int oy, int ox, int h, int w) {
    const int c = img.dim(0), ih = img.dim(1), iw = img.dim(2);
    Tensor<float> out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y) {
            int sy = oy + y;
            sy = sy < 0 ? 0 : (sy > ih - 1 ? ih - 1 : sy);
            for (int x = 0; x < w; ++x) {
                int sx = ox + x;
                sx = sx < 0 ? 0 : (sx > iw - 1 ? iw - 1 : sx);
                out.at(ci, y, x) = img.at(ci, sy, sx);
            }
        }
    return out;
}

Tensor<float> center_crop(const Tensor<float>& img, int margin, int h, int w) {
    const int c = img.dim(0);
    Tensor<float> out({c, h, w});
    for (int ci = 0; ci < c; ++ci)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(ci, y, x) = img.at(ci, margin + y, margin + x);
    return out;
}

}  // namespace

BurstSample synthesize_burst(const Tensor<float>& srgb, int n, const SynthesisConfig& cfg,
                             uint64_t seed) {
    require_rgb(srgb, "synthesize_burst");
    cfg.validate();
    if (n < 1) throw InvalidBurstLength("burst needs at least one frame");
    const int hr = cfg.scale * cfg.patch_raw;
    const int ih = srgb.dim(1), iw = srgb.dim(2);
    if (ih < hr || iw < hr)
        throw InvalidInput("source image " + srgb.shape_str() + " smaller than the " +
                           std::to_string(hr) + "px HR crop");

    Rng rng(seed);
    const CameraParams cam = sample_camera(cfg, rng);
    const Tensor<float> linear = unprocess(srgb, cam);
    const int oy = rng.uniform_int(0, ih - hr);
    const int ox = rng.uniform_int(0, iw - hr);
    const std::vector<FrameTransform> transforms = sample_transforms(n, cfg, rng);

    // Frames are warped on a tile padded symmetrically around the crop so the
    // rotation center coincides with the crop center; oracle_flow relies on
    // that. The margin covers the largest possible displacement.
    const double sweep = 0.5 * hr * std::sqrt(2.0) * (cfg.max_rotation * kPi / 180.0);
    const int margin = static_cast<int>(std::ceil(cfg.scale * cfg.max_translation + sweep)) + 2;
    const Tensor<float> tile =
        extract_replicated(linear, oy - margin, ox - margin, hr + 2 * margin, hr + 2 * margin);

    BurstSample sample;
    sample.ground_truth = center_crop(tile, margin, hr, hr);
    sample.transforms = transforms;
    sample.camera = cam;
    sample.seed = seed;
    sample.scale = cfg.scale;
    sample.frames.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const FrameTransform& t = transforms[static_cast<size_t>(i)];
        FrameTransform hr_t{t.dx * cfg.scale, t.dy * cfg.scale, t.rot_deg};
        Tensor<float> frame_hr =
            center_crop(t.identity() ? tile : warp(tile, hr_t), margin, hr, hr);
        Tensor<float> lr = downsample_bilinear(frame_hr, cfg.scale);
        lr = add_noise(lr, cam, rng);
        sample.frames.push_back(pack_raw(mosaic(lr)));
    }
    return sample;
}

Tensor<float> oracle_flow(const FrameTransform& t, int h, int w) {
    Tensor<float> flow({2, h, w});
    const double theta = t.rot_deg * kPi / 180.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
    // Packed-scale translation is half the RAW-scale one.
    const double tx = 0.5 * t.dx, ty = 0.5 * t.dy;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double rx = x - cx, ry = y - cy;
            flow.at(0, y, x) = static_cast<float>(ct * rx - st * ry + cx + tx - x);
            flow.at(1, y, x) = static_cast<float>(st * rx + ct * ry + cy + ty - y);
        }
    return flow;
}

}  // namespace bsr::data
