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

#include "bsr/metrics/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bsr/errors.hpp"

namespace bsr::metrics {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_window() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    const int r = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double v = std::exp(-(x * x + y * y) / (2.0 * kSsimSigma * kSsimSigma));
            w[static_cast<size_t>((y + r) * kSsimWindow + (x + r))] = v;
            sum += v;
        }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace

double mse(const Tensor<float>& a, const Tensor<float>& b) {
    require_same_shape(a, b, "mse");
    if (a.numel() == 0) throw InvalidInput("mse: empty tensors");
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) {
        const double d = static_cast<double>(a.v[static_cast<size_t>(i)]) -
                         static_cast<double>(b.v[static_cast<size_t>(i)]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.numel());
}

double psnr(const Tensor<float>& pred, const Tensor<float>& target, double data_range) {
    require_same_shape(pred, target, "psnr");
    if (data_range <= 0.0) throw InvalidInput("psnr: data_range must be > 0");
    const double m = mse(pred, target);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(data_range * data_range / m);
}

double ssim(const Tensor<float>& pred, const Tensor<float>& target, double data_range) {
    require_same_shape(pred, target, "ssim");
    if (data_range <= 0.0) throw InvalidInput("ssim: data_range must be > 0");
    if (pred.rank() != 3) throw InvalidShape("ssim: (C,H,W) images expected");
    const int c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
    if (h < kSsimWindow || w < kSsimWindow)
        throw InvalidShape("ssim: image smaller than the 11x11 window");

    static const std::vector<double> win = gaussian_window();
    const double c1 = (0.01 * data_range) * (0.01 * data_range);
    const double c2 = (0.03 * data_range) * (0.03 * data_range);
    const size_t plane = static_cast<size_t>(h) * w;

    double total = 0.0;
    int64_t count = 0;
    for (int ci = 0; ci < c; ++ci) {
        const float* px = pred.data() + static_cast<size_t>(ci) * plane;
        const float* py = target.data() + static_cast<size_t>(ci) * plane;
        for (int y = 0; y + kSsimWindow <= h; ++y)
            for (int x = 0; x + kSsimWindow <= w; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int wy = 0; wy < kSsimWindow; ++wy)
                    for (int wx = 0; wx < kSsimWindow; ++wx) {
                        const double g = win[static_cast<size_t>(wy * kSsimWindow + wx)];
                        const double a = px[static_cast<size_t>(y + wy) * w + (x + wx)];
                        const double b = py[static_cast<size_t>(y + wy) * w + (x + wx)];
                        mx += g * a;
                        my += g * b;
                        mxx += g * a * a;
                        myy += g * b * b;
                        mxy += g * a * b;
                    }
                const double vx = mxx - mx * mx;
                const double vy = myy - my * my;
                const double vxy = mxy - mx * my;
                const double num = (2.0 * mx * my + c1) * (2.0 * vxy + c2);
                const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
                total += num / den;
                ++count;
            }
    }
    return total / static_cast<double>(count);
}

Tensor<float> clip01(const Tensor<float>& img) {
    Tensor<float> out(img.dims);
    for (int64_t i = 0; i < img.numel(); ++i) {
        float v = img.v[static_cast<size_t>(i)];
        out.v[static_cast<size_t>(i)] = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
    }
    return out;
}

double MetricReport::mean_psnr() const {
    double s = 0;
    for (const auto& r : records) s += r.psnr_db;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

double MetricReport::mean_ssim() const {
    double s = 0;
    for (const auto& r : records) s += r.ssim;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

double MetricReport::mean_runtime_ms() const {
    double s = 0;
    for (const auto& r : records) s += r.runtime_ms;
    return records.empty() ? 0.0 : s / static_cast<double>(records.size());
}

void MetricReport::write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << "sample_id,n_frames,psnr_db,ssim,runtime_ms\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.6f,%.6f,%.3f\n", r.sample_id.c_str(), r.n_frames,
                      r.psnr_db, r.ssim, r.runtime_ms);
        f << buf;
    }
}

void MetricReport::write_records(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%s %d %.6f %.6f %.3f\n", r.sample_id.c_str(), r.n_frames,
                      r.psnr_db, r.ssim, r.runtime_ms);
        f << buf;
    }
}

}  // namespace bsr::metrics
