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

#include "bsr/data/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cmath>

#include "bsr/errors.hpp"

namespace bsr::data {

Tensor<float> read_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IngestError("cannot read image: " + path);
    const int depth = m.depth();
    if (depth != CV_8U && depth != CV_16U)
        throw IngestError("unsupported bit depth in " + path);
    const float norm = depth == CV_8U ? 1.0f / 255.0f : 1.0f / 65535.0f;
    const int h = m.rows, w = m.cols, ch = m.channels();
    if (ch != 1 && ch != 3 && ch != 4)
        throw IngestError("unsupported channel count in " + path);

    Tensor<float> out({3, h, w});
    const size_t plane = static_cast<size_t>(h) * w;
    auto value = [&](int y, int x, int c) -> float {
        // OpenCV stores BGR(A); map to RGB.
        if (ch == 1) {
            return depth == CV_8U ? m.at<uint8_t>(y, x) * norm : m.at<uint16_t>(y, x) * norm;
        }
        const int src_c = 2 - c;  // RGB index -> BGR(A) index
        if (depth == CV_8U) {
            const uint8_t* p = m.ptr<uint8_t>(y) + static_cast<size_t>(x) * ch;
            return p[src_c] * norm;
        }
        const uint16_t* p = m.ptr<uint16_t>(y) + static_cast<size_t>(x) * ch;
        return p[src_c] * norm;
    };
    for (int c = 0; c < 3; ++c) {
        float* dst = out.data() + static_cast<size_t>(c) * plane;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) dst[static_cast<size_t>(y) * w + x] = value(y, x, c);
    }
    return out;
}

void write_png16(const std::string& path, const Tensor<float>& img) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw InvalidShape("write_png16: (3,H,W) image expected, got " + img.shape_str());
    const int h = img.dim(1), w = img.dim(2);
    const size_t plane = static_cast<size_t>(h) * w;
    cv::Mat m(h, w, CV_16UC3);
    for (int y = 0; y < h; ++y) {
        uint16_t* row = m.ptr<uint16_t>(y);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                float v = img.data()[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x];
                v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
                // BGR order on disk side.
                row[static_cast<size_t>(x) * 3 + (2 - c)] =
                    static_cast<uint16_t>(std::lround(v * 65535.0f));
            }
        }
    }
    if (!cv::imwrite(path, m)) throw IoError("cannot write PNG: " + path);
}

}  // namespace bsr::data
