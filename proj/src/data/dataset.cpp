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

#include "bsr/data/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bsr/data/image_io.hpp"
#include "bsr/errors.hpp"

namespace fs = std::filesystem;

namespace bsr::data {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_burst_file(const std::string& path, const BurstSample& sample) {
    if (sample.frames.empty()) throw InvalidBurstLength("burst sample has no frames");
    const int n = static_cast<int>(sample.frames.size());
    const int h = sample.frames[0].dim(1), w = sample.frames[0].dim(2);
    std::ostringstream head;
    head << "BSRBURST 1\n";
    head << "frames " << n << "\n";
    head << "height " << h << "\n";
    head << "width " << w << "\n";
    head << "scale " << sample.scale << "\n";
    head << "seed " << sample.seed << "\n";
    const CameraParams& cam = sample.camera;
    head << "gamma " << fmt_double(cam.gamma_exponent) << "\n";
    head << "wb " << fmt_double(cam.wb_gains[0]) << " " << fmt_double(cam.wb_gains[1]) << " "
         << fmt_double(cam.wb_gains[2]) << "\n";
    head << "cmatrix";
    for (double v : cam.color_matrix) head << " " << fmt_double(v);
    head << "\n";
    head << "shot " << fmt_double(cam.shot_noise) << "\n";
    head << "read " << fmt_double(cam.read_noise) << "\n";
    head << "tone " << (cam.use_tone_curve ? 1 : 0) << "\n";
    for (int i = 0; i < n; ++i) {
        const FrameTransform& t = sample.transforms[static_cast<size_t>(i)];
        head << "t " << i << " " << fmt_double(t.dx) << " " << fmt_double(t.dy) << " "
             << fmt_double(t.rot_deg) << "\n";
    }
    head << "DATA\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    const std::string h_str = head.str();
    f.write(h_str.data(), static_cast<std::streamsize>(h_str.size()));
    for (const auto& frame : sample.frames) {
        require_shape(frame, {4, h, w}, "write_burst_file frame");
        f.write(reinterpret_cast<const char*>(frame.data()),
                static_cast<std::streamsize>(sizeof(float) * frame.numel()));
    }
    if (!f) throw IoError("short write: " + path);
}

BurstSample read_burst_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line) || line != "BSRBURST 1")
        throw IoError("bad burst file magic in " + path);

    BurstSample s;
    int n = 0, h = 0, w = 0;
    while (std::getline(f, line)) {
        if (line == "DATA") break;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "frames") ls >> n;
        else if (key == "height") ls >> h;
        else if (key == "width") ls >> w;
        else if (key == "scale") ls >> s.scale;
        else if (key == "seed") ls >> s.seed;
        else if (key == "gamma") ls >> s.camera.gamma_exponent;
        else if (key == "wb") ls >> s.camera.wb_gains[0] >> s.camera.wb_gains[1] >> s.camera.wb_gains[2];
        else if (key == "cmatrix")
            for (double& v : s.camera.color_matrix) ls >> v;
        else if (key == "shot") ls >> s.camera.shot_noise;
        else if (key == "read") ls >> s.camera.read_noise;
        else if (key == "tone") {
            int v = 1;
            ls >> v;
            s.camera.use_tone_curve = v != 0;
        } else if (key == "t") {
            int idx = 0;
            FrameTransform t;
            ls >> idx >> t.dx >> t.dy >> t.rot_deg;
            if (idx != static_cast<int>(s.transforms.size()))
                throw IoError("out-of-order transform record in " + path);
            s.transforms.push_back(t);
        } else {
            throw IoError("unknown burst header key '" + key + "' in " + path);
        }
        if (ls.fail()) throw IoError("malformed burst header line in " + path);
    }
    if (n < 1 || h < 1 || w < 1) throw IoError("incomplete burst header in " + path);
    if (static_cast<int>(s.transforms.size()) != n)
        throw IoError("transform count mismatch in " + path);
    s.frames.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Tensor<float> frame({4, h, w});
        f.read(reinterpret_cast<char*>(frame.data()),
               static_cast<std::streamsize>(sizeof(float) * frame.numel()));
        if (!f) throw IoError("truncated burst data in " + path);
        s.frames.push_back(std::move(frame));
    }
    return s;
}

DatasetWriter::DatasetWriter(std::string root) : root_(std::move(root)) {
    fs::create_directories(fs::path(root_) / "samples");
}

std::string DatasetWriter::add(const BurstSample& sample) {
    char id[32];
    std::snprintf(id, sizeof(id), "s%06zu", entries_.size());
    const std::string rel = std::string("samples/") + id;
    const fs::path dir = fs::path(root_) / rel;
    fs::create_directories(dir);
    write_burst_file((dir / "burst.bin").string(), sample);
    write_png16((dir / "gt.png").string(), sample.ground_truth);
    entries_.push_back({id, rel, static_cast<int>(sample.frames.size()), sample.seed});
    return id;
}

void DatasetWriter::finalize() {
    if (finalized_) return;
    std::ofstream f(fs::path(root_) / "manifest.txt");
    if (!f) throw IoError("cannot write manifest in " + root_);
    for (const auto& e : entries_)
        f << e.id << "\t" << e.path << "\t" << e.n_frames << "\t" << e.seed << "\n";
    finalized_ = true;
}

std::vector<ManifestEntry> read_manifest(const std::string& root) {
    std::ifstream f(fs::path(root) / "manifest.txt");
    if (!f) throw IoError("no manifest.txt in " + root);
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ManifestEntry e;
        std::istringstream ls(line);
        if (!(ls >> e.id >> e.path >> e.n_frames >> e.seed))
            throw IoError("malformed manifest line: " + line);
        entries.push_back(std::move(e));
    }
    return entries;
}

BurstSample load_sample(const std::string& root, const ManifestEntry& entry) {
    const fs::path dir = fs::path(root) / entry.path;
    BurstSample s = read_burst_file((dir / "burst.bin").string());
    s.ground_truth = read_image((dir / "gt.png").string());
    return s;
}

std::vector<BurstSample> load_dataset(const std::string& root) {
    std::vector<BurstSample> out;
    for (const auto& e : read_manifest(root)) out.push_back(load_sample(root, e));
    return out;
}

}  // namespace bsr::data
