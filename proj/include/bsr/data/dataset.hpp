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

#include "bsr/data/synthesis.hpp"

namespace bsr::data {

// On-disk layout:
//   <dir>/manifest.txt            id <TAB> relpath <TAB> N <TAB> seed
//   <dir>/samples/<id>/burst.bin  text header + raw little-endian f32 planes
//   <dir>/samples/<id>/gt.png     linear ground truth as 16-bit PNG
struct ManifestEntry {
    std::string id;
    std::string path;  // sample directory, relative to the dataset root
    int n_frames = 0;
    uint64_t seed = 0;
};

void write_burst_file(const std::string& path, const BurstSample& sample);
// Reads everything except the ground truth (stored separately as PNG).
BurstSample read_burst_file(const std::string& path);

class DatasetWriter {
public:
    explicit DatasetWriter(std::string root);
    // Returns the assigned sample id.
    std::string add(const BurstSample& sample);
    void finalize();

private:
    std::string root_;
    std::vector<ManifestEntry> entries_;
    bool finalized_ = false;
};

std::vector<ManifestEntry> read_manifest(const std::string& root);

BurstSample load_sample(const std::string& root, const ManifestEntry& entry);
std::vector<BurstSample> load_dataset(const std::string& root);

}  // namespace bsr::data
