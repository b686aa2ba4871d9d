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

#include "bsr/tensor.hpp"

namespace bsr::data {

// Reads an 8- or 16-bit PNG/JPEG into a planar (3,H,W) float image in [0,1]
// (RGB order; grayscale replicated, alpha dropped). Throws IngestError.
Tensor<float> read_image(const std::string& path);

// Writes a (3,H,W) float image in [0,1] as a 16-bit RGB PNG.
void write_png16(const std::string& path, const Tensor<float>& img);

}  // namespace bsr::data
