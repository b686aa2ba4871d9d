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

#include <stdexcept>
#include <string>

namespace bsr {

struct InvalidShape : std::invalid_argument {
    explicit InvalidShape(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidInput : std::invalid_argument {
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidCameraParams : std::invalid_argument {
    explicit InvalidCameraParams(const std::string& what) : std::invalid_argument(what) {}
};

struct InvalidBurstLength : std::invalid_argument {
    explicit InvalidBurstLength(const std::string& what) : std::invalid_argument(what) {}
};

// A burst length does not match the length a fixed-size fusion variant was built for.
struct FixedLengthError : std::invalid_argument {
    explicit FixedLengthError(const std::string& what) : std::invalid_argument(what) {}
};

struct IngestError : std::runtime_error {
    explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bsr
