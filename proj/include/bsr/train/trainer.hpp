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

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "bsr/data/synthesis.hpp"
#include "bsr/metrics/losses.hpp"
#include "bsr/model/network.hpp"
#include "bsr/rng.hpp"

namespace bsr::train {

struct TrainConfig {
    int batch_size = 16;
    int patch_size = 48;  // training crop at packed resolution
    int64_t total_iters = 400000;
    double lr_start = 1e-4;
    double lr_end = 1e-6;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    double grad_clip = 10.0;  // global-norm clip; <= 0 disables
    metrics::LossVariant loss_variant = metrics::LossVariant::kImplicitWeighting;
    uint64_t seed = 0;
    int64_t checkpoint_every = 0;  // 0: only the final checkpoint

    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

// lr_end + (lr_start - lr_end) * (1 + cos(pi * iter / total)) / 2.
double cosine_lr(int64_t iter, const TrainConfig& cfg);

struct StepStats {
    double loss = 0.0;
    double lr = 0.0;
    int sampled_index = -1;
};

// Owns the model, optimizer state (decoupled-weight-decay Adam) and the rng
// stream. A step is a pure function of (state, batch): same saved state and
// batch give bit-identical successors.
class Trainer {
public:
    Trainer(const model::ModelConfig& mcfg, const TrainConfig& tcfg);

    model::BurstSrNet<float>& net() { return *net_; }
    const model::BurstSrNet<float>& net() const { return *net_; }
    const TrainConfig& train_config() const { return tcfg_; }
    int64_t iteration() const { return iter_; }
    Rng& rng() { return rng_; }

    StepStats train_step(const std::vector<const data::BurstSample*>& batch);

    // Runs to total_iters with per-epoch shuffled batches (the permutation is
    // a pure function of seed and epoch, so resume reproduces the schedule).
    // Appends one record per step to <out_dir>/loss_curve.txt and writes
    // checkpoints there.
    std::vector<StepStats> fit(const std::vector<data::BurstSample>& dataset,
                               const std::string& out_dir,
                               const std::function<void(int64_t, const StepStats&)>& on_step = {});

    void save_checkpoint(const std::string& path, bool with_optimizer = true);
    static std::unique_ptr<Trainer> load_checkpoint(const std::string& path);

private:
    void adamw_update(double lr);

    model::ModelConfig mcfg_;
    TrainConfig tcfg_;
    std::unique_ptr<model::BurstSrNet<float>> net_;
    Rng rng_;
    int64_t iter_ = 0;
};

// Loads config + weights for inference/evaluation (optimizer state ignored).
std::unique_ptr<model::BurstSrNet<float>> load_model(const std::string& path);
model::ModelConfig peek_checkpoint_config(const std::string& path);

}  // namespace bsr::train
