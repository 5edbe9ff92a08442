#pragma once

#include <cstdint>

#include "querysum/tensor.hpp"

namespace querysum {

/// Adam hyperparameters. Defaults follow the training configuration
/// shipped with this project (lr 1e-7, eps 1e-8, beta1 0.9, beta2 0.999).
struct AdamConfig {
    double lr = 1e-7;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment estimates per parameter block plus the shared step counter.
struct AdamState {
    std::vector<Vec> m;
    std::vector<Vec> v;
    int64_t t = 0;

    static AdamState for_params(const std::vector<ParamView>& params);
};

/// One bias-corrected Adam update over all blocks. `params` and `grads`
/// must enumerate the same blocks in the same order as when the state
/// was created.
void adam_step(const AdamConfig& config, AdamState& state,
               const std::vector<ParamView>& params,
               const std::vector<ParamView>& grads);

} // namespace querysum
