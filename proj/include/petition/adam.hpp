#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "petition/model.hpp"
#include "petition/tensor.hpp"

namespace petition::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(std::span<const Parameter> params, AdamConfig cfg);
};

/// Bias-corrected Adam update in place. Throws TrainingError naming the
/// parameter if any gradient entry is non-finite (nothing is updated then).
void adam_step(std::span<Parameter> params, std::span<const Tensor> grads, AdamState &state);

}  // namespace petition::nn
