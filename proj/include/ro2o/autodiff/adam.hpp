#pragma once

#include "ro2o/autodiff/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ro2o::ad {

struct AdamOptions {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamOptions options;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;

    AdamState() = default;
    AdamState(std::span<const Tensor> params, AdamOptions opts);
};

/// One bias-corrected Adam update. Parameters without an accumulated gradient
/// are treated as having a zero gradient. Throws NonFiniteError, leaving the
/// parameters untouched, if any gradient entry is NaN or infinite.
void adam_step(AdamState& state, std::span<const Tensor> params);

}  // namespace ro2o::ad
