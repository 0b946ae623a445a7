#pragma once

#include "ro2o/data/replay_buffer.hpp"

#include <string>
#include <vector>

namespace ro2o::data {

/// Per-dimension state standardization fitted once on offline data.
struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    double std_floor = 1e-3;
    std::vector<std::string> warnings;

    [[nodiscard]] Eigen::VectorXd normalize(const Eigen::VectorXd& s) const;
    [[nodiscard]] Eigen::VectorXd denormalize(const Eigen::VectorXd& z) const;
    /// Row-wise over a batch.
    [[nodiscard]] Matrix normalize_rows(const Matrix& states) const;
    [[nodiscard]] Matrix denormalize_rows(const Matrix& z) const;

    [[nodiscard]] static Normalizer identity(int dim);
};

/// Mean and population std over every state and next_state in the dataset.
/// Dimensions whose std falls below `std_floor` are floored and a warning is
/// recorded.
[[nodiscard]] Normalizer fit_normalizer(const std::vector<Transition>& dataset, double std_floor = 1e-3);

/// Gathers sampled records into a normalized dense batch.
[[nodiscard]] Batch make_batch(const std::vector<SampledRecord>& records, const Normalizer& normalizer);
[[nodiscard]] Batch make_batch(const std::vector<Transition>& transitions, const Normalizer& normalizer);

}  // namespace ro2o::data
