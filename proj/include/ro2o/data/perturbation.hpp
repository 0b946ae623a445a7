#pragma once

#include "ro2o/data/replay_buffer.hpp"

namespace ro2o::data {

/// Sampling set B(s, eps) under the L-infinity metric, in normalized state
/// space.
struct PerturbationConfig {
    double epsilon = 0.0;
    int n_samples = 1;

    void validate() const;
};

/// n_samples states drawn uniformly from the L-infinity ball around `state`
/// (one row each).
[[nodiscard]] Matrix sample_perturbations(const Eigen::RowVectorXd& state, const PerturbationConfig& cfg, Rng& rng);

/// Batched form: row b * n_samples + k holds candidate k of anchor row b.
[[nodiscard]] Matrix sample_perturbations(const Matrix& states, const PerturbationConfig& cfg, Rng& rng);

/// Largest L-infinity distance between each candidate and its anchor, laid out
/// as produced by the batched sampler.
[[nodiscard]] double max_linf_deviation(const Matrix& states, const Matrix& candidates, int n_samples);

}  // namespace ro2o::data
