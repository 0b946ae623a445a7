#pragma once

#include "ro2o/autodiff/checkpoint.hpp"
#include "ro2o/autodiff/mlp.hpp"

#include <random>

namespace ro2o::agent {

using ad::Index;
using ad::Matrix;
using ad::Tensor;
using Rng = std::mt19937_64;

struct PolicyOptions {
    std::vector<Index> hidden = {64, 64};
    ad::Activation activation = ad::Activation::Tanh;
    double log_std_min = -5.0;
    double log_std_max = 2.0;
};

/// Diagonal Gaussian over pre-squash actions, one row per state.
struct Distribution {
    Tensor mean;
    Tensor log_std;
};

struct PolicySample {
    Tensor action;    // tanh-squashed, B x action_dim
    Tensor log_prob;  // B x 1, includes the tanh change of variables
    Distribution dist;
};

/// Squashed-Gaussian actor: a trunk maps a state to (mean, raw log-std);
/// the log-std is mapped smoothly into [log_std_min, log_std_max] and actions
/// are tanh(mean + std * noise), i.e. always inside (-1, 1).
class GaussianPolicy {
public:
    GaussianPolicy(Index state_dim, Index action_dim, const PolicyOptions& opts, std::uint64_t seed);

    [[nodiscard]] Distribution distribution(const Tensor& states) const;
    /// Reparameterized sample with externally supplied standard-normal noise.
    [[nodiscard]] PolicySample sample(const Tensor& states, const Matrix& noise) const;

    struct Values {
        Matrix action;
        Matrix log_prob;
    };
    /// Graph-free sample drawing its own noise.
    [[nodiscard]] Values sample_values(const Matrix& states, Rng& rng) const;
    /// Graph-free pre-squash mean and log-std.
    [[nodiscard]] std::pair<Matrix, Matrix> distribution_values(const Matrix& states) const;
    /// tanh(mean): the deterministic evaluation action.
    [[nodiscard]] Matrix mean_action(const Matrix& states) const;

    [[nodiscard]] Matrix standard_noise(Index rows, Rng& rng) const;

    [[nodiscard]] Index state_dim() const noexcept { return state_dim_; }
    [[nodiscard]] Index action_dim() const noexcept { return action_dim_; }
    [[nodiscard]] const PolicyOptions& options() const noexcept { return opts_; }
    [[nodiscard]] ad::Mlp& trunk() noexcept { return trunk_; }
    [[nodiscard]] const ad::Mlp& trunk() const noexcept { return trunk_; }
    [[nodiscard]] std::vector<Tensor> parameters() const { return trunk_.parameters(); }
    void zero_grad() { trunk_.zero_grad(); }

    void store(ad::Checkpoint& ckpt) const;
    void load(const ad::Checkpoint& ckpt);
    /// Policy rebuilt from a checkpoint alone; shapes come from the stored trunk.
    [[nodiscard]] static GaussianPolicy restore(const ad::Checkpoint& ckpt);

private:
    Index state_dim_;
    Index action_dim_;
    PolicyOptions opts_;
    ad::Mlp trunk_;
};

/// Log-density of a tanh-squashed diagonal Gaussian given the pre-squash
/// point u = mean + std * noise. B x 1.
[[nodiscard]] Tensor squashed_log_prob(const Tensor& pre_squash, const Tensor& log_std, const Matrix& noise);

}  // namespace ro2o::agent
