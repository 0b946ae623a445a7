#pragma once

#include "ro2o/autodiff/mlp.hpp"
#include "ro2o/critic/ensemble_critic.hpp"
#include "ro2o/data/replay_buffer.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace ro2o::agent {

/// alpha_t = max(end, start - rate * step).
struct AlphaSchedule {
    double start = 0.0;
    double end = 0.0;
    double rate = 0.0;
};

enum class EntropyMode { Fixed, Auto };
enum class PolicyObjective { Min, Lcb };
enum class Phase { Offline, Online };

[[nodiscard]] EntropyMode entropy_mode_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(EntropyMode mode);
[[nodiscard]] PolicyObjective policy_objective_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(PolicyObjective objective);
[[nodiscard]] std::string_view to_string(Phase phase);

struct Ro2oConfig {
    // Networks and optimisation.
    int n_critics = 10;
    std::vector<ad::Index> hidden = {64, 64};
    ad::Activation activation = ad::Activation::Tanh;
    double gamma = 0.99;
    int batch_size = 256;
    double lr_actor = 3e-4;
    double lr_critic = 3e-4;
    double lr_entropy = 3e-4;
    double polyak = 0.005;

    // Regularisation weights.
    double eta_q_smooth = 1e-4;       // eta1
    double eta_ood = 0.0;             // eta2
    double eta_policy_smooth = 0.1;   // eta3
    double eps_q = 0.001;
    double eps_p = 0.001;
    double eps_ood = 0.001;
    int n_perturb = 10;
    double tau_smooth = 0.2;
    bool symmetric_smooth = false;
    AlphaSchedule alpha;

    // Entropy temperature.
    EntropyMode entropy_mode = EntropyMode::Auto;
    double beta_init = 1.0;
    std::optional<double> target_entropy;  // defaults to -action_dim

    PolicyObjective policy_objective = PolicyObjective::Min;
    double bc_offline = 0.0;
    double bc_online = 0.0;

    critic::TargetMode target_offline = critic::TargetMode::SharedMin;
    critic::TargetMode target_online = critic::TargetMode::SharedMin;
    data::BufferRegime online_regime = data::BufferRegime::Union;
    std::size_t online_capacity = 1'000'000;

    double log_std_min = -5.0;
    double log_std_max = 2.0;

    /// Throws std::invalid_argument naming the first offending field.
    void validate() const;

    [[nodiscard]] critic::TargetMode target_mode(Phase phase) const
    {
        return phase == Phase::Offline ? target_offline : target_online;
    }
    [[nodiscard]] double bc_weight(Phase phase) const { return phase == Phase::Offline ? bc_offline : bc_online; }
};

[[nodiscard]] double anneal_alpha(const AlphaSchedule& schedule, std::int64_t step);

}  // namespace ro2o::agent
