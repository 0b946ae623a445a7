#pragma once

#include "ro2o/agent/config.hpp"
#include "ro2o/agent/gaussian_policy.hpp"
#include "ro2o/agent/losses.hpp"
#include "ro2o/autodiff/adam.hpp"
#include "ro2o/data/normalizer.hpp"
#include "ro2o/data/replay_buffer.hpp"
#include "ro2o/env/evaluate.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ro2o::agent {

/// Policy, critic ensemble, optimisers and entropy temperature.
class Ro2oAgent {
public:
    Ro2oAgent(const Ro2oConfig& cfg, Index state_dim, Index action_dim, std::uint64_t seed);

    /// One gradient step: critic, target blend, policy, temperature. Throws
    /// ad::NonFiniteError if any loss or parameter stops being finite.
    LossReport update(const data::Batch& batch, Phase phase, std::int64_t global_step, Rng& rng);

    [[nodiscard]] double beta() const;
    [[nodiscard]] double target_entropy() const noexcept { return target_entropy_; }
    [[nodiscard]] const Ro2oConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] GaussianPolicy& policy() noexcept { return policy_; }
    [[nodiscard]] const GaussianPolicy& policy() const noexcept { return policy_; }
    [[nodiscard]] EnsembleCritic& critic() noexcept { return critic_; }
    [[nodiscard]] const EnsembleCritic& critic() const noexcept { return critic_; }

    void store(ad::Checkpoint& ckpt) const;
    void load(const ad::Checkpoint& ckpt);

private:
    Ro2oConfig cfg_;
    GaussianPolicy policy_;
    EnsembleCritic critic_;
    Tensor log_beta_;
    double target_entropy_;
    ad::AdamState critic_opt_;
    ad::AdamState actor_opt_;
    ad::AdamState beta_opt_;
};

struct EvalSettings {
    std::int64_t offline_interval = 5000;
    std::int64_t online_interval = 500;
    int episodes = 10;
    std::uint64_t seed = 20240601;
};

struct StepRecord {
    std::int64_t step = 0;  // global gradient-step counter
    Phase phase = Phase::Offline;
    LossReport report;
};

struct EvalRecord {
    std::int64_t step = 0;        // global step: offline gradient steps + online env steps
    Phase phase = Phase::Offline;
    std::int64_t phase_step = 0;  // steps within the phase
    double mean_return = 0.0;
    double normalized_score = 0.0;
    double std_return = 0.0;
};

/// Receives per-step and per-evaluation records. Calls arrive from the
/// training thread of one run.
class MetricsSink {
public:
    virtual ~MetricsSink() = default;
    virtual void on_step(const StepRecord& /*record*/) {}
    virtual void on_eval(const EvalRecord& /*record*/) {}
};

struct TrainerOptions {
    EvalSettings eval;
    bool reward_transform = false;            // apply 4(r - 0.5) to online rewards
    std::vector<env::Transition> inject;       // placed in the online buffer when phase 2 starts
    std::int64_t log_every = 1;
};

struct TrainResult {
    std::vector<EvalRecord> evals;
    double offline_final = std::numeric_limits<double>::quiet_NaN();
    double online_final = std::numeric_limits<double>::quiet_NaN();
    double max_abs_q = 0.0;
    std::int64_t gradient_steps = 0;
    std::int64_t env_steps = 0;
    bool aborted = false;
    std::string abort_reason;

    /// min over the first k online evaluations / offline_final.
    [[nodiscard]] double drop(int k) const;
    [[nodiscard]] std::vector<double> online_scores() const;
};

/// Two-phase loop: offline gradient steps on the fixed dataset, then
/// alternating environment and gradient steps.
class Trainer {
public:
    Trainer(const Ro2oConfig& cfg, const env::Environment& environment, const std::vector<env::Transition>& offline,
            std::uint64_t seed, TrainerOptions opts = {}, MetricsSink* sink = nullptr);

    void run_offline(std::int64_t steps);
    void run_online(std::int64_t steps);
    /// Both phases; faults are caught and recorded in the result.
    TrainResult run(std::int64_t t1, std::int64_t t2);

    EvalRecord evaluate(Phase phase, std::int64_t phase_step);

    [[nodiscard]] Ro2oAgent& agent() noexcept { return agent_; }
    [[nodiscard]] const data::Normalizer& normalizer() const noexcept { return normalizer_; }
    [[nodiscard]] data::BufferSet& buffers() noexcept { return buffers_; }
    [[nodiscard]] const TrainResult& result() const noexcept { return result_; }
    [[nodiscard]] ad::Checkpoint checkpoint() const;
    /// Deterministic policy acting on raw states.
    [[nodiscard]] env::PolicyFn greedy_policy() const;

private:
    void gradient_step(Phase phase);

    Ro2oConfig cfg_;
    const env::Environment& env_;
    TrainerOptions opts_;
    MetricsSink* sink_;
    data::Normalizer normalizer_;
    data::BufferSet buffers_;
    Ro2oAgent agent_;
    Rng rng_;
    Rng env_rng_;
    std::int64_t global_step_ = 0;
    std::int64_t offline_done_ = 0;
    std::int64_t online_done_ = 0;
    bool injected_ = false;
    env::EnvState env_state_;
    bool env_live_ = false;
    TrainResult result_;
};

/// Normalizer round trip through a checkpoint.
void store_normalizer(const data::Normalizer& norm, ad::Checkpoint& ckpt);
[[nodiscard]] data::Normalizer load_normalizer(const ad::Checkpoint& ckpt);

/// Mean over members, states and candidates of |Q_i(s + d, a) - Q_i(s, a)|
/// for d uniform in the L-infinity ball of radius eps.
[[nodiscard]] double perturbation_sensitivity(const EnsembleCritic& critic, const Matrix& states,
                                              const Matrix& actions, double eps, int n, Rng& rng);

}  // namespace ro2o::agent
