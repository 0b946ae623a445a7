#pragma once

#include "ro2o/agent/config.hpp"
#include "ro2o/agent/gaussian_policy.hpp"
#include "ro2o/critic/ensemble_critic.hpp"
#include "ro2o/data/replay_buffer.hpp"

namespace ro2o::agent {

using critic::EnsembleCritic;

/// Per-step scalars; every field is finite after a successful update.
struct LossReport {
    double td = 0.0;
    double q_smooth = 0.0;
    double ood = 0.0;
    double critic_total = 0.0;
    double policy = 0.0;
    double js = 0.0;
    double bc = 0.0;
    double entropy = 0.0;
    double mean_u_ood = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double q_mean = 0.0;
    double q_abs_max = 0.0;

    [[nodiscard]] bool all_finite() const;
};

// ---- Q smoothing -----------------------------------------------------------

/// Asymmetric squared difference: weight (1 - tau) where the perturbed value
/// exceeds the anchor value, tau otherwise; symmetric mode uses weight 1.
[[nodiscard]] double smooth_weight(double diff, double tau, bool symmetric);

/// `candidates` holds n rows per anchor (row b * n + k). The worst candidate
/// is picked per anchor and member without a graph; the loss is rebuilt at
/// the chosen candidates so gradients reach both Q(s_hat, a) and Q(s, a).
/// `q_live`, if given, is q_all(states, actions) and is reused.
[[nodiscard]] Tensor q_smooth_loss_from_candidates(const EnsembleCritic& critic, const Matrix& states,
                                                   const Matrix& actions, const Matrix& candidates, int n, double tau,
                                                   bool symmetric, const Tensor* q_live = nullptr);
[[nodiscard]] Tensor q_smooth_loss(const EnsembleCritic& critic, const Matrix& states, const Matrix& actions,
                                   double eps, int n, double tau, bool symmetric, Rng& rng,
                                   const Tensor* q_live = nullptr);

// ---- Policy smoothing ------------------------------------------------------

/// Jensen-Shannon divergence between two diagonal Gaussians with the mixture
/// replaced by its moment-matched Gaussian; summed over dimensions. B x 1.
[[nodiscard]] Tensor js_divergence(const Distribution& p, const Distribution& q);
/// Scalar form for a single dimension (mean, log-std pairs).
[[nodiscard]] double js_divergence(double mean_p, double log_std_p, double mean_q, double log_std_q);

[[nodiscard]] Tensor policy_smooth_loss_from_candidates(const GaussianPolicy& policy, const Matrix& states,
                                                        const Matrix& candidates, int n,
                                                        const Distribution* at_states = nullptr);
[[nodiscard]] Tensor policy_smooth_loss(const GaussianPolicy& policy, const Matrix& states, double eps, int n,
                                        Rng& rng, const Distribution* at_states = nullptr);

// ---- OOD penalty -----------------------------------------------------------

struct OodTerm {
    Tensor loss;
    double mean_u = 0.0;
};

/// Penalty at given perturbed states and actions: target_i = Q_i - alpha U,
/// both detached; loss = mean over batch and members of (target_i - Q_i)^2.
[[nodiscard]] OodTerm ood_loss_at(const EnsembleCritic& critic, const Matrix& perturbed_states,
                                  const Matrix& actions, double alpha);
/// One perturbed state per anchor, actions drawn from the policy there.
[[nodiscard]] OodTerm ood_loss(const EnsembleCritic& critic, const GaussianPolicy& policy, const Matrix& states,
                               double eps, double alpha, Rng& rng);

// ---- Composite losses ------------------------------------------------------

struct CriticLoss {
    Tensor total;
    Tensor td;
    Tensor q_smooth;
    OodTerm ood;
    double q_mean = 0.0;
    double q_abs_max = 0.0;
};

/// mean_i L_TD^i + eta1 * L_Qsmooth + eta2 * L_ood. Draws next actions,
/// perturbations and OOD actions from `rng` in a fixed order.
[[nodiscard]] CriticLoss critic_loss(const EnsembleCritic& critic, const GaussianPolicy& policy,
                                     const data::Batch& batch, const Ro2oConfig& cfg, Phase phase, double alpha,
                                     double beta, Rng& rng);

struct PolicyLoss {
    Tensor total;
    Tensor log_prob;  // B x 1, live
    double objective = 0.0;
    double js = 0.0;
    double bc = 0.0;
    double entropy = 0.0;
};

/// mean(beta log pi - objective) + eta3 * JS smoothing + beta_BC * MSE(tanh(mean), a_data).
/// The objective is min_i Q_i or mean_i Q_i - std_i Q_i (lcb), evaluated with
/// the critic held fixed.
[[nodiscard]] PolicyLoss policy_loss(const GaussianPolicy& policy, const EnsembleCritic& critic,
                                     const data::Batch& batch, const Ro2oConfig& cfg, Phase phase, double beta,
                                     Rng& rng);

/// Objective term per row for a B x N value matrix: min or mean - std.
[[nodiscard]] Tensor policy_objective(const Tensor& q, PolicyObjective objective);

}  // namespace ro2o::agent
