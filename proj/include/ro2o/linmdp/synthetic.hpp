#pragma once

#include "ro2o/linmdp/lsvi.hpp"

#include <cstdint>
#include <random>

namespace ro2o::linmdp {

using Rng = std::mt19937_64;
using MatD = Mat<double>;
using VecD = Vec<double>;

/// Finite linear MDP whose features are probability vectors over d latent
/// factors, so ||phi||_2 <= 1, P(s'|s,a) = phi(s,a)^T mu(s') and
/// r(s,a) = phi(s,a)^T upsilon with upsilon in [0, 1]^d.
struct LinearMdpSpec {
    int d = 0;
    int n_states = 0;
    int n_actions = 0;
    int horizon = 1;
    MatD features;   // (n_states * n_actions) x d, row index s * n_actions + a
    VecD upsilon;    // d
    MatD mu;         // d x n_states, each row a distribution over next states

    [[nodiscard]] VecD phi(int s, int a) const;
    [[nodiscard]] double reward(int s, int a) const;
    /// Exact (T V)(s, a) = r + sum_s' P(s'|s,a) V(s') = phi^T (upsilon + mu V).
    [[nodiscard]] double bellman(int s, int a, const VecD& v) const;
    [[nodiscard]] int sample_next(int s, int a, Rng& rng) const;
    /// Throws if a feature norm exceeds 1, a reward leaves [0, 1] or a
    /// transition row is not a distribution.
    void validate() const;
};

[[nodiscard]] LinearMdpSpec make_linear_mdp(int d, int n_states, int n_actions, int horizon, Rng& rng);

/// Random features with norm at most `radius`.
[[nodiscard]] MatD random_ball_features(int n, int d, double radius, Rng& rng);
[[nodiscard]] VecD random_unit_vector(int d, Rng& rng);

/// Anchors with d + extra perturbations each, differences of length eps in
/// random directions: full rank with probability one.
[[nodiscard]] std::vector<RobustGroup<double>> full_rank_robust_set(const MatD& anchors, int extra, double eps,
                                                                    Rng& rng);
/// Every difference vector is confined to span(e_1): Lambda_robust has rank 1.
[[nodiscard]] std::vector<RobustGroup<double>> rank_deficient_robust_set(const MatD& anchors, int group_size,
                                                                         double eps, Rng& rng);

/// In-sample, OOD and robust data drawn around random anchors.
struct SyntheticDatasetOptions {
    int d = 6;
    int n_in = 40;
    int n_ood = 20;
    int n_anchors = 8;
    int extra_perturbations = 2;
    double eps = 0.2;
};

[[nodiscard]] LinearMdpDataset<double> make_synthetic_dataset(const SyntheticDatasetOptions& opts, Rng& rng);

}  // namespace ro2o::linmdp
