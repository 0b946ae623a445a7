#pragma once

#include "ro2o/autodiff/checkpoint.hpp"
#include "ro2o/autodiff/mlp.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace ro2o::critic {

using ad::Index;
using ad::Matrix;
using ad::Tensor;

/// How the bootstrap value is formed from the N target networks.
enum class TargetMode {
    SharedMin,    // every member regresses onto min_i Q_target_i
    Independent,  // member i regresses onto its own Q_target_i
    SharedMax,    // every member regresses onto max_i Q_target_i
};

[[nodiscard]] TargetMode target_mode_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(TargetMode mode);

struct CriticOptions {
    int n_members = 10;
    std::vector<Index> hidden = {64, 64};
    ad::Activation activation = ad::Activation::Tanh;
    double output_scale = 1.0;
};

/// N Q-heads over (state ++ action) with matched target copies.
class EnsembleCritic {
public:
    EnsembleCritic(Index state_dim, Index action_dim, const CriticOptions& opts, std::uint64_t seed);
    /// Members given explicitly (tests, checkpoints); targets start equal.
    EnsembleCritic(Index state_dim, Index action_dim, std::vector<ad::Mlp> members);

    [[nodiscard]] int size() const noexcept { return static_cast<int>(members_.size()); }
    [[nodiscard]] Index state_dim() const noexcept { return state_dim_; }
    [[nodiscard]] Index action_dim() const noexcept { return action_dim_; }
    [[nodiscard]] std::vector<ad::Mlp>& members() noexcept { return members_; }
    [[nodiscard]] const std::vector<ad::Mlp>& members() const noexcept { return members_; }
    [[nodiscard]] std::vector<ad::Mlp>& targets() noexcept { return targets_; }
    [[nodiscard]] const std::vector<ad::Mlp>& targets() const noexcept { return targets_; }

    /// B x N, column i = member i. Gradients flow into member parameters and
    /// into whichever inputs require them.
    [[nodiscard]] Tensor q_all(const Tensor& states, const Tensor& actions) const;
    /// Like q_all, but member parameters are treated as constants (policy
    /// updates differentiate through the action only).
    [[nodiscard]] Tensor q_all_frozen(const Tensor& states, const Tensor& actions) const;
    [[nodiscard]] Tensor q_member(int i, const Tensor& states, const Tensor& actions) const;

    /// Graph-free evaluation of the live members / the target copies.
    [[nodiscard]] Matrix q_values(const Matrix& states, const Matrix& actions) const;
    [[nodiscard]] Matrix target_values(const Matrix& states, const Matrix& actions) const;
    [[nodiscard]] Matrix member_values(int i, const Matrix& inputs) const;

    [[nodiscard]] std::vector<Tensor> parameters() const;
    void zero_grad();
    /// target_i <- tau * member_i + (1 - tau) * target_i.
    void polyak_update(double tau);
    [[nodiscard]] bool all_finite() const;

    void store(ad::Checkpoint& ckpt) const;
    [[nodiscard]] static EnsembleCritic restore(const ad::Checkpoint& ckpt, Index state_dim, Index action_dim);

private:
    void check_inputs(Index rows_s, Index cols_s, Index rows_a, Index cols_a) const;

    Index state_dim_;
    Index action_dim_;
    std::vector<ad::Mlp> members_;
    std::vector<ad::Mlp> targets_;
};

/// Bootstrap targets, B x N:
///   y_i = r + gamma * not_terminal * (agg_i - beta * log_pi_next)
/// with agg_i = min_j Qt_j, Qt_i, or max_j Qt_j depending on the mode.
[[nodiscard]] Matrix td_target(const Matrix& target_q, const Matrix& rewards, const Matrix& not_terminal,
                               const Matrix& log_pi_next, TargetMode mode, double gamma, double beta);

/// Population standard deviation across members, per row: B x N -> B x 1.
[[nodiscard]] Matrix uncertainty(const Matrix& q);
[[nodiscard]] double uncertainty(std::span<const double> member_values);
/// Differentiable form of the same quantity.
[[nodiscard]] Tensor uncertainty(const Tensor& q);

}  // namespace ro2o::critic
