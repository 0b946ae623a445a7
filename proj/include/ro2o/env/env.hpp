#pragma once

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ro2o::env {

using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

class EnvironmentFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RewardKind { Dense, SparseBinary };

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int action_dim = 0;
    double action_bound = 1.0;  // actions live in [-bound, bound]^action_dim
    int horizon = 1;
    RewardKind reward_kind = RewardKind::Dense;
    double dt = 0.1;
    double friction = 0.9;      // velocity multiplier per step
    double accel_gain = 1.0;
    double reward_min = 0.0;
    double reward_max = 0.0;

    void validate() const;
};

/// One environment step. `done` marks the end of an episode; `truncated`
/// distinguishes a horizon cut-off (bootstrap through it) from a true
/// terminal state.
struct Transition {
    Vector state;
    Vector action;
    double reward = 0.0;
    Vector next_state;
    bool done = false;
    bool truncated = false;

    [[nodiscard]] bool terminal() const noexcept { return done && !truncated; }
};

struct EnvState {
    Vector x;
    int t = 0;
};

struct StepResult {
    Transition transition;
    EnvState next;
    bool clipped = false;  // the action had to be clipped into bounds
};

/// Deterministic continuous-control task. step() is a pure function of the
/// state and action; only reset() consumes randomness.
class Environment {
public:
    virtual ~Environment() = default;

    [[nodiscard]] virtual const EnvSpec& spec() const noexcept = 0;
    [[nodiscard]] virtual EnvState reset(Rng& rng) const = 0;
    [[nodiscard]] StepResult step(const EnvState& state, const Vector& action) const;

    /// Scripted near-optimal controller (expert tier and score anchor).
    [[nodiscard]] virtual Vector expert_action(const Vector& x) const = 0;
    /// Detuned controller for the medium tier, before action noise.
    [[nodiscard]] virtual Vector medium_action(const Vector& x) const = 0;

protected:
    /// Integrates one step from x under an in-bounds action.
    virtual void advance(const Vector& x, const Vector& action, Vector& next, double& reward, bool& goal) const = 0;
};

/// PointMass2D: state [px, py, vx, vy], force action, dense reward
/// -|p - goal| - 0.01 |a|^2, goal at the origin, arena [-2, 2]^2.
///
///   p' = p + dt * v
///   v' = friction * v + dt * accel_gain * a
///
/// Positions are clipped to the arena; the velocity component pushing into
/// a wall is zeroed.
class PointMass2D final : public Environment {
public:
    PointMass2D();
    [[nodiscard]] const EnvSpec& spec() const noexcept override { return spec_; }
    [[nodiscard]] EnvState reset(Rng& rng) const override;
    [[nodiscard]] Vector expert_action(const Vector& x) const override;
    [[nodiscard]] Vector medium_action(const Vector& x) const override;

    static constexpr double kArena = 2.0;
    static constexpr double kActionCost = 0.01;

protected:
    void advance(const Vector& x, const Vector& action, Vector& next, double& reward, bool& goal) const override;

private:
    EnvSpec spec_;
};

/// SparseMaze2D: point mass in [0, 4]^2 with a wall x in [1.8, 2.2],
/// y in [0, 2.8]. Start near (0.5, 0.5), goal disc of radius 0.35 at
/// (3.5, 0.5). Reward 1 and a terminal transition on entering the goal,
/// 0 elsewhere. Moves into the wall or out of the arena are rejected and the
/// velocity is zeroed.
class SparseMaze2D final : public Environment {
public:
    SparseMaze2D();
    [[nodiscard]] const EnvSpec& spec() const noexcept override { return spec_; }
    [[nodiscard]] EnvState reset(Rng& rng) const override;
    [[nodiscard]] Vector expert_action(const Vector& x) const override;
    [[nodiscard]] Vector medium_action(const Vector& x) const override;

    [[nodiscard]] static bool in_goal(double px, double py);
    [[nodiscard]] static bool blocked(double px, double py);

protected:
    void advance(const Vector& x, const Vector& action, Vector& next, double& reward, bool& goal) const override;

private:
    EnvSpec spec_;
};

[[nodiscard]] std::unique_ptr<Environment> make_environment(std::string_view name);

}  // namespace ro2o::env
