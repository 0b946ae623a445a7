#include "ro2o/env/env.hpp"

#include <algorithm>
#include <cmath>

namespace ro2o::env {
namespace {

Vector pd_toward(const Vector& x, double gx, double gy, double kp, double kd, double bound)
{
    Vector a(2);
    a(0) = kp * (gx - x(0)) - kd * x(2);
    a(1) = kp * (gy - x(1)) - kd * x(3);
    return a.cwiseMax(-bound).cwiseMin(bound);
}

}  // namespace

void EnvSpec::validate() const
{
    if (state_dim < 1 || action_dim < 1) {
        throw std::invalid_argument("EnvSpec '" + name + "': dimensions must be >= 1");
    }
    if (horizon < 1) {
        throw std::invalid_argument("EnvSpec '" + name + "': horizon must be >= 1");
    }
    if (!std::isfinite(action_bound) || action_bound <= 0.0) {
        throw std::invalid_argument("EnvSpec '" + name + "': action bound must be finite and positive");
    }
}

StepResult Environment::step(const EnvState& state, const Vector& action) const
{
    const EnvSpec& s = spec();
    if (action.size() != s.action_dim) {
        throw EnvironmentFault(s.name + ": action has " + std::to_string(action.size()) + " components, expected "
                               + std::to_string(s.action_dim));
    }
    if (!action.allFinite()) {
        throw EnvironmentFault(s.name + ": non-finite action");
    }
    StepResult out;
    Vector a = action.cwiseMax(-s.action_bound).cwiseMin(s.action_bound);
    out.clipped = (a - action).cwiseAbs().maxCoeff() > 0.0;

    Vector next;
    double reward = 0.0;
    bool goal = false;
    advance(state.x, a, next, reward, goal);

    out.next.x = next;
    out.next.t = state.t + 1;
    out.transition.state = state.x;
    out.transition.action = std::move(a);
    out.transition.reward = reward;
    out.transition.next_state = std::move(next);
    out.transition.done = goal || out.next.t >= s.horizon;
    out.transition.truncated = !goal && out.transition.done;
    return out;
}

PointMass2D::PointMass2D()
{
    spec_.name = "PointMass2D";
    spec_.state_dim = 4;
    spec_.action_dim = 2;
    spec_.horizon = 100;
    spec_.reward_kind = RewardKind::Dense;
    spec_.dt = 0.1;
    spec_.friction = 0.9;
    spec_.accel_gain = 1.0;
    spec_.reward_min = -(std::sqrt(2.0) * kArena + kActionCost * 2.0);
    spec_.reward_max = 0.0;
    spec_.validate();
}

EnvState PointMass2D::reset(Rng& rng) const
{
    std::uniform_real_distribution<double> pos(-1.5, 1.5);
    EnvState s;
    s.x = Vector::Zero(4);
    s.x(0) = pos(rng);
    s.x(1) = pos(rng);
    return s;
}

void PointMass2D::advance(const Vector& x, const Vector& a, Vector& next, double& reward, bool& goal) const
{
    next.resize(4);
    for (int k = 0; k < 2; ++k) {
        double p = x(k) + spec_.dt * x(k + 2);
        double v = spec_.friction * x(k + 2) + spec_.dt * spec_.accel_gain * a(k);
        if (p > kArena || p < -kArena) {
            p = std::clamp(p, -kArena, kArena);
            v = 0.0;
        }
        next(k) = p;
        next(k + 2) = v;
    }
    reward = -next.head<2>().norm() - kActionCost * a.squaredNorm();
    goal = false;
}

Vector PointMass2D::expert_action(const Vector& x) const
{
    return pd_toward(x, 0.0, 0.0, 4.0, 4.0, spec_.action_bound);
}

Vector PointMass2D::medium_action(const Vector& x) const
{
    return pd_toward(x, 0.0, 0.0, 0.6, 0.2, spec_.action_bound);
}

SparseMaze2D::SparseMaze2D()
{
    spec_.name = "SparseMaze2D";
    spec_.state_dim = 4;
    spec_.action_dim = 2;
    spec_.horizon = 200;
    spec_.reward_kind = RewardKind::SparseBinary;
    spec_.dt = 0.1;
    spec_.friction = 0.9;
    spec_.accel_gain = 1.0;
    spec_.reward_min = 0.0;
    spec_.reward_max = 1.0;
    spec_.validate();
}

bool SparseMaze2D::in_goal(double px, double py)
{
    const double dx = px - 3.5;
    const double dy = py - 0.5;
    return dx * dx + dy * dy <= 0.35 * 0.35;
}

bool SparseMaze2D::blocked(double px, double py)
{
    if (px < 0.0 || px > 4.0 || py < 0.0 || py > 4.0) {
        return true;
    }
    return px >= 1.8 && px <= 2.2 && py <= 2.8;
}

EnvState SparseMaze2D::reset(Rng& rng) const
{
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);
    EnvState s;
    s.x = Vector::Zero(4);
    s.x(0) = 0.5 + jitter(rng);
    s.x(1) = 0.5 + jitter(rng);
    return s;
}

void SparseMaze2D::advance(const Vector& x, const Vector& a, Vector& next, double& reward, bool& goal) const
{
    next.resize(4);
    double px = x(0) + spec_.dt * x(2);
    double py = x(1) + spec_.dt * x(3);
    double vx = spec_.friction * x(2) + spec_.dt * spec_.accel_gain * a(0);
    double vy = spec_.friction * x(3) + spec_.dt * spec_.accel_gain * a(1);
    // Axis-separated collision so the point slides along walls.
    if (blocked(px, x(1))) {
        px = x(0);
        vx = 0.0;
    }
    if (blocked(px, py)) {
        py = x(1);
        vy = 0.0;
    }
    next << px, py, vx, vy;
    goal = in_goal(next(0), next(1));
    reward = goal ? 1.0 : 0.0;
}

Vector SparseMaze2D::expert_action(const Vector& x) const
{
    // Up the left side, across above the wall, then down to the goal.
    if (x(0) < 2.3) {
        if (x(1) < 3.1 && x(0) < 1.7) {
            return pd_toward(x, 1.2, 3.5, 4.0, 4.0, spec_.action_bound);
        }
        return pd_toward(x, 3.0, 3.5, 4.0, 4.0, spec_.action_bound);
    }
    return pd_toward(x, 3.5, 0.5, 4.0, 4.0, spec_.action_bound);
}

Vector SparseMaze2D::medium_action(const Vector& x) const
{
    if (x(0) < 2.3) {
        if (x(1) < 3.1 && x(0) < 1.7) {
            return pd_toward(x, 1.2, 3.5, 1.0, 0.5, spec_.action_bound);
        }
        return pd_toward(x, 3.0, 3.5, 1.0, 0.5, spec_.action_bound);
    }
    return pd_toward(x, 3.5, 0.5, 1.0, 0.5, spec_.action_bound);
}

std::unique_ptr<Environment> make_environment(std::string_view name)
{
    if (name == "PointMass2D") {
        return std::make_unique<PointMass2D>();
    }
    if (name == "SparseMaze2D") {
        return std::make_unique<SparseMaze2D>();
    }
    throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

}  // namespace ro2o::env
