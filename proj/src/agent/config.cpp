#include "ro2o/agent/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ro2o::agent {

EntropyMode entropy_mode_from_string(std::string_view name)
{
    if (name == "fixed") {
        return EntropyMode::Fixed;
    }
    if (name == "auto") {
        return EntropyMode::Auto;
    }
    throw std::invalid_argument("unknown entropy mode '" + std::string(name) + "' (expected fixed|auto)");
}

std::string_view to_string(EntropyMode mode) { return mode == EntropyMode::Fixed ? "fixed" : "auto"; }

PolicyObjective policy_objective_from_string(std::string_view name)
{
    if (name == "min") {
        return PolicyObjective::Min;
    }
    if (name == "lcb") {
        return PolicyObjective::Lcb;
    }
    throw std::invalid_argument("unknown policy objective '" + std::string(name) + "' (expected min|lcb)");
}

std::string_view to_string(PolicyObjective objective) { return objective == PolicyObjective::Min ? "min" : "lcb"; }

std::string_view to_string(Phase phase) { return phase == Phase::Offline ? "offline" : "online"; }

namespace {

void require(bool ok, const char* field, const char* what)
{
    if (!ok) {
        throw std::invalid_argument(std::string("agent.") + field + ": " + what);
    }
}

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }

}  // namespace

void Ro2oConfig::validate() const
{
    require(n_critics >= 2, "n_critics", "must be >= 2");
    require(!hidden.empty(), "hidden", "needs at least one hidden layer");
    for (auto h : hidden) {
        require(h > 0, "hidden", "layer widths must be positive");
    }
    require(gamma >= 0.0 && gamma < 1.0, "gamma", "must lie in [0, 1)");
    require(batch_size >= 1, "batch_size", "must be >= 1");
    require(lr_actor > 0.0 && lr_critic > 0.0 && lr_entropy > 0.0, "lr", "learning rates must be positive");
    require(polyak > 0.0 && polyak <= 1.0, "polyak", "must lie in (0, 1]");
    require(nonneg(eta_q_smooth), "eta_q_smooth", "must be >= 0");
    require(nonneg(eta_ood), "eta_ood", "must be >= 0");
    require(nonneg(eta_policy_smooth), "eta_policy_smooth", "must be >= 0");
    require(nonneg(eps_q), "eps_q", "must be >= 0");
    require(nonneg(eps_p), "eps_p", "must be >= 0");
    require(nonneg(eps_ood), "eps_ood", "must be >= 0");
    require(n_perturb >= 1, "n_perturb", "must be >= 1");
    require(tau_smooth >= 0.0 && tau_smooth <= 1.0, "tau_smooth", "must lie in [0, 1]");
    require(nonneg(alpha.start) && nonneg(alpha.end) && nonneg(alpha.rate), "alpha", "start, end, rate must be >= 0");
    require(alpha.end <= alpha.start, "alpha", "end must not exceed start");
    require(beta_init > 0.0 && std::isfinite(beta_init), "beta_init", "must be positive");
    require(nonneg(bc_offline) && nonneg(bc_online), "bc", "weights must be >= 0");
    require(online_capacity >= 1, "online_capacity", "must be >= 1");
    require(log_std_min < log_std_max, "log_std", "min must be below max");
}

double anneal_alpha(const AlphaSchedule& schedule, std::int64_t step)
{
    if (step < 0) {
        throw std::invalid_argument("anneal_alpha: step must be >= 0");
    }
    return std::max(schedule.end, schedule.start - schedule.rate * static_cast<double>(step));
}

}  // namespace ro2o::agent
