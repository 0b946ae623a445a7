#include "ro2o/env/evaluate.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace ro2o::env {

PolicyFn expert_policy(const Environment& env)
{
    return [&env](const Vector& x, Rng&) { return env.expert_action(x); };
}

PolicyFn medium_policy(const Environment& env, double noise_scale)
{
    return [&env, noise_scale](const Vector& x, Rng& rng) {
        std::normal_distribution<double> noise(0.0, noise_scale);
        Vector a = env.medium_action(x);
        if (noise_scale > 0.0) {
            for (Eigen::Index k = 0; k < a.size(); ++k) {
                a(k) += noise(rng);
            }
        }
        return a;
    };
}

PolicyFn random_policy(const Environment& env)
{
    return [&env](const Vector&, Rng& rng) {
        const double b = env.spec().action_bound;
        std::uniform_real_distribution<double> u(-b, b);
        Vector a(env.spec().action_dim);
        for (Eigen::Index k = 0; k < a.size(); ++k) {
            a(k) = u(rng);
        }
        return a;
    };
}

double normalized_score(double ret, const ScoreAnchors& anchors)
{
    return 100.0 * (ret - anchors.random_return) / (anchors.expert_return - anchors.random_return);
}

namespace {

struct Returns {
    double mean = 0.0;
    double stddev = 0.0;
};

Returns rollout_returns(const PolicyFn& policy, const Environment& env, int episodes, std::uint64_t seed)
{
    Rng start_rng(seed);
    Rng action_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int ep = 0; ep < episodes; ++ep) {
        EnvState state = env.reset(start_rng);
        double ret = 0.0;
        for (;;) {
            StepResult r = env.step(state, policy(state.x, action_rng));
            ret += r.transition.reward;
            state = std::move(r.next);
            if (r.transition.done) {
                break;
            }
        }
        sum += ret;
        sum_sq += ret * ret;
    }
    Returns out;
    out.mean = sum / episodes;
    out.stddev = std::sqrt(std::max(0.0, sum_sq / episodes - out.mean * out.mean));
    return out;
}

}  // namespace

ScoreAnchors score_anchors(const Environment& env)
{
    static std::mutex mu;
    static std::map<std::string, ScoreAnchors> cache;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(env.spec().name); it != cache.end()) {
            return it->second;
        }
    }
    ScoreAnchors a;
    a.random_return = rollout_returns(random_policy(env), env, kAnchorEpisodes, kAnchorSeed).mean;
    a.expert_return = rollout_returns(expert_policy(env), env, kAnchorEpisodes, kAnchorSeed).mean;
    if (!(a.expert_return > a.random_return)) {
        throw std::logic_error(env.spec().name + ": expert anchor does not beat the random anchor");
    }
    std::lock_guard lock(mu);
    cache.emplace(env.spec().name, a);
    return a;
}

EvalResult evaluate_policy(const PolicyFn& policy, const Environment& env, int episodes, std::uint64_t seed)
{
    if (episodes < 1) {
        throw std::invalid_argument("evaluate_policy needs at least one episode");
    }
    const Returns r = rollout_returns(policy, env, episodes, seed);
    EvalResult out;
    out.mean_return = r.mean;
    out.std_return = r.stddev;
    out.episodes = episodes;
    out.normalized_score = normalized_score(r.mean, score_anchors(env));
    return out;
}

}  // namespace ro2o::env
