#pragma once

#include "ro2o/env/env.hpp"

#include <cstdint>
#include <functional>

namespace ro2o::env {

/// Maps a raw (unnormalized) state to an action.
using PolicyFn = std::function<Vector(const Vector& state, Rng& rng)>;

struct ScoreAnchors {
    double random_return = 0.0;
    double expert_return = 1.0;
};

struct EvalResult {
    double mean_return = 0.0;
    double std_return = 0.0;
    double normalized_score = 0.0;
    int episodes = 0;
};

[[nodiscard]] PolicyFn expert_policy(const Environment& env);
[[nodiscard]] PolicyFn medium_policy(const Environment& env, double noise_scale);
[[nodiscard]] PolicyFn random_policy(const Environment& env);

/// Returns of the uniform-random and scripted-expert controllers, averaged
/// over kAnchorEpisodes episodes with a fixed seed. Computed once per
/// environment name and cached process-wide.
[[nodiscard]] ScoreAnchors score_anchors(const Environment& env);
inline constexpr int kAnchorEpisodes = 1000;
inline constexpr std::uint64_t kAnchorSeed = 0x5eed'a11c'0ffeULL;

/// 100 * (ret - random) / (expert - random).
[[nodiscard]] double normalized_score(double ret, const ScoreAnchors& anchors);

/// Undiscounted episode returns. Start states come from a stream seeded by
/// `seed` alone, so different policies evaluated with the same seed face the
/// same initial states.
[[nodiscard]] EvalResult evaluate_policy(const PolicyFn& policy, const Environment& env, int episodes,
                                         std::uint64_t seed);

}  // namespace ro2o::env
