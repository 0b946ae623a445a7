#pragma once

#include "ro2o/env/env.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace ro2o::env {

enum class QualityTier { Expert, Medium, MediumReplayMix, MixedShift };

[[nodiscard]] QualityTier tier_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(QualityTier tier);

struct DatasetQuality {
    QualityTier tier = QualityTier::Medium;
    double noise_scale = 0.1;  // std of Gaussian action noise
    int episodes = 20;

    void validate() const;
};

enum class Provenance : std::uint8_t { Offline = 0, Online = 1 };

struct DatasetHeader {
    std::string env_name;
    int state_dim = 0;
    int action_dim = 0;
    std::uint64_t count = 0;
    std::string tier;
    std::uint64_t seed = 0;
};

/// Transitions plus optional per-record provenance (buffer snapshots).
struct Dataset {
    DatasetHeader header;
    std::vector<Transition> transitions;
    std::vector<Provenance> provenance;  // empty, or one tag per transition
};

/// Rolls out the tier's behavior controller(s):
///   expert          - scripted controller + noise
///   medium          - detuned controller + noise
///   medium-replay-mix - episodes alternate expert / medium
///   mixed-shift     - expert episodes followed by medium episodes
[[nodiscard]] std::vector<Transition> generate_dataset(const Environment& env, const DatasetQuality& quality,
                                                       std::uint64_t seed);

/// r <- 4 (r - 0.5), the sparse-reward shaping applied to maze data.
void apply_sparse_reward_transform(std::vector<Transition>& data);
[[nodiscard]] double sparse_reward_transform(double r);

/// Text form: '#'-prefixed header lines then one CSV row per transition.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, std::ostream& out);
[[nodiscard]] Dataset read_dataset_csv(const std::filesystem::path& path);
[[nodiscard]] Dataset read_dataset_csv(std::istream& in);

/// Compact little-endian binary form; layout in docs/FORMATS.md.
void write_dataset_binary(const Dataset& data, const std::filesystem::path& path);
[[nodiscard]] Dataset read_dataset_binary(const std::filesystem::path& path);

/// Chooses the codec by extension: ".csv" text, anything else binary.
void save_dataset(const Dataset& data, const std::filesystem::path& path);
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ro2o::env
