#pragma once

#include "ro2o/agent/config.hpp"
#include "ro2o/env/dataset.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ro2o::exp {

using Json = nlohmann::ordered_json;

/// Raised for any malformed, unknown or out-of-range configuration value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSection {
    env::DatasetQuality quality;
    std::uint64_t seed = 0;
    bool reward_transform = false;  // 4(r - 0.5), sparse-reward tasks
    std::string path;               // load instead of generating when set
};

/// Data placed in the online buffer at the start of fine-tuning.
struct InjectSection {
    bool enabled = false;
    env::DatasetQuality quality{env::QualityTier::Medium, 0.1, 20};
    std::uint64_t seed = 1;
};

/// A named variant of the base agent; `overrides` is a partial agent object.
struct Arm {
    std::string name;
    Json overrides = Json::object();
};

struct EvalSection {
    std::int64_t offline_interval = 5000;
    std::int64_t online_interval = 500;
    int episodes = 10;
    std::uint64_t seed = 20240601;
};

struct ExperimentConfig {
    std::string name = "custom";
    std::string env = "PointMass2D";
    DatasetSection dataset;
    InjectSection inject;
    agent::Ro2oConfig agent;
    std::vector<Arm> arms = {Arm{"ro2o", Json::object()}};
    std::int64_t t1 = 50000;
    std::int64_t t2 = 10000;
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::string out_dir;  // empty: use the default output root
    EvalSection eval;
    std::int64_t log_every = 100;
    int drop_k = 5;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Base agent with an arm's overrides applied.
    [[nodiscard]] agent::Ro2oConfig arm_agent(const Arm& arm) const;
};

// Agent <-> JSON using the hyperparameter vocabulary (eta1, eta2, eta3,
// eps_q, eps_p, eps_ood, tau, n, alpha, beta_bc, policy_objective, ...).
[[nodiscard]] Json agent_to_json(const agent::Ro2oConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
[[nodiscard]] agent::Ro2oConfig agent_from_json(const Json& j, const agent::Ro2oConfig& base = {});

[[nodiscard]] Json to_json(const ExperimentConfig& cfg);
/// A "preset" key selects the base; everything else overrides it.
[[nodiscard]] ExperimentConfig from_json(const Json& j);
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a over the canonical (sorted-key) serialization, as 16 hex digits.
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);
[[nodiscard]] std::string canonical_dump(const ExperimentConfig& cfg);

/// Default output root: $RO2O_OUT_DIR, else "runs".
[[nodiscard]] std::filesystem::path default_out_root();
inline constexpr const char* kOutDirEnv = "RO2O_OUT_DIR";

// ---- presets ---------------------------------------------------------------

[[nodiscard]] const std::vector<std::string>& preset_names();
/// Throws ConfigError for an unknown name.
[[nodiscard]] ExperimentConfig preset(const std::string& name);
[[nodiscard]] bool is_theory_preset(const std::string& name);

}  // namespace ro2o::exp
