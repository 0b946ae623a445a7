#pragma once

#include "ro2o/agent/trainer.hpp"
#include "ro2o/exp/config.hpp"
#include "ro2o/linmdp/checks.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ro2o::exp {

/// Exit codes shared by the CLI verbs.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitTraining = 2, kExitTheory = 3 };

struct RunOptions {
    int jobs = 1;
    std::filesystem::path out_root;  // empty: cfg.out_dir, then default_out_root()
    bool write_files = true;
    bool write_checkpoints = true;
    /// Progress lines ("arm seed=... step ..."); may be called from workers.
    std::function<void(const std::string&)> log;
};

/// One (arm, seed) training run.
struct RunRecord {
    std::string run_id;       // <arm>/seed-<seed>
    std::string arm;
    std::uint64_t seed = 0;
    std::string config_hash;  // hash of the resolved config with this arm's agent
    std::string code_version;
    agent::TrainResult result;
    double seconds = 0.0;
    double q_bound = 0.0;     // max |r| / (1 - gamma)
    std::filesystem::path dir;

    [[nodiscard]] double drop(int k) const { return result.drop(k); }
    /// Some online evaluation reached offline_final.
    [[nodiscard]] bool recovered() const;
    [[nodiscard]] bool diverged() const { return !(result.max_abs_q <= 10.0 * q_bound); }
};

struct ExperimentReport {
    std::string name;
    std::vector<RunRecord> runs;  // arm-major, then seed order
    std::filesystem::path dir;

    [[nodiscard]] bool any_aborted() const;
    [[nodiscard]] const RunRecord& find(const std::string& arm, std::uint64_t seed) const;
    /// Per-arm aggregates and per-run finals.
    [[nodiscard]] Json summary(int drop_k) const;
};

/// Offline data for a config: loaded from dataset.path or generated.
[[nodiscard]] std::vector<env::Transition> offline_data(const ExperimentConfig& cfg, const env::Environment& env);

/// Trains every arm x seed, fanning runs out over `jobs` worker threads.
/// Writes <out>/<name>/<arm>/seed-<s>/{metrics.jsonl, eval.csv, checkpoint.bin}
/// and <out>/<name>/summary.json.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Runs the experiment and writes <out>/<name>/ablation.csv with columns
/// cell, seed, offline_score, online_score, drop, max_abs_q, diverged.
[[nodiscard]] ExperimentReport run_ablation(const ExperimentConfig& cfg, const RunOptions& opts = {});
[[nodiscard]] std::string ablation_csv(const ExperimentReport& report, int drop_k);

/// eval.csv body: step, phase, mean_return, norm_score, std.
[[nodiscard]] std::string eval_csv(const std::vector<agent::EvalRecord>& evals);

/// Theory checks with a report written to <out>/theory/report.json.
[[nodiscard]] linmdp::TheorySuiteResult run_theory(std::uint64_t seed, const std::filesystem::path& out_root);

[[nodiscard]] std::filesystem::path resolve_out_root(const ExperimentConfig& cfg, const RunOptions& opts);
[[nodiscard]] const char* code_version() noexcept;

}  // namespace ro2o::exp
