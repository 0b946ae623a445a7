#include "ro2o/exp/runner.hpp"

#include "ro2o/env/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef RO2O_CODE_VERSION
#define RO2O_CODE_VERSION "unknown"
#endif

namespace ro2o::exp {
namespace fs = std::filesystem;
namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json report_json(const agent::LossReport& r)
{
    Json j;
    j["td"] = finite_or_null(r.td);
    j["q_smooth"] = finite_or_null(r.q_smooth);
    j["ood"] = finite_or_null(r.ood);
    j["critic"] = finite_or_null(r.critic_total);
    j["policy"] = finite_or_null(r.policy);
    j["js"] = finite_or_null(r.js);
    j["bc"] = finite_or_null(r.bc);
    j["entropy"] = finite_or_null(r.entropy);
    j["u_ood"] = finite_or_null(r.mean_u_ood);
    j["alpha"] = finite_or_null(r.alpha);
    j["beta"] = finite_or_null(r.beta);
    j["q_mean"] = finite_or_null(r.q_mean);
    j["q_abs_max"] = finite_or_null(r.q_abs_max);
    return j;
}

/// Streams one JSON object per line into metrics.jsonl.
class JsonlSink final : public agent::MetricsSink {
public:
    JsonlSink(const fs::path& path, std::string run_id) : run_id_(std::move(run_id))
    {
        if (!path.empty()) {
            out_.open(path, std::ios::binary | std::ios::trunc);
            if (!out_) {
                throw ConfigError(path.string() + ": cannot write");
            }
        }
    }

    void on_step(const agent::StepRecord& r) override
    {
        if (!out_.is_open()) {
            return;
        }
        Json j;
        j["kind"] = "step";
        j["run"] = run_id_;
        j["step"] = r.step;
        j["phase"] = std::string(agent::to_string(r.phase));
        j["losses"] = report_json(r.report);
        out_ << j.dump() << '\n';
    }

    void on_eval(const agent::EvalRecord& r) override
    {
        if (!out_.is_open()) {
            return;
        }
        Json j;
        j["kind"] = "eval";
        j["run"] = run_id_;
        j["step"] = r.step;
        j["phase"] = std::string(agent::to_string(r.phase));
        j["phase_step"] = r.phase_step;
        j["mean_return"] = finite_or_null(r.mean_return);
        j["norm_score"] = finite_or_null(r.normalized_score);
        j["std"] = finite_or_null(r.std_return);
        out_ << j.dump() << '\n';
        out_.flush();
    }

private:
    std::string run_id_;
    std::ofstream out_;
};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError(path.string() + ": cannot write");
    }
    out << text;
}

double q_bound(const env::EnvSpec& spec, double gamma)
{
    const double r = std::max(std::abs(spec.reward_min), std::abs(spec.reward_max));
    return r / (1.0 - gamma);
}

double mean_of(const std::vector<double>& v)
{
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

std::string run_hash(const ExperimentConfig& cfg, const Arm& arm, std::uint64_t seed)
{
    ExperimentConfig one = cfg;
    one.agent = cfg.arm_agent(arm);
    one.arms = {Arm{arm.name, Json::object()}};
    one.seeds = {seed};
    one.out_dir.clear();
    return config_hash(one);
}

struct Job {
    const Arm* arm;
    std::uint64_t seed;
};

}  // namespace

const char* code_version() noexcept { return RO2O_CODE_VERSION; }

bool RunRecord::recovered() const
{
    if (!std::isfinite(result.offline_final)) {
        return false;
    }
    const auto scores = result.online_scores();
    return std::any_of(scores.begin(), scores.end(), [&](double s) { return s >= result.offline_final; });
}

bool ExperimentReport::any_aborted() const
{
    return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.result.aborted; });
}

const RunRecord& ExperimentReport::find(const std::string& arm, std::uint64_t seed) const
{
    for (const auto& r : runs) {
        if (r.arm == arm && r.seed == seed) {
            return r;
        }
    }
    throw std::out_of_range("no run " + arm + "/seed-" + std::to_string(seed));
}

Json ExperimentReport::summary(int drop_k) const
{
    Json j;
    j["name"] = name;
    j["code_version"] = code_version();
    j["drop_k"] = drop_k;
    Json arms = Json::object();
    Json runs_json = Json::array();
    std::vector<std::string> order;
    for (const auto& r : runs) {
        if (std::find(order.begin(), order.end(), r.arm) == order.end()) {
            order.push_back(r.arm);
        }
    }
    for (const auto& arm : order) {
        std::vector<double> off, on, drop, mq;
        int recovered = 0, diverged = 0, aborted = 0, n = 0;
        for (const auto& r : runs) {
            if (r.arm != arm) {
                continue;
            }
            ++n;
            off.push_back(r.result.offline_final);
            on.push_back(r.result.online_final);
            drop.push_back(r.drop(drop_k));
            mq.push_back(r.result.max_abs_q);
            recovered += r.recovered() ? 1 : 0;
            diverged += r.diverged() ? 1 : 0;
            aborted += r.result.aborted ? 1 : 0;
        }
        Json a;
        a["runs"] = n;
        a["offline_final"] = finite_or_null(mean_of(off));
        a["online_final"] = finite_or_null(mean_of(on));
        a["drop"] = finite_or_null(mean_of(drop));
        a["max_abs_q"] = finite_or_null(*std::max_element(mq.begin(), mq.end()));
        a["recovered"] = recovered;
        a["diverged"] = diverged;
        a["aborted"] = aborted;
        arms[arm] = a;
    }
    for (const auto& r : runs) {
        Json x;
        x["run_id"] = r.run_id;
        x["arm"] = r.arm;
        x["seed"] = r.seed;
        x["config_hash"] = r.config_hash;
        x["offline_final"] = finite_or_null(r.result.offline_final);
        x["online_final"] = finite_or_null(r.result.online_final);
        x["drop"] = finite_or_null(r.drop(drop_k));
        x["recovered"] = r.recovered();
        x["max_abs_q"] = finite_or_null(r.result.max_abs_q);
        x["q_bound"] = r.q_bound;
        x["diverged"] = r.diverged();
        x["aborted"] = r.result.aborted;
        x["abort_reason"] = r.result.abort_reason;
        x["gradient_steps"] = r.result.gradient_steps;
        x["env_steps"] = r.result.env_steps;
        x["seconds"] = r.seconds;
        runs_json.push_back(x);
    }
    j["arms"] = arms;
    j["runs"] = runs_json;
    return j;
}

std::vector<env::Transition> offline_data(const ExperimentConfig& cfg, const env::Environment& env)
{
    std::vector<env::Transition> data;
    if (!cfg.dataset.path.empty()) {
        try {
            data = env::load_dataset(cfg.dataset.path).transitions;
        } catch (const std::exception& e) {
            throw ConfigError("dataset.path: " + std::string(e.what()));
        }
    } else {
        data = env::generate_dataset(env, cfg.dataset.quality, cfg.dataset.seed);
    }
    if (cfg.dataset.reward_transform) {
        env::apply_sparse_reward_transform(data);
    }
    return data;
}

std::string eval_csv(const std::vector<agent::EvalRecord>& evals)
{
    std::string out = "step,phase,mean_return,norm_score,std\n";
    char buf[160];
    for (const auto& e : evals) {
        std::snprintf(buf, sizeof(buf), "%lld,%s,%.6f,%.6f,%.6f\n", static_cast<long long>(e.step),
                      std::string(agent::to_string(e.phase)).c_str(), e.mean_return, e.normalized_score,
                      e.std_return);
        out += buf;
    }
    return out;
}

fs::path resolve_out_root(const ExperimentConfig& cfg, const RunOptions& opts)
{
    if (!opts.out_root.empty()) {
        return opts.out_root;
    }
    if (!cfg.out_dir.empty()) {
        return cfg.out_dir;
    }
    return default_out_root();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts)
{
    cfg.validate();
    const auto environment = env::make_environment(cfg.env);
    const std::vector<env::Transition> offline = offline_data(cfg, *environment);
    std::vector<env::Transition> inject;
    if (cfg.inject.enabled) {
        inject = env::generate_dataset(*environment, cfg.inject.quality, cfg.inject.seed);
        if (cfg.dataset.reward_transform) {
            env::apply_sparse_reward_transform(inject);
        }
    }

    ExperimentReport report;
    report.name = cfg.name;
    report.dir = resolve_out_root(cfg, opts) / cfg.name;
    if (opts.write_files) {
        std::error_code ec;
        fs::create_directories(report.dir, ec);
        if (ec) {
            throw ConfigError(report.dir.string() + ": " + ec.message());
        }
        write_text(report.dir / "config.json", to_json(cfg).dump(2) + "\n");
    }

    std::vector<Job> jobs;
    for (const auto& arm : cfg.arms) {
        for (auto seed : cfg.seeds) {
            jobs.push_back(Job{&arm, seed});
        }
    }
    report.runs.resize(jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto log = [&](const std::string& line) {
        if (opts.log) {
            std::lock_guard<std::mutex> lock(log_mutex);
            opts.log(line);
        }
    };

    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            RunRecord& rec = report.runs[i];
            rec.arm = job.arm->name;
            rec.seed = job.seed;
            rec.run_id = rec.arm + "/seed-" + std::to_string(job.seed);
            rec.code_version = code_version();
            rec.config_hash = run_hash(cfg, *job.arm, job.seed);
            const agent::Ro2oConfig acfg = cfg.arm_agent(*job.arm);
            rec.q_bound = q_bound(environment->spec(), acfg.gamma);
            if (opts.write_files) {
                rec.dir = report.dir / rec.arm / ("seed-" + std::to_string(job.seed));
                fs::create_directories(rec.dir);
            }

            const auto t0 = std::chrono::steady_clock::now();
            log("start " + rec.run_id);
            try {
                JsonlSink sink(opts.write_files ? rec.dir / "metrics.jsonl" : fs::path{}, rec.run_id);
                agent::TrainerOptions topts;
                topts.eval = {cfg.eval.offline_interval, cfg.eval.online_interval, cfg.eval.episodes, cfg.eval.seed};
                topts.reward_transform = cfg.dataset.reward_transform;
                topts.inject = inject;
                topts.log_every = cfg.log_every;
                const auto run_env = env::make_environment(cfg.env);
                agent::Trainer trainer(acfg, *run_env, offline, job.seed, topts, &sink);
                rec.result = trainer.run(cfg.t1, cfg.t2);
                if (opts.write_files && opts.write_checkpoints) {
                    // Aborted runs keep their last state for inspection.
                    ad::Checkpoint ck = trainer.checkpoint();
                    ck.strings["config_hash"] = rec.config_hash;
                    ck.strings["code_version"] = rec.code_version;
                    ck.strings["run_id"] = rec.run_id;
                    ck.strings["status"] = rec.result.aborted ? "aborted: " + rec.result.abort_reason : "ok";
                    ad::save_checkpoint(ck, rec.dir / "checkpoint.bin");
                }
            } catch (const std::exception& e) {
                rec.result.aborted = true;
                rec.result.abort_reason = e.what();
            }
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (opts.write_files) {
                write_text(rec.dir / "eval.csv", eval_csv(rec.result.evals));
            }
            char buf[256];
            std::snprintf(buf, sizeof(buf), "done  %s offline=%.2f online=%.2f max|Q|=%.3g %.1fs%s",
                          rec.run_id.c_str(), rec.result.offline_final, rec.result.online_final,
                          rec.result.max_abs_q, rec.seconds, rec.result.aborted ? " ABORTED" : "");
            log(buf);
        }
    };

    const int n_workers = std::max(1, std::min<int>(opts.jobs, static_cast<int>(jobs.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    if (opts.write_files) {
        Json s = report.summary(cfg.drop_k);
        s["config_hash"] = config_hash(cfg);
        write_text(report.dir / "summary.json", s.dump(2) + "\n");
    }
    return report;
}

std::string ablation_csv(const ExperimentReport& report, int drop_k)
{
    std::string out = "cell,seed,offline_score,online_score,drop,max_abs_q,diverged\n";
    char buf[256];
    for (const auto& r : report.runs) {
        std::snprintf(buf, sizeof(buf), "%s,%llu,%.6f,%.6f,%.6f,%.6g,%d\n", r.arm.c_str(),
                      static_cast<unsigned long long>(r.seed), r.result.offline_final, r.result.online_final,
                      r.drop(drop_k), r.result.max_abs_q, r.diverged() ? 1 : 0);
        out += buf;
    }
    return out;
}

ExperimentReport run_ablation(const ExperimentConfig& cfg, const RunOptions& opts)
{
    ExperimentReport report = run_experiment(cfg, opts);
    if (opts.write_files) {
        write_text(report.dir / "ablation.csv", ablation_csv(report, cfg.drop_k));
    }
    return report;
}

linmdp::TheorySuiteResult run_theory(std::uint64_t seed, const fs::path& out_root)
{
    linmdp::TheorySuiteResult res = linmdp::run_theory_suite(seed);
    if (!out_root.empty()) {
        const fs::path dir = out_root / "theory";
        fs::create_directories(dir);
        write_text(dir / "report.json", res.to_json() + "\n");
    }
    return res;
}

}  // namespace ro2o::exp
