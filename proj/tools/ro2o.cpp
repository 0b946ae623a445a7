// ro2o: command-line front end for training runs, ablations, theory checks,
// dataset generation and checkpoint tooling.

#include "ro2o/agent/gaussian_policy.hpp"
#include "ro2o/agent/trainer.hpp"
#include "ro2o/env/dataset.hpp"
#include "ro2o/env/evaluate.hpp"
#include "ro2o/exp/runner.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace ro2o;
namespace fs = std::filesystem;

struct CommonFlags {
    std::string config;
    std::string preset;
    std::string seeds;
    std::string out;
    std::int64_t t1 = -1;
    std::int64_t t2 = -1;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--preset", f.preset, "named preset (see `ro2o presets`)");
    cmd->add_option("--seeds", f.seeds, "comma-separated seed list, e.g. 0,1,2");
    cmd->add_option("--out", f.out, "output root (default $RO2O_OUT_DIR or ./runs)");
    cmd->add_option("--t1", f.t1, "offline gradient steps");
    cmd->add_option("--t2", f.t2, "online environment steps");
    cmd->add_option("--jobs", f.jobs, "worker threads, one run per worker")->check(CLI::PositiveNumber);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) {
            throw exp::ConfigError("--seeds: '" + item + "' is not a non-negative integer");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw exp::ConfigError("--seeds: empty list");
    }
    return out;
}

exp::ExperimentConfig resolve(const CommonFlags& f)
{
    if (!f.config.empty() && !f.preset.empty()) {
        throw exp::ConfigError("--config and --preset are mutually exclusive");
    }
    exp::ExperimentConfig cfg;
    if (!f.config.empty()) {
        cfg = exp::load_config(f.config);
    } else if (!f.preset.empty()) {
        cfg = exp::preset(f.preset);
    }
    if (!f.seeds.empty()) {
        cfg.seeds = parse_seeds(f.seeds);
    }
    if (f.t1 >= 0) {
        cfg.t1 = f.t1;
    }
    if (f.t2 >= 0) {
        cfg.t2 = f.t2;
    }
    if (!f.out.empty()) {
        cfg.out_dir = f.out;
    }
    cfg.validate();
    return cfg;
}

exp::RunOptions run_options(const CommonFlags& f)
{
    exp::RunOptions o;
    o.jobs = f.jobs;
    o.log = [](const std::string& line) { std::cerr << line << '\n'; };
    return o;
}

int report_runs(const exp::ExperimentReport& report, int drop_k)
{
    std::cout << report.summary(drop_k).dump(2) << '\n';
    std::cerr << "outputs in " << report.dir.string() << '\n';
    return report.any_aborted() ? exp::kExitTraining : exp::kExitOk;
}

int cmd_theory(const CommonFlags& f)
{
    std::uint64_t seed = 1;
    if (!f.seeds.empty()) {
        seed = parse_seeds(f.seeds).front();
    } else if (!f.preset.empty() || !f.config.empty()) {
        seed = resolve(f).seeds.front();
    }
    const fs::path root = f.out.empty() ? exp::default_out_root() : fs::path(f.out);
    const auto res = exp::run_theory(seed, root);
    std::cout << res.to_json() << '\n';
    for (const auto& r : res.reports) {
        if (!r.passed()) {
            std::cerr << "theory check failed: " << r.check << '\n';
        }
    }
    return res.passed() ? exp::kExitOk : exp::kExitTheory;
}

int cmd_run(const CommonFlags& f, bool ablate)
{
    if (exp::is_theory_preset(f.preset)) {
        return cmd_theory(f);
    }
    if (f.config.empty() && f.preset.empty()) {
        throw exp::ConfigError("one of --config or --preset is required");
    }
    const auto cfg = resolve(f);
    const auto opts = run_options(f);
    const auto report = ablate ? exp::run_ablation(cfg, opts) : exp::run_experiment(cfg, opts);
    if (ablate) {
        std::cout << exp::ablation_csv(report, cfg.drop_k);
        std::cerr << "outputs in " << report.dir.string() << '\n';
        return report.any_aborted() ? exp::kExitTraining : exp::kExitOk;
    }
    return report_runs(report, cfg.drop_k);
}

int cmd_gen_data(const CommonFlags& f, const std::string& file)
{
    const auto cfg = resolve(f);
    const auto environment = env::make_environment(cfg.env);
    env::Dataset ds;
    ds.transitions = exp::offline_data(cfg, *environment);
    ds.header.env_name = cfg.env;
    ds.header.state_dim = environment->spec().state_dim;
    ds.header.action_dim = environment->spec().action_dim;
    ds.header.count = ds.transitions.size();
    ds.header.tier = std::string(env::to_string(cfg.dataset.quality.tier));
    ds.header.seed = cfg.dataset.seed;
    fs::path path = file;
    if (path.empty()) {
        path = exp::resolve_out_root(cfg, {}) / cfg.name / "dataset.bin";
    }
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    env::save_dataset(ds, path);
    std::cout << path.string() << ": " << ds.transitions.size() << " transitions\n";
    return exp::kExitOk;
}

int cmd_eval(const std::string& path, int episodes, std::uint64_t seed)
{
    const auto ckpt = ad::load_checkpoint(path);
    const auto env_it = ckpt.strings.find("env");
    if (env_it == ckpt.strings.end()) {
        throw ad::CheckpointError("checkpoint does not name its environment");
    }
    const auto environment = env::make_environment(env_it->second);
    const auto policy = agent::GaussianPolicy::restore(ckpt);
    const auto norm = agent::load_normalizer(ckpt);
    const env::PolicyFn fn = [&](const env::Vector& x, env::Rng&) {
        agent::Matrix row(1, x.size());
        row.row(0) = norm.normalize(x).transpose();
        return env::Vector(policy.mean_action(row).row(0).transpose());
    };
    const auto r = env::evaluate_policy(fn, *environment, episodes, seed);
    exp::Json j;
    j["checkpoint"] = path;
    j["env"] = env_it->second;
    j["episodes"] = r.episodes;
    j["mean_return"] = r.mean_return;
    j["norm_score"] = r.normalized_score;
    j["std"] = r.std_return;
    std::cout << j.dump(2) << '\n';
    return exp::kExitOk;
}

int cmd_inspect(const std::string& path)
{
    const auto ckpt = ad::load_checkpoint(path);
    exp::Json j;
    j["file"] = path;
    exp::Json nets = exp::Json::object();
    for (const auto& [name, net] : ckpt.networks) {
        nets[name] = {{"layers", net.layer_dims()},
                      {"activation", std::string(ad::to_string(net.activation()))},
                      {"parameters", net.parameter_count()}};
    }
    exp::Json mats = exp::Json::object();
    for (const auto& [name, m] : ckpt.matrices) {
        mats[name] = {m.rows(), m.cols()};
    }
    j["networks"] = nets;
    j["matrices"] = mats;
    j["strings"] = ckpt.strings;
    std::cout << j.dump(2) << '\n';
    return exp::kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ro2o: robust offline-to-online RL lab"};
    app.require_subcommand(1);

    CommonFlags run_f, ablate_f, theory_f, gen_f;
    auto* run = app.add_subcommand("run", "train every arm x seed of a config");
    add_common(run, run_f);
    auto* ablate = app.add_subcommand("ablate", "run an ablation grid and write ablation.csv");
    add_common(ablate, ablate_f);
    auto* theory = app.add_subcommand("theory", "run the linear-MDP theory checks");
    add_common(theory, theory_f);

    auto* gen = app.add_subcommand("gen-data", "write the offline dataset of a config (.csv or binary)");
    add_common(gen, gen_f);
    std::string gen_file;
    gen->add_option("--file", gen_file, "dataset path (default <out>/<name>/dataset.bin)");

    auto* eval = app.add_subcommand("eval", "evaluate the greedy policy of a checkpoint");
    std::string eval_path;
    int eval_episodes = 10;
    std::uint64_t eval_seed = 20240601;
    eval->add_option("checkpoint", eval_path, "checkpoint file")->required();
    eval->add_option("--episodes", eval_episodes, "evaluation episodes")->check(CLI::PositiveNumber);
    eval->add_option("--seed", eval_seed, "start-state seed");

    auto* inspect = app.add_subcommand("inspect-checkpoint", "print the blocks of a checkpoint");
    std::string inspect_path;
    inspect->add_option("checkpoint", inspect_path, "checkpoint file")->required();

    auto* presets = app.add_subcommand("presets", "list preset names or dump one as JSON");
    std::string preset_name;
    presets->add_option("name", preset_name, "preset to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exp::kExitOk : exp::kExitConfig;
    }

    try {
        if (*run) {
            return cmd_run(run_f, false);
        }
        if (*ablate) {
            return cmd_run(ablate_f, true);
        }
        if (*theory) {
            return cmd_theory(theory_f);
        }
        if (*gen) {
            return cmd_gen_data(gen_f, gen_file);
        }
        if (*eval) {
            return cmd_eval(eval_path, eval_episodes, eval_seed);
        }
        if (*inspect) {
            return cmd_inspect(inspect_path);
        }
        if (*presets) {
            if (preset_name.empty()) {
                for (const auto& n : exp::preset_names()) {
                    std::cout << n << '\n';
                }
            } else {
                std::cout << exp::to_json(exp::preset(preset_name)).dump(2) << '\n';
            }
            return exp::kExitOk;
        }
    } catch (const exp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exp::kExitConfig;
    } catch (const ad::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return exp::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exp::kExitTraining;
    }
    return exp::kExitOk;
}
