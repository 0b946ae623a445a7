#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ro2o/exp/runner.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

using namespace ro2o;
using namespace ro2o::exp;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("ro2o_test_exp_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ExperimentConfig tiny(const std::string& base = "pointmass-expert")
{
    ExperimentConfig cfg = preset(base);
    cfg.dataset.quality.episodes = 3;
    cfg.agent.n_critics = 2;
    cfg.agent.hidden = {8, 8};
    cfg.agent.batch_size = 16;
    cfg.agent.n_perturb = 2;
    cfg.t1 = 60;
    cfg.t2 = 40;
    cfg.eval = {30, 20, 2, 5};
    cfg.log_every = 10;
    cfg.drop_k = 2;
    return cfg;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(RO2O_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("every preset validates and round-trips through JSON")
{
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const ExperimentConfig cfg = preset(name);
        const Json j = to_json(cfg);
        const ExperimentConfig back = from_json(j);
        CHECK(canonical_dump(back) == canonical_dump(cfg));
        CHECK(config_hash(back) == config_hash(cfg));
        CHECK(to_json(back).dump() == j.dump());
    }
}

TEST_CASE("config file round trip")
{
    const fs::path dir = scratch("roundtrip");
    const ExperimentConfig cfg = preset("shift-inject");
    write_text(dir / "c.json", to_json(cfg).dump(2));
    const ExperimentConfig back = load_config(dir / "c.json");
    CHECK(to_json(back).dump(2) == file_bytes(dir / "c.json"));
    fs::remove_all(dir);
}

TEST_CASE("presets use the hyperparameter vocabulary")
{
    const std::set<std::string> vocab{"eta1", "eta2", "eta3", "eps_q", "eps_p", "eps_ood", "tau", "n", "alpha",
                                      "beta_bc", "policy_objective"};
    for (const auto& name : preset_names()) {
        if (is_theory_preset(name)) {
            continue;
        }
        const Json agent = to_json(preset(name))["agent"];
        for (const auto& key : vocab) {
            CAPTURE(name);
            CAPTURE(key);
            CHECK(agent.contains(key));
        }
    }
}

TEST_CASE("unknown keys and bad values are config errors")
{
    Json j = to_json(preset("pointmass-expert"));
    j["agent"]["eta7"] = 1.0;
    CHECK_THROWS_AS((void)from_json(j), ConfigError);

    j = to_json(preset("pointmass-expert"));
    j["agent"]["eta1"] = -1.0;
    CHECK_THROWS_AS((void)from_json(j), ConfigError);

    j = to_json(preset("pointmass-expert"));
    j["seeds"] = Json::array();
    CHECK_THROWS_AS((void)from_json(j), ConfigError);

    CHECK_THROWS_AS((void)preset("no-such-preset"), ConfigError);
    CHECK_THROWS_AS((void)from_json(Json{{"preset", "no-such-preset"}}), ConfigError);
}

TEST_CASE("partial configs inherit from the named preset")
{
    const Json j{{"preset", "ablation-no-qsmooth"}, {"t1", 123}, {"agent", {{"eta3", 0.5}}}};
    const ExperimentConfig cfg = from_json(j);
    const ExperimentConfig base = preset("ablation-no-qsmooth");
    CHECK(cfg.t1 == 123);
    CHECK(cfg.agent.eta_policy_smooth == 0.5);
    CHECK(cfg.agent.eta_q_smooth == base.agent.eta_q_smooth);
    CHECK(cfg.arms.size() == base.arms.size());
}

TEST_CASE("config hash follows the resolved config")
{
    ExperimentConfig a = preset("pointmass-medium");
    ExperimentConfig b = preset("pointmass-medium");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.agent.eta_ood += 0.01;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("fan-out writes one record and one CSV per seed")
{
    const fs::path dir = scratch("fanout");
    ExperimentConfig cfg = tiny();
    cfg.seeds = {1, 2, 3};
    RunOptions opts;
    opts.jobs = 2;
    opts.out_root = dir;
    const auto report = run_experiment(cfg, opts);
    CHECK(report.runs.size() == 3);
    CHECK_FALSE(report.any_aborted());
    int csvs = 0;
    for (const auto& run : report.runs) {
        CHECK(fs::exists(run.dir / "metrics.jsonl"));
        CHECK(fs::exists(run.dir / "checkpoint.bin"));
        csvs += fs::exists(run.dir / "eval.csv") ? 1 : 0;
        const std::string csv = file_bytes(run.dir / "eval.csv");
        CHECK(csv.rfind("step,phase,mean_return,norm_score,std\n", 0) == 0);
    }
    CHECK(csvs == 3);
    CHECK(fs::exists(report.dir / "summary.json"));
    const Json summary = Json::parse(file_bytes(report.dir / "summary.json"));
    CHECK(summary.dump().find("drop") != std::string::npos);
    CHECK(report.find("ro2o", 2).seed == 2);
    fs::remove_all(dir);
}

TEST_CASE("same config and seed give identical CSV bytes")
{
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    ExperimentConfig cfg = tiny("shift-inject");
    cfg.seeds = {4};
    RunOptions opts;
    opts.out_root = a;
    const auto ra = run_ablation(cfg, opts);
    opts.out_root = b;
    opts.jobs = 2;
    const auto rb = run_ablation(cfg, opts);
    REQUIRE(ra.runs.size() == rb.runs.size());
    for (std::size_t i = 0; i < ra.runs.size(); ++i) {
        CHECK(file_bytes(ra.runs[i].dir / "eval.csv") == file_bytes(rb.runs[i].dir / "eval.csv"));
    }
    CHECK(file_bytes(ra.dir / "ablation.csv") == file_bytes(rb.dir / "ablation.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("ablation table has one row per cell and seed")
{
    const fs::path dir = scratch("ablate");
    ExperimentConfig cfg = tiny("ablation-no-ood");
    cfg.seeds = {1, 2};
    RunOptions opts;
    opts.out_root = dir;
    const auto report = run_ablation(cfg, opts);
    const std::string csv = file_bytes(report.dir / "ablation.csv");
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "cell,seed,offline_score,online_score,drop,max_abs_q,diverged");
    int rows = 0;
    for (std::string line; std::getline(lines, line);) {
        ++rows;
    }
    CHECK(rows == static_cast<int>(cfg.arms.size() * cfg.seeds.size()));
    fs::remove_all(dir);
}

TEST_CASE("an empty grid gives an empty table")
{
    const fs::path dir = scratch("empty");
    ExperimentConfig cfg = tiny();
    cfg.arms.clear();
    RunOptions opts;
    opts.out_root = dir;
    const auto report = run_ablation(cfg, opts);
    CHECK(report.runs.empty());
    CHECK_FALSE(report.any_aborted());
    CHECK(ablation_csv(report, cfg.drop_k) == "cell,seed,offline_score,online_score,drop,max_abs_q,diverged\n");
    fs::remove_all(dir);
}

TEST_CASE("output root comes from the environment when unset")
{
    ::setenv(kOutDirEnv, "/tmp/ro2o_env_root", 1);
    CHECK(default_out_root() == fs::path("/tmp/ro2o_env_root"));
    ::unsetenv(kOutDirEnv);
    CHECK(default_out_root() == fs::path("runs"));
}

TEST_CASE("eval csv formatting")
{
    agent::EvalRecord r;
    r.step = 500;
    r.phase = agent::Phase::Online;
    r.mean_return = -20.5;
    r.normalized_score = 97.25;
    r.std_return = 1.5;
    CHECK(eval_csv({r}) == "step,phase,mean_return,norm_score,std\n500,online,-20.500000,97.250000,1.500000\n");
}

TEST_CASE("CLI exit codes")
{
    const fs::path dir = scratch("cli");
    const std::string out = " --out " + dir.string();
    CHECK(run_cli("presets") == 0);
    CHECK(run_cli("run --preset no-such-preset" + out) == 1);
    write_text(dir / "bad.json", "{\"preset\": \"pointmass-expert\", \"t1\": \"many\"}");
    CHECK(run_cli("run --config " + (dir / "bad.json").string() + out) == 1);
    write_text(dir / "broken.json", "{ not json");
    CHECK(run_cli("run --config " + (dir / "broken.json").string() + out) == 1);
    CHECK(run_cli("inspect-checkpoint " + (dir / "missing.bin").string()) == 1);

    const Json fault{{"preset", "pointmass-expert"},
                     {"t1", 50},
                     {"t2", 0},
                     {"eval", {{"offline_interval", 50}, {"online_interval", 50}, {"episodes", 1}, {"seed", 1}}},
                     {"agent", {{"lr_critic", 1e200}, {"lr_actor", 1e200}, {"hidden", {8}}, {"n_critics", 2}}}};
    write_text(dir / "fault.json", fault.dump());
    CHECK(run_cli("run --config " + (dir / "fault.json").string() + " --seeds 1" + out) == 2);

    CHECK(run_cli("theory" + out) == 0);
    CHECK(fs::exists(dir / "theory" / "report.json"));
    CHECK(run_cli("gen-data --preset pointmass-medium --file " + (dir / "d.csv").string() + out) == 0);
    CHECK(fs::exists(dir / "d.csv"));
    fs::remove_all(dir);
}
