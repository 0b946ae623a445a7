// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Pass criterion numbers to run a subset.

#include "fd_check.hpp"
#include "ro2o/agent/trainer.hpp"
#include "ro2o/data/perturbation.hpp"
#include "ro2o/exp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace ro2o;
using agent::Index;
using agent::Matrix;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

fs::path out_root()
{
    const fs::path p = fs::temp_directory_path() / "ro2o_acceptance";
    fs::create_directories(p);
    return p;
}

exp::RunOptions run_options(const std::string& tag)
{
    exp::RunOptions o;
    o.out_root = out_root() / tag;
    fs::remove_all(o.out_root);
    o.log = [](const std::string& line) { std::fprintf(stderr, "  %s\n", line.c_str()); };
    return o;
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

std::string file_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed)
{
    agent::Rng rng(seed);
    std::normal_distribution<double> g;
    Matrix m(r, c);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = g(rng);
    }
    return m;
}

// ---- 1 ---------------------------------------------------------------------

Verdict theory()
{
    const auto res = linmdp::run_theory_suite(1);
    bool ok = res.passed() && res.seconds < 60.0;
    const auto need = [&](const std::string& name, std::int64_t trials) {
        for (const auto& r : res.reports) {
            if (r.check == name) {
                ok = ok && r.trials >= trials && r.violations == 0;
                return;
            }
        }
        ok = false;
    };
    need("lemma1", 100);
    need("lemma1-negative", 1);
    need("theorem1", 1000);
    need("theorem2", 2000);
    need("lemma2", 20);
    need("tabular-gamma", 1);
    std::string detail = std::to_string(res.reports.size()) + " checks, " + fmt("%.1f s", res.seconds);
    for (const auto& r : res.reports) {
        if (!r.passed()) {
            detail += ", failing " + r.check;
        }
    }
    return {ok, detail};
}

// ---- 2 ---------------------------------------------------------------------

Verdict gradients()
{
    double worst_td = 0.0, worst_qs = 0.0, worst_ood = 0.0, worst_pi = 0.0;
    for (std::uint64_t inst = 0; inst < 10; ++inst) {
        const critic::EnsembleCritic c(8, 2, {3, {6}, ad::Activation::Tanh, 1.0}, 100 + inst);
        const agent::GaussianPolicy pi(8, 2, {{6}, ad::Activation::Tanh, -5.0, 2.0}, 200 + inst);
        data::Batch batch;
        batch.states = random_matrix(4, 8, 300 + inst);
        batch.actions = random_matrix(4, 2, 310 + inst).array().tanh();
        batch.rewards = random_matrix(4, 1, 320 + inst);
        batch.next_states = random_matrix(4, 8, 330 + inst);
        batch.not_terminal = Matrix::Ones(4, 1);

        agent::Ro2oConfig cfg;
        cfg.eta_q_smooth = 0.0;
        cfg.eta_ood = 0.0;
        const auto td = [&] {
            agent::Rng rng(inst);
            return agent::critic_loss(c, pi, batch, cfg, agent::Phase::Offline, 0.0, 0.1, rng).td;
        };
        worst_td = std::max(worst_td, testing::max_gradient_error(c.parameters(), td));

        agent::Rng crng(inst);
        const Matrix cands = data::sample_perturbations(batch.states, {0.1, 5}, crng);
        const auto qs = [&] {
            return agent::q_smooth_loss_from_candidates(c, batch.states, batch.actions, cands, 5, 0.2, false,
                                                        nullptr);
        };
        worst_qs = std::max(worst_qs, testing::max_gradient_error(c.parameters(), qs));

        // The pseudo-target is a constant, so differentiate with it frozen.
        const Matrix s_hat = random_matrix(4, 8, 340 + inst);
        const Matrix a_hat = random_matrix(4, 2, 350 + inst).array().tanh();
        Matrix target = c.q_values(s_hat, a_hat);
        target.colwise() -= 0.7 * critic::uncertainty(target).col(0);
        const auto ood = [&] {
            const auto q = c.q_all(ad::Tensor::constant(s_hat), ad::Tensor::constant(a_hat));
            return ad::mean(ad::square(ad::sub(ad::Tensor::constant(target), q)));
        };
        worst_ood = std::max(worst_ood, testing::max_gradient_error(c.parameters(), ood));

        agent::Ro2oConfig pcfg;
        pcfg.eta_policy_smooth = 0.5;
        pcfg.eps_p = 0.1;
        pcfg.n_perturb = 4;
        pcfg.bc_offline = 2.0;
        const auto pl = [&] {
            agent::Rng rng(inst);
            return agent::policy_loss(pi, c, batch, pcfg, agent::Phase::Offline, 0.2, rng).total;
        };
        worst_pi = std::max(worst_pi, testing::max_gradient_error(pi.parameters(), pl));
    }
    const double worst = std::max({worst_td, worst_qs, worst_ood, worst_pi});
    return {worst <= 1e-4, "max rel err td " + fmt("%.1e", worst_td) + ", qsmooth " + fmt("%.1e", worst_qs) +
                               ", ood " + fmt("%.1e", worst_ood) + ", policy " + fmt("%.1e", worst_pi)};
}

// ---- 3 ---------------------------------------------------------------------

Verdict uncertainty()
{
    const double two = critic::uncertainty(std::vector<double>{1.0, 3.0});
    const double four = critic::uncertainty(std::vector<double>{0.0, 0.0, 0.0, 4.0});
    bool ok = two == 1.0 && std::abs(four - std::sqrt(3.0)) <= 4.0 * std::numeric_limits<double>::epsilon();
    agent::Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> q(3 + static_cast<std::size_t>(t % 8));
        std::normal_distribution<double> g(0.0, 10.0);
        for (auto& v : q) {
            v = g(rng);
        }
        const double base = critic::uncertainty(q);
        std::shuffle(q.begin(), q.end(), rng);
        worst = std::max(worst, std::abs(critic::uncertainty(q) - base) / std::max(base, 1e-300));
    }
    ok = ok && worst <= 1e-12;
    return {ok, "{1,3} -> " + fmt("%.17g", two) + ", {0,0,0,4} -> " + fmt("%.17g", four) +
                    ", permutation rel diff " + fmt("%.1e", worst)};
}

// ---- 4 ---------------------------------------------------------------------

Verdict no_drop()
{
    exp::ExperimentConfig cfg = exp::preset("pointmass-expert");
    cfg.t1 = 50000;
    cfg.t2 = 10000;
    const auto rep = exp::run_experiment(cfg, run_options("no-drop"));
    bool ok = rep.runs.size() == 3;
    std::string detail;
    for (const auto& r : rep.runs) {
        const auto& res = r.result;
        const bool seed_ok = !res.aborted && r.drop(5) >= 0.9 && res.online_final >= res.offline_final &&
                             r.seconds <= 600.0;
        ok = ok && seed_ok;
        detail += "seed " + std::to_string(r.seed) + ": off " + fmt("%.2f", res.offline_final) + " drop " +
                  fmt("%.3f", r.drop(5)) + " on " + fmt("%.2f", res.online_final) + " " + fmt("%.0fs", r.seconds) +
                  "; ";
    }
    return {ok, detail};
}

// ---- 5 ---------------------------------------------------------------------

Verdict shift_inject()
{
    const exp::ExperimentConfig cfg = exp::preset("shift-inject");
    const auto rep = exp::run_experiment(cfg, run_options("shift-inject"));
    const std::string variant = cfg.arms.at(1).name;
    bool milder = true;
    bool ro2o_recovers = true;
    int variant_stuck = 0;
    std::string detail;
    for (auto seed : cfg.seeds) {
        const auto& a = rep.find("ro2o", seed);
        const auto& b = rep.find(variant, seed);
        milder = milder && !a.result.aborted && a.drop(cfg.drop_k) > b.drop(cfg.drop_k);
        ro2o_recovers = ro2o_recovers && a.recovered();
        variant_stuck += b.recovered() ? 0 : 1;
        detail += "seed " + std::to_string(seed) + ": drop " + fmt("%.3f", a.drop(cfg.drop_k)) + " vs " +
                  fmt("%.3f", b.drop(cfg.drop_k)) + (a.recovered() ? " R" : " -") + (b.recovered() ? "R" : "-") +
                  "; ";
    }
    return {milder && ro2o_recovers && variant_stuck >= 2, detail};
}

// ---- 6 ---------------------------------------------------------------------

Verdict divergence()
{
    exp::ExperimentConfig cfg = exp::preset("ablation-no-ood");
    cfg.t2 = 0;
    const auto rep = exp::run_ablation(cfg, run_options("divergence"));
    const std::string variant = cfg.arms.at(1).name;
    int diverged = 0;
    int bounded = 0;
    std::string detail;
    for (auto seed : cfg.seeds) {
        const auto& a = rep.find("ro2o", seed);
        const auto& b = rep.find(variant, seed);
        diverged += b.result.max_abs_q > 10.0 * b.q_bound ? 1 : 0;
        bounded += !a.result.aborted && a.result.max_abs_q <= 2.0 * a.q_bound ? 1 : 0;
        detail += "seed " + std::to_string(seed) + ": " + fmt("%.0f", a.result.max_abs_q) + " vs " +
                  fmt("%.0f", b.result.max_abs_q) + "; ";
    }
    const double bound = rep.runs.empty() ? 0.0 : rep.runs.front().q_bound;
    detail += "bound " + fmt("%.1f", bound);
    return {diverged >= 2 && bounded == static_cast<int>(cfg.seeds.size()), detail};
}

// ---- 7 ---------------------------------------------------------------------

double sensitivity(const exp::ExperimentConfig& cfg, const exp::RunRecord& run)
{
    const auto ck = ad::load_checkpoint(run.dir / "checkpoint.bin");
    const auto env = env::make_environment(cfg.env);
    const auto norm = agent::load_normalizer(ck);
    const auto critic = critic::EnsembleCritic::restore(ck, env->spec().state_dim, env->spec().action_dim);
    const auto data = exp::offline_data(cfg, *env);
    std::vector<env::Transition> probe(data.begin(), data.begin() + std::min<std::ptrdiff_t>(2000, data.size()));
    const auto batch = data::make_batch(probe, norm);
    agent::Rng rng(12345);
    return agent::perturbation_sensitivity(critic, batch.states, batch.actions, cfg.agent.eps_q, 10, rng);
}

Verdict smoothness()
{
    const exp::ExperimentConfig cfg = exp::preset("ablation-no-qsmooth");
    exp::ExperimentConfig offline = cfg;
    offline.t2 = 0;
    const auto rep = exp::run_ablation(offline, run_options("smoothness"));
    const std::string twin = cfg.arms.at(1).name;
    bool ok = true;
    std::string detail;
    for (auto seed : cfg.seeds) {
        const auto& a = rep.find("ro2o", seed);
        const auto& b = rep.find(twin, seed);
        if (a.result.aborted || b.result.aborted) {
            ok = false;
            detail += "seed " + std::to_string(seed) + " aborted; ";
            continue;
        }
        const double sa = sensitivity(offline, a);
        const double sb = sensitivity(offline, b);
        ok = ok && sa < sb;
        detail += "seed " + std::to_string(seed) + ": " + fmt("%.3e", sa) + " vs " + fmt("%.3e", sb) + "; ";
    }
    return {ok, detail};
}

// ---- 8 ---------------------------------------------------------------------

Verdict determinism()
{
    bool ok = true;
    int files = 0;
    for (const auto& name : exp::preset_names()) {
        if (exp::is_theory_preset(name)) {
            continue;
        }
        exp::ExperimentConfig cfg = exp::preset(name);
        cfg.t1 = 300;
        cfg.t2 = cfg.t2 > 0 ? 200 : 0;
        cfg.eval.offline_interval = 150;
        cfg.eval.online_interval = 100;
        cfg.eval.episodes = 2;
        cfg.seeds = {cfg.seeds.front()};
        auto first_opts = run_options("determinism-a");
        auto second_opts = run_options("determinism-b");
        second_opts.log = nullptr;
        first_opts.log = nullptr;
        const auto a = exp::run_ablation(cfg, first_opts);
        const auto b = exp::run_ablation(cfg, second_opts);
        ok = ok && a.runs.size() == b.runs.size() && !a.any_aborted();
        for (std::size_t i = 0; ok && i < a.runs.size(); ++i) {
            ok = ok && file_bytes(a.runs[i].dir / "eval.csv") == file_bytes(b.runs[i].dir / "eval.csv");
            ++files;
        }
        ok = ok && file_bytes(a.dir / "ablation.csv") == file_bytes(b.dir / "ablation.csv");
        ++files;
    }
    return {ok, std::to_string(files) + " CSV files compared"};
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"theory suite", theory},
        {"gradient fidelity", gradients},
        {"uncertainty exactness", uncertainty},
        {"no drop on pointmass-expert", no_drop},
        {"shift-inject robustness", shift_inject},
        {"divergence without OOD penalty", divergence},
        {"Q smoothness effect", smoothness},
        {"CSV determinism", determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        wanted.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!wanted.empty() && wanted.count(id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %d. %s (%.0f s): %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
