#include "ro2o/exp/config.hpp"

#include <algorithm>
#include <cstdio>

namespace ro2o::exp {
namespace {

// Desk-scale networks: a run of 60k steps fits in a few minutes on one core.
agent::Ro2oConfig desk_agent()
{
    agent::Ro2oConfig a;
    a.n_critics = 10;
    a.hidden = {32, 32};
    a.batch_size = 128;
    a.n_perturb = 5;
    a.eps_q = 0.01;
    a.eps_p = 0.01;
    a.eps_ood = 0.01;
    a.eta_q_smooth = 1e-4;
    a.eta_policy_smooth = 0.1;
    a.eta_ood = 0.1;
    a.alpha = {1.0, 0.1, 1e-5};
    return a;
}

ExperimentConfig pointmass(env::QualityTier tier, const std::string& name)
{
    ExperimentConfig c;
    c.name = name;
    c.env = "PointMass2D";
    c.dataset.quality = {tier, 0.1, 50};
    c.dataset.seed = 7;
    c.agent = desk_agent();
    c.t1 = 50000;
    c.t2 = 10000;
    c.eval = {5000, 500, 10, 20240601};
    return c;
}

ExperimentConfig sparsemaze(env::QualityTier tier, const std::string& name)
{
    ExperimentConfig c;
    c.name = name;
    c.env = "SparseMaze2D";
    c.dataset.quality = {tier, 0.2, 100};
    c.dataset.seed = 11;
    c.dataset.reward_transform = true;
    c.agent = desk_agent();
    c.agent.target_offline = critic::TargetMode::Independent;
    c.agent.target_online = critic::TargetMode::Independent;
    c.t1 = 50000;
    c.t2 = 10000;
    return c;
}

Json no_ood() { return {{"eta2", 0.0}, {"alpha", {{"start", 0.0}, {"end", 0.0}, {"rate", 0.0}}}}; }

ExperimentConfig make(const std::string& name)
{
    using env::QualityTier;
    if (name == "pointmass-expert") {
        return pointmass(QualityTier::Expert, name);
    }
    if (name == "pointmass-medium") {
        return pointmass(QualityTier::Medium, name);
    }
    if (name == "pointmass-medium-replay") {
        return pointmass(QualityTier::MediumReplayMix, name);
    }
    if (name == "sparsemaze-play") {
        return sparsemaze(QualityTier::Medium, name);
    }
    if (name == "sparsemaze-diverse") {
        return sparsemaze(QualityTier::MediumReplayMix, name);
    }
    if (name == "shift-inject") {
        ExperimentConfig c = pointmass(QualityTier::Expert, name);
        c.inject.enabled = true;
        c.inject.quality = {QualityTier::MixedShift, 0.3, 40};
        c.inject.seed = 13;
        c.agent.online_regime = data::BufferRegime::DiscardOffline;
        Json variant = no_ood();
        variant["eta1"] = 0.0;
        variant["eta3"] = 0.0;
        c.arms = {Arm{"ro2o", Json::object()}, Arm{"no-smooth-no-ood", variant}};
        return c;
    }
    if (name == "ablation-no-ood") {
        // A small ReLU ensemble on a thin dataset, so the unpenalised arm can blow up.
        ExperimentConfig c = pointmass(QualityTier::Medium, name);
        c.dataset.quality.episodes = 10;
        c.agent.n_critics = 2;
        c.agent.activation = ad::Activation::Relu;
        c.agent.target_offline = critic::TargetMode::Independent;
        c.agent.target_online = critic::TargetMode::Independent;
        c.t2 = 0;
        c.arms = {Arm{"ro2o", Json::object()}, Arm{"no-ood", no_ood()}};
        return c;
    }
    if (name == "ablation-no-psmooth") {
        ExperimentConfig c = pointmass(QualityTier::Medium, name);
        c.arms = {Arm{"ro2o", Json::object()}, Arm{"no-psmooth", {{"eta3", 0.0}}}};
        return c;
    }
    if (name == "ablation-no-qsmooth") {
        // eta1 large enough to show against seed noise in Q sensitivity.
        ExperimentConfig c = pointmass(QualityTier::Medium, name);
        c.agent.eta_q_smooth = 100.0;
        c.arms = {Arm{"ro2o", Json::object()}, Arm{"no-qsmooth", {{"eta1", 0.0}}}};
        return c;
    }
    if (name == "sweep-eta") {
        ExperimentConfig c = pointmass(QualityTier::Medium, name);
        c.arms.clear();
        for (double eta2 : {0.0, 0.1, 0.5}) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "eta2=%g", eta2);
            c.arms.push_back(Arm{buf, {{"eta2", eta2}}});
        }
        return c;
    }
    if (name == "theory-suite") {
        ExperimentConfig c;
        c.name = name;
        c.seeds = {1};
        return c;
    }
    throw ConfigError("preset: unknown name '" + name + "'");
}

}  // namespace

const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names = {
        "pointmass-expert",   "pointmass-medium",    "pointmass-medium-replay", "sparsemaze-play",
        "sparsemaze-diverse", "shift-inject",        "ablation-no-ood",         "ablation-no-psmooth",
        "ablation-no-qsmooth", "sweep-eta",          "theory-suite",
    };
    return names;
}

ExperimentConfig preset(const std::string& name)
{
    ExperimentConfig c = make(name);
    c.validate();
    return c;
}

bool is_theory_preset(const std::string& name) { return name == "theory-suite"; }

}  // namespace ro2o::exp
