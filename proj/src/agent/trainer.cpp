#include "ro2o/agent/trainer.hpp"

#include "ro2o/data/perturbation.hpp"
#include "ro2o/env/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace ro2o::agent {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

PolicyOptions policy_options(const Ro2oConfig& cfg)
{
    PolicyOptions p;
    p.hidden = cfg.hidden;
    p.activation = cfg.activation;
    p.log_std_min = cfg.log_std_min;
    p.log_std_max = cfg.log_std_max;
    return p;
}

critic::CriticOptions critic_options(const Ro2oConfig& cfg)
{
    critic::CriticOptions c;
    c.n_members = cfg.n_critics;
    c.hidden = cfg.hidden;
    c.activation = cfg.activation;
    return c;
}

ad::AdamOptions adam(double lr)
{
    ad::AdamOptions o;
    o.learning_rate = lr;
    return o;
}

}  // namespace

Ro2oAgent::Ro2oAgent(const Ro2oConfig& cfg, Index state_dim, Index action_dim, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      policy_(state_dim, action_dim, policy_options(cfg), derive_seed(seed, 1)),
      critic_(state_dim, action_dim, critic_options(cfg), derive_seed(seed, 2)),
      log_beta_(Tensor::parameter(Matrix::Constant(1, 1, std::log(cfg.beta_init)))),
      target_entropy_(cfg.target_entropy.value_or(-static_cast<double>(action_dim))),
      critic_opt_(critic_.parameters(), adam(cfg.lr_critic)),
      actor_opt_(policy_.parameters(), adam(cfg.lr_actor)),
      beta_opt_(std::vector<Tensor>{log_beta_}, adam(cfg.lr_entropy))
{
}

double Ro2oAgent::beta() const { return std::exp(log_beta_.value()(0, 0)); }

LossReport Ro2oAgent::update(const data::Batch& batch, Phase phase, std::int64_t global_step, Rng& rng)
{
    LossReport rep;
    rep.alpha = anneal_alpha(cfg_.alpha, global_step);
    rep.beta = beta();

    const CriticLoss cl = critic_loss(critic_, policy_, batch, cfg_, phase, rep.alpha, rep.beta, rng);
    rep.td = cl.td.item();
    rep.q_smooth = cl.q_smooth.item();
    rep.ood = cl.ood.loss.item();
    rep.mean_u_ood = cl.ood.mean_u;
    rep.critic_total = cl.total.item();
    rep.q_mean = cl.q_mean;
    rep.q_abs_max = cl.q_abs_max;
    if (!std::isfinite(rep.critic_total)) {
        throw ad::NonFiniteError("critic loss is not finite (td=" + std::to_string(rep.td)
                                 + ", q_smooth=" + std::to_string(rep.q_smooth) + ", ood=" + std::to_string(rep.ood)
                                 + ")");
    }
    critic_.zero_grad();
    ad::backward(cl.total);
    const auto critic_params = critic_.parameters();
    ad::adam_step(critic_opt_, critic_params);
    critic_.polyak_update(cfg_.polyak);

    const PolicyLoss pl = policy_loss(policy_, critic_, batch, cfg_, phase, rep.beta, rng);
    rep.policy = pl.total.item();
    rep.js = pl.js;
    rep.bc = pl.bc;
    rep.entropy = pl.entropy;
    if (!std::isfinite(rep.policy)) {
        throw ad::NonFiniteError("policy loss is not finite (objective=" + std::to_string(pl.objective) + ")");
    }
    policy_.zero_grad();
    ad::backward(pl.total);
    const auto policy_params = policy_.parameters();
    ad::adam_step(actor_opt_, policy_params);

    if (cfg_.entropy_mode == EntropyMode::Auto) {
        // d/d(log beta) of -log_beta * (log_pi + target), log_pi held fixed.
        const double g = -(pl.log_prob.value().mean() + target_entropy_);
        log_beta_.zero_grad();
        ad::backward(ad::scale(log_beta_, g));
        ad::adam_step(beta_opt_, std::vector<Tensor>{log_beta_});
    }

    if (!critic_.all_finite() || !policy_.trunk().all_finite() || !rep.all_finite()) {
        throw ad::NonFiniteError("parameters left the finite range after update at step "
                                 + std::to_string(global_step));
    }
    return rep;
}

void Ro2oAgent::store(ad::Checkpoint& ckpt) const
{
    policy_.store(ckpt);
    critic_.store(ckpt);
    ckpt.matrices["log_beta"] = log_beta_.value();
}

void Ro2oAgent::load(const ad::Checkpoint& ckpt)
{
    policy_.load(ckpt);
    critic_ = EnsembleCritic::restore(ckpt, critic_.state_dim(), critic_.action_dim());
    log_beta_.mutable_value() = ckpt.matrices.at("log_beta");
    critic_opt_ = ad::AdamState(critic_.parameters(), adam(cfg_.lr_critic));
    actor_opt_ = ad::AdamState(policy_.parameters(), adam(cfg_.lr_actor));
    beta_opt_ = ad::AdamState(std::vector<Tensor>{log_beta_}, adam(cfg_.lr_entropy));
}

double TrainResult::drop(int k) const
{
    const auto scores = online_scores();
    if (scores.empty() || k < 1) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto n = std::min<std::size_t>(scores.size(), static_cast<std::size_t>(k));
    const double lo = *std::min_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n));
    return lo / offline_final;
}

std::vector<double> TrainResult::online_scores() const
{
    std::vector<double> out;
    for (const auto& e : evals) {
        if (e.phase == Phase::Online) {
            out.push_back(e.normalized_score);
        }
    }
    return out;
}

Trainer::Trainer(const Ro2oConfig& cfg, const env::Environment& environment,
                 const std::vector<env::Transition>& offline, std::uint64_t seed, TrainerOptions opts,
                 MetricsSink* sink)
    : cfg_(cfg),
      env_(environment),
      opts_(std::move(opts)),
      sink_(sink),
      normalizer_(offline.empty() ? data::Normalizer::identity(static_cast<int>(environment.spec().state_dim))
                                  : data::fit_normalizer(offline)),
      buffers_(std::max<std::size_t>(offline.size(), 1), cfg.online_capacity),
      agent_(cfg, environment.spec().state_dim, environment.spec().action_dim, seed),
      rng_(derive_seed(seed, 3)),
      env_rng_(derive_seed(seed, 4))
{
    if (opts_.log_every < 1) {
        throw std::invalid_argument("log_every must be >= 1");
    }
    buffers_.offline().add_all(offline);
}

void Trainer::gradient_step(Phase phase)
{
    const auto regime = phase == Phase::Offline ? data::BufferRegime::OfflineOnly : cfg_.online_regime;
    const auto records = buffers_.sample(regime, static_cast<std::size_t>(cfg_.batch_size), rng_);
    const data::Batch batch = data::make_batch(records, normalizer_);
    const LossReport rep = agent_.update(batch, phase, global_step_, rng_);
    result_.max_abs_q = std::max(result_.max_abs_q, rep.q_abs_max);
    ++result_.gradient_steps;
    if (sink_ != nullptr && global_step_ % opts_.log_every == 0) {
        sink_->on_step(StepRecord{global_step_, phase, rep});
    }
    ++global_step_;
}

env::PolicyFn Trainer::greedy_policy() const
{
    const GaussianPolicy* policy = &agent_.policy();
    const data::Normalizer* norm = &normalizer_;
    return [policy, norm](const env::Vector& x, env::Rng&) {
        Matrix row(1, x.size());
        row.row(0) = norm->normalize(x).transpose();
        return env::Vector(policy->mean_action(row).row(0).transpose());
    };
}

EvalRecord Trainer::evaluate(Phase phase, std::int64_t phase_step)
{
    const env::EvalResult r = env::evaluate_policy(greedy_policy(), env_, opts_.eval.episodes, opts_.eval.seed);
    EvalRecord rec;
    rec.step = offline_done_ + online_done_;
    rec.phase = phase;
    rec.phase_step = phase_step;
    rec.mean_return = r.mean_return;
    rec.normalized_score = r.normalized_score;
    rec.std_return = r.std_return;
    result_.evals.push_back(rec);
    if (phase == Phase::Offline) {
        result_.offline_final = rec.normalized_score;
    } else {
        result_.online_final = rec.normalized_score;
    }
    if (sink_ != nullptr) {
        sink_->on_eval(rec);
    }
    return rec;
}

void Trainer::run_offline(std::int64_t steps)
{
    if (buffers_.offline().empty() && steps > 0) {
        throw data::SamplingError("offline phase needs a non-empty dataset");
    }
    for (std::int64_t i = 0; i < steps; ++i) {
        gradient_step(Phase::Offline);
        ++offline_done_;
        if (opts_.eval.offline_interval > 0 && offline_done_ % opts_.eval.offline_interval == 0 && i + 1 < steps) {
            evaluate(Phase::Offline, offline_done_);
        }
    }
    // Always close the phase with an evaluation: this is the offline-final score.
    evaluate(Phase::Offline, offline_done_);
}

void Trainer::run_online(std::int64_t steps)
{
    if (!injected_) {
        buffers_.online().add_all(opts_.inject);
        injected_ = true;
    }
    for (std::int64_t i = 0; i < steps; ++i) {
        if (!env_live_) {
            env_state_ = env_.reset(env_rng_);
            env_live_ = true;
        }
        Matrix row(1, env_state_.x.size());
        row.row(0) = normalizer_.normalize(env_state_.x).transpose();
        const Matrix a = agent_.policy().sample_values(row, env_rng_).action;
        env::StepResult sr = env_.step(env_state_, env::Vector(a.row(0).transpose()));
        if (opts_.reward_transform) {
            sr.transition.reward = env::sparse_reward_transform(sr.transition.reward);
        }
        const bool done = sr.transition.done;
        buffers_.online().add(std::move(sr.transition));
        env_state_ = sr.next;
        env_live_ = !done;
        ++result_.env_steps;
        ++online_done_;

        if (buffers_.active_size(cfg_.online_regime) >= static_cast<std::size_t>(cfg_.batch_size)) {
            gradient_step(Phase::Online);
        }
        if (opts_.eval.online_interval > 0 && online_done_ % opts_.eval.online_interval == 0) {
            evaluate(Phase::Online, online_done_);
        }
    }
    if (steps > 0 && (opts_.eval.online_interval <= 0 || online_done_ % opts_.eval.online_interval != 0)) {
        evaluate(Phase::Online, online_done_);
    }
}

TrainResult Trainer::run(std::int64_t t1, std::int64_t t2)
{
    try {
        run_offline(t1);
        run_online(t2);
    } catch (const ad::NonFiniteError& e) {
        result_.aborted = true;
        result_.abort_reason = e.what();
        result_.max_abs_q = std::numeric_limits<double>::infinity();
    } catch (const env::EnvironmentFault& e) {
        result_.aborted = true;
        result_.abort_reason = e.what();
    }
    return result_;
}

void store_normalizer(const data::Normalizer& norm, ad::Checkpoint& ckpt)
{
    Matrix stats(2, norm.mean.size());
    stats.row(0) = norm.mean.transpose();
    stats.row(1) = norm.stddev.transpose();
    ckpt.matrices["normalizer"] = stats;
}

data::Normalizer load_normalizer(const ad::Checkpoint& ckpt)
{
    const Matrix& stats = ckpt.matrices.at("normalizer");
    if (stats.rows() != 2) {
        throw ad::CheckpointError("normalizer block must have two rows");
    }
    data::Normalizer n;
    n.mean = stats.row(0).transpose();
    n.stddev = stats.row(1).transpose();
    return n;
}

ad::Checkpoint Trainer::checkpoint() const
{
    ad::Checkpoint ckpt;
    agent_.store(ckpt);
    store_normalizer(normalizer_, ckpt);
    ckpt.strings["env"] = env_.spec().name;
    ckpt.strings["offline_steps"] = std::to_string(offline_done_);
    ckpt.strings["online_steps"] = std::to_string(online_done_);
    return ckpt;
}

double perturbation_sensitivity(const EnsembleCritic& critic, const Matrix& states, const Matrix& actions,
                                double eps, int n, Rng& rng)
{
    const Matrix cands = data::sample_perturbations(states, data::PerturbationConfig{eps, n}, rng);
    Matrix rep_actions(cands.rows(), actions.cols());
    for (Index b = 0; b < states.rows(); ++b) {
        rep_actions.middleRows(b * n, n).rowwise() = actions.row(b);
    }
    const Matrix q_anchor = critic.q_values(states, actions);
    const Matrix q_cand = critic.q_values(cands, rep_actions);
    double total = 0.0;
    for (Index r = 0; r < cands.rows(); ++r) {
        total += (q_cand.row(r) - q_anchor.row(r / n)).cwiseAbs().sum();
    }
    return total / static_cast<double>(cands.rows() * q_cand.cols());
}

}  // namespace ro2o::agent
