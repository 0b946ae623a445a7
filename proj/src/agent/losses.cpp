#include "ro2o/agent/losses.hpp"

#include "ro2o/data/perturbation.hpp"

#include <cmath>

namespace ro2o::agent {
namespace {

Matrix repeat_rows(const Matrix& m, int n)
{
    Matrix out(m.rows() * n, m.cols());
    for (Index b = 0; b < m.rows(); ++b) {
        out.middleRows(b * n, n).rowwise() = m.row(b);
    }
    return out;
}

Matrix hstack(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

void check_candidates(const Matrix& states, const Matrix& candidates, int n)
{
    if (n < 1 || candidates.rows() != states.rows() * n || candidates.cols() != states.cols()) {
        throw ad::DimensionError("candidate matrix must hold n rows per anchor state");
    }
}

}  // namespace

bool LossReport::all_finite() const
{
    for (double v : {td, q_smooth, ood, critic_total, policy, js, bc, entropy, mean_u_ood, alpha, beta, q_mean,
                     q_abs_max}) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

double smooth_weight(double diff, double tau, bool symmetric)
{
    if (symmetric) {
        return 1.0;
    }
    return diff > 0.0 ? 1.0 - tau : tau;
}

Tensor q_smooth_loss_from_candidates(const EnsembleCritic& critic, const Matrix& states, const Matrix& actions,
                                     const Matrix& candidates, int n, double tau, bool symmetric, const Tensor* q_live)
{
    check_candidates(states, candidates, n);
    const Index batch = states.rows();
    const Tensor live = q_live != nullptr ? *q_live
                                          : critic.q_all(Tensor::constant(states), Tensor::constant(actions));
    const Matrix cand_inputs = hstack(candidates, repeat_rows(actions, n));
    const Tensor a_const = Tensor::constant(actions);

    std::vector<Tensor> per_member;
    per_member.reserve(static_cast<std::size_t>(critic.size()));
    for (int i = 0; i < critic.size(); ++i) {
        const Matrix q_cand = critic.member_values(i, cand_inputs);
        Matrix chosen(batch, states.cols());
        Matrix weight(batch, 1);
        for (Index b = 0; b < batch; ++b) {
            const double anchor = live.value()(b, i);
            Index best = 0;
            double best_loss = -1.0;
            for (Index k = 0; k < n; ++k) {
                const double d = q_cand(b * n + k, 0) - anchor;
                const double l = smooth_weight(d, tau, symmetric) * d * d;
                if (l > best_loss) {
                    best_loss = l;
                    best = k;
                }
            }
            chosen.row(b) = candidates.row(b * n + best);
            weight(b, 0) = smooth_weight(q_cand(b * n + best, 0) - anchor, tau, symmetric);
        }
        const Tensor q_hat = critic.q_member(i, Tensor::constant(std::move(chosen)), a_const);
        const Tensor diff = ad::sub(q_hat, ad::slice_cols(live, i, 1));
        per_member.push_back(ad::mul(Tensor::constant(std::move(weight)), ad::square(diff)));
    }
    return ad::mean(ad::row_max(ad::concat_cols(per_member)));
}

Tensor q_smooth_loss(const EnsembleCritic& critic, const Matrix& states, const Matrix& actions, double eps, int n,
                     double tau, bool symmetric, Rng& rng, const Tensor* q_live)
{
    const Matrix cands = data::sample_perturbations(states, data::PerturbationConfig{eps, n}, rng);
    return q_smooth_loss_from_candidates(critic, states, actions, cands, n, tau, symmetric, q_live);
}

double js_divergence(double mean_p, double log_std_p, double mean_q, double log_std_q)
{
    const double d = mean_p - mean_q;
    const double var_m = 0.5 * (std::exp(2.0 * log_std_p) + std::exp(2.0 * log_std_q)) + 0.25 * d * d;
    // KL terms to the moment-matched mixture; the quadratic parts cancel.
    return 0.5 * std::log(var_m) - 0.5 * (log_std_p + log_std_q);
}

Tensor js_divergence(const Distribution& p, const Distribution& q)
{
    const Tensor d = ad::sub(p.mean, q.mean);
    const Tensor var_m = ad::add(ad::scale(ad::add(ad::exp(ad::scale(p.log_std, 2.0)), ad::exp(ad::scale(q.log_std, 2.0))), 0.5),
                                 ad::scale(ad::square(d), 0.25));
    const Tensor per_dim = ad::sub(ad::scale(ad::log(var_m), 0.5), ad::scale(ad::add(p.log_std, q.log_std), 0.5));
    return ad::row_sum(per_dim);
}

Tensor policy_smooth_loss_from_candidates(const GaussianPolicy& policy, const Matrix& states, const Matrix& candidates,
                                          int n, const Distribution* at_states)
{
    check_candidates(states, candidates, n);
    const Index batch = states.rows();
    const auto [mean_s, ls_s] = policy.distribution_values(states);
    const auto [mean_c, ls_c] = policy.distribution_values(candidates);
    Matrix chosen(batch, states.cols());
    for (Index b = 0; b < batch; ++b) {
        Index best = 0;
        double best_js = -1.0;
        for (Index k = 0; k < n; ++k) {
            const Index r = b * n + k;
            double js = 0.0;
            for (Index j = 0; j < mean_s.cols(); ++j) {
                js += js_divergence(mean_s(b, j), ls_s(b, j), mean_c(r, j), ls_c(r, j));
            }
            if (js > best_js) {
                best_js = js;
                best = k;
            }
        }
        chosen.row(b) = candidates.row(b * n + best);
    }
    const Distribution here = at_states != nullptr ? *at_states : policy.distribution(Tensor::constant(states));
    const Distribution there = policy.distribution(Tensor::constant(std::move(chosen)));
    return ad::mean(js_divergence(here, there));
}

Tensor policy_smooth_loss(const GaussianPolicy& policy, const Matrix& states, double eps, int n, Rng& rng,
                          const Distribution* at_states)
{
    const Matrix cands = data::sample_perturbations(states, data::PerturbationConfig{eps, n}, rng);
    return policy_smooth_loss_from_candidates(policy, states, cands, n, at_states);
}

OodTerm ood_loss_at(const EnsembleCritic& critic, const Matrix& perturbed_states, const Matrix& actions, double alpha)
{
    if (!(alpha >= 0.0)) {
        throw std::invalid_argument("ood_loss: alpha must be >= 0");
    }
    const Tensor q = critic.q_all(Tensor::constant(perturbed_states), Tensor::constant(actions));
    const Matrix u = critic::uncertainty(q.value());
    Matrix target = q.value();
    target.colwise() -= alpha * u.col(0);
    OodTerm out;
    out.loss = ad::mean(ad::square(ad::sub(Tensor::constant(std::move(target)), q)));
    out.mean_u = u.mean();
    return out;
}

OodTerm ood_loss(const EnsembleCritic& critic, const GaussianPolicy& policy, const Matrix& states, double eps,
                 double alpha, Rng& rng)
{
    const Matrix s_hat = data::sample_perturbations(states, data::PerturbationConfig{eps, 1}, rng);
    const Matrix a_hat = policy.sample_values(s_hat, rng).action;
    return ood_loss_at(critic, s_hat, a_hat, alpha);
}

CriticLoss critic_loss(const EnsembleCritic& critic, const GaussianPolicy& policy, const data::Batch& batch,
                       const Ro2oConfig& cfg, Phase phase, double alpha, double beta, Rng& rng)
{
    CriticLoss out;
    const auto next = policy.sample_values(batch.next_states, rng);
    const Matrix target_q = critic.target_values(batch.next_states, next.action);
    const Matrix y = critic::td_target(target_q, batch.rewards, batch.not_terminal, next.log_prob,
                                       cfg.target_mode(phase), cfg.gamma, beta);

    const Tensor q = critic.q_all(Tensor::constant(batch.states), Tensor::constant(batch.actions));
    out.q_mean = q.value().mean();
    out.q_abs_max = q.value().cwiseAbs().maxCoeff();
    out.td = ad::mean(ad::square(ad::sub(q, Tensor::constant(y))));
    Tensor total = out.td;

    if (cfg.eta_q_smooth > 0.0) {
        out.q_smooth = q_smooth_loss(critic, batch.states, batch.actions, cfg.eps_q, cfg.n_perturb, cfg.tau_smooth,
                                     cfg.symmetric_smooth, rng, &q);
        total = ad::add(total, ad::scale(out.q_smooth, cfg.eta_q_smooth));
    } else {
        out.q_smooth = Tensor::scalar(0.0);
    }
    if (cfg.eta_ood > 0.0) {
        out.ood = ood_loss(critic, policy, batch.states, cfg.eps_ood, alpha, rng);
        total = ad::add(total, ad::scale(out.ood.loss, cfg.eta_ood));
    } else {
        out.ood.loss = Tensor::scalar(0.0);
    }
    out.total = total;
    return out;
}

Tensor policy_objective(const Tensor& q, PolicyObjective objective)
{
    if (objective == PolicyObjective::Min) {
        return ad::row_min(q);
    }
    return ad::sub(ad::row_mean(q), critic::uncertainty(q));
}

PolicyLoss policy_loss(const GaussianPolicy& policy, const EnsembleCritic& critic, const data::Batch& batch,
                       const Ro2oConfig& cfg, Phase phase, double beta, Rng& rng)
{
    PolicyLoss out;
    const Tensor s = Tensor::constant(batch.states);
    const PolicySample smp = policy.sample(s, policy.standard_noise(batch.size(), rng));
    const Tensor q = critic.q_all_frozen(s, smp.action);
    const Tensor obj = policy_objective(q, cfg.policy_objective);
    out.log_prob = smp.log_prob;
    out.objective = obj.value().mean();
    out.entropy = -smp.log_prob.value().mean();
    Tensor total = ad::mean(ad::sub(ad::scale(smp.log_prob, beta), obj));

    if (cfg.eta_policy_smooth > 0.0) {
        const Tensor js = policy_smooth_loss(policy, batch.states, cfg.eps_p, cfg.n_perturb, rng, &smp.dist);
        out.js = js.item();
        total = ad::add(total, ad::scale(js, cfg.eta_policy_smooth));
    }
    const double bc_w = cfg.bc_weight(phase);
    if (bc_w > 0.0) {
        const Tensor bc = ad::mean(ad::square(ad::sub(ad::tanh(smp.dist.mean), Tensor::constant(batch.actions))));
        out.bc = bc.item();
        total = ad::add(total, ad::scale(bc, bc_w));
    }
    out.total = total;
    return out;
}

}  // namespace ro2o::agent
