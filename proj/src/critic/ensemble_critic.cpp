#include "ro2o/critic/ensemble_critic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace ro2o::critic {

TargetMode target_mode_from_string(std::string_view name)
{
    if (name == "shared-min") {
        return TargetMode::SharedMin;
    }
    if (name == "independent") {
        return TargetMode::Independent;
    }
    if (name == "shared-max") {
        return TargetMode::SharedMax;
    }
    throw std::invalid_argument("unknown target mode '" + std::string(name) + "'");
}

std::string_view to_string(TargetMode mode)
{
    switch (mode) {
    case TargetMode::SharedMin:
        return "shared-min";
    case TargetMode::Independent:
        return "independent";
    case TargetMode::SharedMax:
        return "shared-max";
    }
    return "shared-min";
}

EnsembleCritic::EnsembleCritic(Index state_dim, Index action_dim, const CriticOptions& opts, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim)
{
    if (opts.n_members < 2) {
        throw std::invalid_argument("an ensemble critic needs at least two members");
    }
    std::vector<Index> dims;
    dims.push_back(state_dim + action_dim);
    dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
    dims.push_back(1);
    // Each member draws from its own stream so members are independent.
    std::mt19937_64 seeder(seed);
    for (int i = 0; i < opts.n_members; ++i) {
        members_.emplace_back(dims, opts.activation, seeder(), opts.output_scale);
        targets_.push_back(members_.back().clone());
    }
    for (auto& t : targets_) {
        for (auto& p : t.parameters()) {
            p.node()->requires_grad = false;
        }
    }
}

EnsembleCritic::EnsembleCritic(Index state_dim, Index action_dim, std::vector<ad::Mlp> members)
    : state_dim_(state_dim), action_dim_(action_dim), members_(std::move(members))
{
    if (members_.size() < 2) {
        throw std::invalid_argument("an ensemble critic needs at least two members");
    }
    for (const auto& m : members_) {
        if (m.input_dim() != state_dim + action_dim || m.output_dim() != 1) {
            throw ad::DimensionError("ensemble member has the wrong input/output width");
        }
        targets_.push_back(m.clone());
    }
    for (auto& t : targets_) {
        for (auto& p : t.parameters()) {
            p.node()->requires_grad = false;
        }
    }
}

void EnsembleCritic::check_inputs(Index rows_s, Index cols_s, Index rows_a, Index cols_a) const
{
    if (cols_s != state_dim_ || cols_a != action_dim_ || rows_s != rows_a) {
        throw ad::DimensionError("critic inputs: states [" + std::to_string(rows_s) + ", " + std::to_string(cols_s)
                                 + "], actions [" + std::to_string(rows_a) + ", " + std::to_string(cols_a)
                                 + "], expected widths " + std::to_string(state_dim_) + " and "
                                 + std::to_string(action_dim_));
    }
}

Tensor EnsembleCritic::q_member(int i, const Tensor& states, const Tensor& actions) const
{
    check_inputs(states.rows(), states.cols(), actions.rows(), actions.cols());
    return members_.at(static_cast<std::size_t>(i)).forward(ad::concat_cols(states, actions));
}

Tensor EnsembleCritic::q_all(const Tensor& states, const Tensor& actions) const
{
    check_inputs(states.rows(), states.cols(), actions.rows(), actions.cols());
    const Tensor input = ad::concat_cols(states, actions);
    std::vector<Tensor> heads;
    heads.reserve(members_.size());
    for (const auto& m : members_) {
        heads.push_back(m.forward(input));
    }
    return ad::concat_cols(heads);
}

Tensor EnsembleCritic::q_all_frozen(const Tensor& states, const Tensor& actions) const
{
    check_inputs(states.rows(), states.cols(), actions.rows(), actions.cols());
    const Tensor input = ad::concat_cols(states, actions);
    std::vector<Tensor> heads;
    heads.reserve(members_.size());
    for (const auto& m : members_) {
        Tensor h = input;
        const auto& layers = m.layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            // Constant views of the weights: no gradient reaches the critic.
            h = ad::linear(h, ad::Tensor::constant(layers[l].weight.value()),
                           ad::Tensor::constant(layers[l].bias.value()));
            if (l + 1 < layers.size()) {
                h = m.activation() == ad::Activation::Tanh ? ad::tanh(h) : ad::relu(h);
            }
        }
        heads.push_back(h);
    }
    return ad::concat_cols(heads);
}

namespace {

Matrix evaluate(const std::vector<ad::Mlp>& nets, const Matrix& states, const Matrix& actions)
{
    Matrix input(states.rows(), states.cols() + actions.cols());
    input << states, actions;
    Matrix out(states.rows(), static_cast<Index>(nets.size()));
    for (std::size_t i = 0; i < nets.size(); ++i) {
        out.col(static_cast<Index>(i)) = nets[i].predict(input).col(0);
    }
    return out;
}

}  // namespace

Matrix EnsembleCritic::q_values(const Matrix& states, const Matrix& actions) const
{
    check_inputs(states.rows(), states.cols(), actions.rows(), actions.cols());
    return evaluate(members_, states, actions);
}

Matrix EnsembleCritic::target_values(const Matrix& states, const Matrix& actions) const
{
    check_inputs(states.rows(), states.cols(), actions.rows(), actions.cols());
    return evaluate(targets_, states, actions);
}

Matrix EnsembleCritic::member_values(int i, const Matrix& inputs) const
{
    return members_.at(static_cast<std::size_t>(i)).predict(inputs);
}

std::vector<Tensor> EnsembleCritic::parameters() const
{
    std::vector<Tensor> out;
    for (const auto& m : members_) {
        auto p = m.parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

void EnsembleCritic::zero_grad()
{
    for (auto& m : members_) {
        m.zero_grad();
    }
}

void EnsembleCritic::polyak_update(double tau)
{
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("polyak coefficient must lie in (0, 1]");
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
        targets_[i].blend_from(members_[i], tau);
    }
}

bool EnsembleCritic::all_finite() const
{
    for (const auto& m : members_) {
        if (!m.all_finite()) {
            return false;
        }
    }
    return true;
}

void EnsembleCritic::store(ad::Checkpoint& ckpt) const
{
    for (std::size_t i = 0; i < members_.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "critic.%02zu", i);
        ckpt.networks[name] = members_[i].clone();
        std::snprintf(name, sizeof(name), "critic_target.%02zu", i);
        ckpt.networks[name] = targets_[i].clone();
    }
}

EnsembleCritic EnsembleCritic::restore(const ad::Checkpoint& ckpt, Index state_dim, Index action_dim)
{
    std::vector<ad::Mlp> members;
    std::vector<ad::Mlp> targets;
    for (std::size_t i = 0;; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "critic.%02zu", i);
        auto it = ckpt.networks.find(name);
        if (it == ckpt.networks.end()) {
            break;
        }
        members.push_back(it->second.clone());
        std::snprintf(name, sizeof(name), "critic_target.%02zu", i);
        targets.push_back(ckpt.networks.at(name).clone());
    }
    EnsembleCritic critic(state_dim, action_dim, std::move(members));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        critic.targets_[i].blend_from(targets[i], 1.0);
    }
    return critic;
}

Matrix td_target(const Matrix& target_q, const Matrix& rewards, const Matrix& not_terminal, const Matrix& log_pi_next,
                 TargetMode mode, double gamma, double beta)
{
    const Index b = target_q.rows();
    const Index n = target_q.cols();
    if (rewards.rows() != b || not_terminal.rows() != b || log_pi_next.rows() != b) {
        throw ad::DimensionError("td_target: batch sizes disagree");
    }
    Matrix agg(b, n);
    switch (mode) {
    case TargetMode::SharedMin:
        agg.colwise() = target_q.rowwise().minCoeff();
        break;
    case TargetMode::SharedMax:
        agg.colwise() = target_q.rowwise().maxCoeff();
        break;
    case TargetMode::Independent:
        agg = target_q;
        break;
    }
    agg.colwise() -= beta * log_pi_next.col(0);
    Matrix y = gamma * agg;
    y.array().colwise() *= not_terminal.col(0).array();
    y.colwise() += rewards.col(0);
    return y;
}

Matrix uncertainty(const Matrix& q)
{
    // Shifting by the row minimum first makes identical members give exactly 0.
    Matrix centered = q;
    centered.colwise() -= Eigen::VectorXd(q.rowwise().minCoeff());
    const Eigen::VectorXd mean = centered.rowwise().mean();
    centered.colwise() -= mean;
    Matrix u(q.rows(), 1);
    u.col(0) = (centered.cwiseAbs2().rowwise().sum() / static_cast<double>(q.cols())).cwiseSqrt();
    return u;
}

double uncertainty(std::span<const double> member_values)
{
    if (member_values.empty()) {
        throw std::invalid_argument("uncertainty of an empty ensemble");
    }
    const double lo = *std::min_element(member_values.begin(), member_values.end());
    double mean = 0.0;
    for (double v : member_values) {
        mean += v - lo;
    }
    mean /= static_cast<double>(member_values.size());
    double ss = 0.0;
    for (double v : member_values) {
        ss += (v - lo - mean) * (v - lo - mean);
    }
    return std::sqrt(ss / static_cast<double>(member_values.size()));
}

Tensor uncertainty(const Tensor& q)
{
    const Tensor mean = ad::broadcast_cols(ad::row_mean(q), q.cols());
    return ad::sqrt(ad::row_mean(ad::square(ad::sub(q, mean))));
}

}  // namespace ro2o::critic
