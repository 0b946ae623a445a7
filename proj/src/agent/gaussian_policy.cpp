#include "ro2o/agent/gaussian_policy.hpp"

#include <cmath>
#include <numbers>

namespace ro2o::agent {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

double squash_log_std(double raw, double lo, double hi) { return lo + 0.5 * (hi - lo) * (std::tanh(raw) + 1.0); }

}  // namespace

GaussianPolicy::GaussianPolicy(Index state_dim, Index action_dim, const PolicyOptions& opts, std::uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), opts_(opts)
{
    if (!(opts.log_std_min < opts.log_std_max)) {
        throw std::invalid_argument("policy log-std range is empty");
    }
    std::vector<Index> dims;
    dims.push_back(state_dim);
    dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
    dims.push_back(2 * action_dim);
    trunk_ = ad::Mlp(dims, opts.activation, seed, 0.1);
}

Distribution GaussianPolicy::distribution(const Tensor& states) const
{
    const Tensor out = trunk_.forward(states);
    const Tensor mean = ad::slice_cols(out, 0, action_dim_);
    const Tensor raw = ad::slice_cols(out, action_dim_, action_dim_);
    const double half_range = 0.5 * (opts_.log_std_max - opts_.log_std_min);
    const Tensor log_std = ad::add_scalar(ad::scale(ad::add_scalar(ad::tanh(raw), 1.0), half_range), opts_.log_std_min);
    return {mean, log_std};
}

Tensor squashed_log_prob(const Tensor& pre_squash, const Tensor& log_std, const Matrix& noise)
{
    // Gaussian part: -0.5 eps^2 - log_std - 0.5 log(2 pi), with eps = noise.
    Matrix gauss_const = -0.5 * noise.cwiseAbs2();
    gauss_const.array() -= kHalfLog2Pi;
    Tensor per_dim = ad::sub(Tensor::constant(std::move(gauss_const)), log_std);
    // log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)), stable for large |u|.
    const Tensor log_det = ad::scale(
        ad::add_scalar(ad::neg(ad::add(pre_squash, ad::softplus(ad::scale(pre_squash, -2.0)))), std::numbers::ln2), 2.0);
    per_dim = ad::sub(per_dim, log_det);
    return ad::row_sum(per_dim);
}

PolicySample GaussianPolicy::sample(const Tensor& states, const Matrix& noise) const
{
    Distribution d = distribution(states);
    if (noise.rows() != states.rows() || noise.cols() != action_dim_) {
        throw ad::DimensionError("policy noise has the wrong shape");
    }
    const Tensor u = ad::add(d.mean, ad::mul(ad::exp(d.log_std), Tensor::constant(noise)));
    PolicySample s;
    s.action = ad::tanh(u);
    s.log_prob = squashed_log_prob(u, d.log_std, noise);
    s.dist = std::move(d);
    return s;
}

std::pair<Matrix, Matrix> GaussianPolicy::distribution_values(const Matrix& states) const
{
    const Matrix out = trunk_.predict(states);
    Matrix mean = out.leftCols(action_dim_);
    Matrix log_std = out.rightCols(action_dim_).unaryExpr(
        [lo = opts_.log_std_min, hi = opts_.log_std_max](double r) { return squash_log_std(r, lo, hi); });
    return {std::move(mean), std::move(log_std)};
}

Matrix GaussianPolicy::standard_noise(Index rows, Rng& rng) const
{
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix noise(rows, action_dim_);
    for (Index i = 0; i < noise.size(); ++i) {
        noise.data()[i] = n01(rng);
    }
    return noise;
}

GaussianPolicy::Values GaussianPolicy::sample_values(const Matrix& states, Rng& rng) const
{
    const auto [mean, log_std] = distribution_values(states);
    const Matrix noise = standard_noise(states.rows(), rng);
    const Matrix u = mean + log_std.array().exp().matrix().cwiseProduct(noise);
    Values v;
    v.action = ad::tanh_values(u);
    v.log_prob.resize(states.rows(), 1);
    for (Index i = 0; i < states.rows(); ++i) {
        double lp = 0.0;
        for (Index j = 0; j < action_dim_; ++j) {
            const double x = u(i, j);
            const double sp = -2.0 * x > 0.0 ? -2.0 * x + std::log1p(std::exp(2.0 * x)) : std::log1p(std::exp(-2.0 * x));
            lp += -0.5 * noise(i, j) * noise(i, j) - kHalfLog2Pi - log_std(i, j)
                - 2.0 * (std::numbers::ln2 - x - sp);
        }
        v.log_prob(i, 0) = lp;
    }
    return v;
}

Matrix GaussianPolicy::mean_action(const Matrix& states) const
{
    return ad::tanh_values(trunk_.predict(states).leftCols(action_dim_));
}

void GaussianPolicy::store(ad::Checkpoint& ckpt) const
{
    ckpt.networks["policy"] = trunk_.clone();
    Matrix range(1, 2);
    range << opts_.log_std_min, opts_.log_std_max;
    ckpt.matrices["policy.log_std_range"] = range;
}

void GaussianPolicy::load(const ad::Checkpoint& ckpt)
{
    const auto& net = ckpt.networks.at("policy");
    if (net.layer_dims() != trunk_.layer_dims()) {
        throw ad::DimensionError("checkpoint policy shape differs from this policy");
    }
    trunk_ = net.clone();
    const Matrix& range = ckpt.matrices.at("policy.log_std_range");
    opts_.log_std_min = range(0, 0);
    opts_.log_std_max = range(0, 1);
}

GaussianPolicy GaussianPolicy::restore(const ad::Checkpoint& ckpt)
{
    const auto it = ckpt.networks.find("policy");
    if (it == ckpt.networks.end()) {
        throw ad::CheckpointError("checkpoint has no policy network");
    }
    const auto& dims = it->second.layer_dims();
    if (dims.size() < 2 || dims.back() % 2 != 0) {
        throw ad::CheckpointError("policy network has an unexpected shape");
    }
    PolicyOptions opts;
    opts.hidden.assign(dims.begin() + 1, dims.end() - 1);
    opts.activation = it->second.activation();
    GaussianPolicy policy(dims.front(), dims.back() / 2, opts, 0);
    policy.load(ckpt);
    return policy;
}

}  // namespace ro2o::agent
