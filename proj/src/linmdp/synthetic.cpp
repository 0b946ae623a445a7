#include "ro2o/linmdp/synthetic.hpp"

#include <string>

namespace ro2o::linmdp {
namespace {

VecD random_simplex(int d, Rng& rng)
{
    std::exponential_distribution<double> e(1.0);
    VecD v(d);
    for (int i = 0; i < d; ++i) {
        v(i) = e(rng);
    }
    return v / v.sum();
}

}  // namespace

VecD LinearMdpSpec::phi(int s, int a) const { return features.row(s * n_actions + a).transpose(); }

double LinearMdpSpec::reward(int s, int a) const { return phi(s, a).dot(upsilon); }

double LinearMdpSpec::bellman(int s, int a, const VecD& v) const
{
    return phi(s, a).dot(upsilon + mu * v);
}

int LinearMdpSpec::sample_next(int s, int a, Rng& rng) const
{
    const VecD p = (phi(s, a).transpose() * mu).transpose();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (int j = 0; j < n_states; ++j) {
        x -= p(j);
        if (x < 0.0) {
            return j;
        }
    }
    return n_states - 1;
}

void LinearMdpSpec::validate() const
{
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        if (features.row(r).norm() > 1.0 + 1e-12) {
            throw std::logic_error("linear MDP feature row " + std::to_string(r) + " leaves the unit ball");
        }
        const double rew = features.row(r).dot(upsilon);
        if (rew < -1e-12 || rew > 1.0 + 1e-12) {
            throw std::logic_error("linear MDP reward outside [0, 1]");
        }
    }
    for (Eigen::Index k = 0; k < mu.rows(); ++k) {
        if (mu.row(k).minCoeff() < 0.0 || std::abs(mu.row(k).sum() - 1.0) > 1e-12) {
            throw std::logic_error("linear MDP transition factor is not a distribution");
        }
    }
}

LinearMdpSpec make_linear_mdp(int d, int n_states, int n_actions, int horizon, Rng& rng)
{
    if (d < 1 || n_states < 1 || n_actions < 1 || horizon < 1) {
        throw std::invalid_argument("make_linear_mdp: sizes must be positive");
    }
    LinearMdpSpec m;
    m.d = d;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.horizon = horizon;
    m.features.resize(n_states * n_actions, d);
    for (int r = 0; r < n_states * n_actions; ++r) {
        m.features.row(r) = random_simplex(d, rng).transpose();
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    m.upsilon.resize(d);
    for (int i = 0; i < d; ++i) {
        m.upsilon(i) = u(rng);
    }
    m.mu.resize(d, n_states);
    for (int k = 0; k < d; ++k) {
        m.mu.row(k) = random_simplex(n_states, rng).transpose();
    }
    m.validate();
    return m;
}

VecD random_unit_vector(int d, Rng& rng)
{
    std::normal_distribution<double> n01(0.0, 1.0);
    VecD v(d);
    do {
        for (int i = 0; i < d; ++i) {
            v(i) = n01(rng);
        }
    } while (v.norm() < 1e-12);
    return v / v.norm();
}

MatD random_ball_features(int n, int d, double radius, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatD out(n, d);
    for (int i = 0; i < n; ++i) {
        // Radius law r^(1/d) gives a uniform draw from the ball.
        out.row(i) = radius * std::pow(u(rng), 1.0 / d) * random_unit_vector(d, rng).transpose();
    }
    return out;
}

std::vector<RobustGroup<double>> full_rank_robust_set(const MatD& anchors, int extra, double eps, Rng& rng)
{
    const int d = static_cast<int>(anchors.cols());
    std::vector<RobustGroup<double>> groups;
    for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
        RobustGroup<double> g;
        g.anchor = anchors.row(a).transpose();
        g.perturbed.resize(d + extra, d);
        for (int k = 0; k < d + extra; ++k) {
            g.perturbed.row(k) = (g.anchor + eps * random_unit_vector(d, rng)).transpose();
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

std::vector<RobustGroup<double>> rank_deficient_robust_set(const MatD& anchors, int group_size, double eps, Rng& rng)
{
    const int d = static_cast<int>(anchors.cols());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<RobustGroup<double>> groups;
    for (Eigen::Index a = 0; a < anchors.rows(); ++a) {
        RobustGroup<double> g;
        g.anchor = anchors.row(a).transpose();
        g.perturbed.resize(group_size, d);
        for (int k = 0; k < group_size; ++k) {
            VecD delta = VecD::Zero(d);
            delta(0) = eps * u(rng);
            g.perturbed.row(k) = (g.anchor + delta).transpose();
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

LinearMdpDataset<double> make_synthetic_dataset(const SyntheticDatasetOptions& opts, Rng& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LinearMdpDataset<double> ds;
    ds.in_features = random_ball_features(opts.n_in, opts.d, 1.0, rng);
    ds.in_targets.resize(opts.n_in);
    for (int i = 0; i < opts.n_in; ++i) {
        ds.in_targets(i) = u(rng);
    }
    ds.ood_features = random_ball_features(opts.n_ood, opts.d, 1.0, rng);
    ds.ood_targets.resize(opts.n_ood);
    for (int i = 0; i < opts.n_ood; ++i) {
        ds.ood_targets(i) = u(rng);
    }
    const MatD anchors = random_ball_features(opts.n_anchors, opts.d, 1.0 - opts.eps, rng);
    ds.robust = full_rank_robust_set(anchors, opts.extra_perturbations, opts.eps, rng);
    return ds;
}

}  // namespace ro2o::linmdp
