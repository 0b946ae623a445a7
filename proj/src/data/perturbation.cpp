#include "ro2o/data/perturbation.hpp"

#include <cmath>

namespace ro2o::data {

void PerturbationConfig::validate() const
{
    if (!(epsilon >= 0.0)) {
        throw std::invalid_argument("perturbation epsilon must be >= 0");
    }
    if (n_samples < 1) {
        throw std::invalid_argument("perturbation n_samples must be >= 1");
    }
}

Matrix sample_perturbations(const Eigen::RowVectorXd& state, const PerturbationConfig& cfg, Rng& rng)
{
    Matrix anchor(1, state.size());
    anchor.row(0) = state;
    return sample_perturbations(anchor, cfg, rng);
}

Matrix sample_perturbations(const Matrix& states, const PerturbationConfig& cfg, Rng& rng)
{
    cfg.validate();
    const Eigen::Index n = cfg.n_samples;
    Matrix out(states.rows() * n, states.cols());
    std::uniform_real_distribution<double> u(-cfg.epsilon, cfg.epsilon);
    for (Eigen::Index b = 0; b < states.rows(); ++b) {
        for (Eigen::Index k = 0; k < n; ++k) {
            auto row = out.row(b * n + k);
            row = states.row(b);
            if (cfg.epsilon > 0.0) {
                for (Eigen::Index j = 0; j < row.size(); ++j) {
                    const double s = states(b, j);
                    double c = s + u(rng);
                    // Pull back by ulps if rounding of s + u left the ball.
                    while (std::abs(c - s) > cfg.epsilon) {
                        c = std::nextafter(c, s);
                    }
                    row(j) = c;
                }
            }
        }
    }
    if (max_linf_deviation(states, out, cfg.n_samples) > cfg.epsilon) {
        throw std::logic_error("perturbation candidate left the epsilon ball");
    }
    return out;
}

double max_linf_deviation(const Matrix& states, const Matrix& candidates, int n_samples)
{
    double worst = 0.0;
    for (Eigen::Index r = 0; r < candidates.rows(); ++r) {
        const double d = (candidates.row(r) - states.row(r / n_samples)).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
    }
    return worst;
}

}  // namespace ro2o::data
