#include "ro2o/autodiff/adam.hpp"

#include <cmath>
#include <string>

namespace ro2o::ad {

AdamState::AdamState(std::span<const Tensor> params, AdamOptions opts) : options(opts)
{
    for (const auto& p : params) {
        first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
        second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
}

void adam_step(AdamState& state, std::span<const Tensor> params)
{
    if (params.size() != state.first_moment.size()) {
        throw DimensionError("adam_step: parameter list does not match optimizer state");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto& p = params[k];
        if (p.rows() != state.first_moment[k].rows() || p.cols() != state.first_moment[k].cols()) {
            throw DimensionError("adam_step: parameter " + std::to_string(k) + " changed shape");
        }
        if (p.has_grad() && !p.node()->grad.allFinite()) {
            throw NonFiniteError("adam_step: non-finite gradient in parameter " + std::to_string(k) + " of shape "
                                 + shape_string(p.value()) + " at step " + std::to_string(state.step + 1));
        }
    }

    ++state.step;
    const auto& o = state.options;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(o.beta1, t);
    const double bc2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        m *= o.beta1;
        v *= o.beta2;
        if (params[k].has_grad()) {
            const Matrix& g = params[k].node()->grad;
            m += (1.0 - o.beta1) * g;
            v += (1.0 - o.beta2) * g.cwiseAbs2();
        }
        Matrix& value = params[k].node()->value;
        value.array() -= o.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + o.epsilon);
    }
}

}  // namespace ro2o::ad
