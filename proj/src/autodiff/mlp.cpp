#include "ro2o/autodiff/mlp.hpp"

#include <cmath>
#include <random>

namespace ro2o::ad {

Activation activation_from_string(std::string_view name)
{
    if (name == "tanh") {
        return Activation::Tanh;
    }
    if (name == "relu") {
        return Activation::Relu;
    }
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation act)
{
    return act == Activation::Relu ? "relu" : "tanh";
}

void Mlp::check_dims() const
{
    if (dims_.size() < 2) {
        throw DimensionError("an Mlp needs at least an input and an output width");
    }
    for (Index d : dims_) {
        if (d < 1) {
            throw DimensionError("Mlp layer widths must be positive");
        }
    }
}

Mlp::Mlp(std::vector<Index> layer_dims, Activation act, std::uint64_t seed, double output_scale)
    : dims_(std::move(layer_dims)), act_(act)
{
    check_dims();
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
        const Index in = dims_[l];
        const Index out = dims_[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Matrix w(in, out);
        for (Index i = 0; i < w.size(); ++i) {
            w.data()[i] = dist(rng);
        }
        if (l + 2 == dims_.size()) {
            w *= output_scale;
        }
        layers_.push_back({Tensor::parameter(std::move(w)), Tensor::parameter(Matrix::Zero(1, out))});
    }
}

Mlp Mlp::zeros(std::vector<Index> layer_dims, Activation act)
{
    Mlp net;
    net.dims_ = std::move(layer_dims);
    net.act_ = act;
    net.check_dims();
    for (std::size_t l = 0; l + 1 < net.dims_.size(); ++l) {
        net.layers_.push_back({Tensor::parameter(Matrix::Zero(net.dims_[l], net.dims_[l + 1])),
                               Tensor::parameter(Matrix::Zero(1, net.dims_[l + 1]))});
    }
    return net;
}

Tensor Mlp::forward(const Tensor& input) const
{
    if (input.cols() != input_dim()) {
        throw DimensionError("Mlp input width " + std::to_string(input.cols()) + ", expected "
                             + std::to_string(input_dim()));
    }
    Tensor h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        h = linear(h, layers_[l].weight, layers_[l].bias);
        if (l + 1 < layers_.size()) {
            h = act_ == Activation::Tanh ? ad::tanh(h) : relu(h);
        }
    }
    return h;
}

Matrix Mlp::predict(const Matrix& input) const
{
    if (input.cols() != input_dim()) {
        throw DimensionError("Mlp input width " + std::to_string(input.cols()) + ", expected "
                             + std::to_string(input_dim()));
    }
    Matrix h = input;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = h * layers_[l].weight.value();
        z.rowwise() += layers_[l].bias.value().row(0);
        if (l + 1 < layers_.size()) {
            if (act_ == Activation::Tanh) {
                z = tanh_values(z);
            } else {
                z = z.cwiseMax(0.0);
            }
        }
        h = std::move(z);
    }
    return h;
}

std::vector<Tensor> Mlp::parameters() const
{
    std::vector<Tensor> out;
    out.reserve(layers_.size() * 2);
    for (const auto& layer : layers_) {
        out.push_back(layer.weight);
        out.push_back(layer.bias);
    }
    return out;
}

std::size_t Mlp::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
    }
    return n;
}

Mlp Mlp::clone() const
{
    Mlp copy;
    copy.dims_ = dims_;
    copy.act_ = act_;
    for (const auto& layer : layers_) {
        copy.layers_.push_back({Tensor::parameter(layer.weight.value()), Tensor::parameter(layer.bias.value())});
    }
    return copy;
}

void Mlp::blend_from(const Mlp& source, double tau)
{
    if (source.dims_ != dims_) {
        throw DimensionError("blend_from between differently shaped networks");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        auto& w = layers_[l].weight.mutable_value();
        auto& b = layers_[l].bias.mutable_value();
        w = tau * source.layers_[l].weight.value() + (1.0 - tau) * w;
        b = tau * source.layers_[l].bias.value() + (1.0 - tau) * b;
    }
}

void Mlp::zero_grad()
{
    for (auto& layer : layers_) {
        layer.weight.zero_grad();
        layer.bias.zero_grad();
    }
}

bool Mlp::all_finite() const
{
    for (const auto& layer : layers_) {
        if (!layer.weight.value().allFinite() || !layer.bias.value().allFinite()) {
            return false;
        }
    }
    return true;
}

}  // namespace ro2o::ad
