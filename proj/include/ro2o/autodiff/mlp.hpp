#pragma once

#include "ro2o/autodiff/ops.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace ro2o::ad {

enum class Activation : std::uint32_t { Tanh = 0, Relu = 1 };

[[nodiscard]] Activation activation_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(Activation act);

struct Layer {
    Tensor weight;  // in x out
    Tensor bias;    // 1 x out
};

/// Fully connected network with a nonlinearity on hidden layers and an
/// identity output. Parameters are graph leaves shared by every copy of the
/// handle; use clone() for an independent network.
class Mlp {
public:
    Mlp() = default;

    /// Xavier-uniform weights, zero biases. The last layer's weights are
    /// multiplied by output_scale.
    Mlp(std::vector<Index> layer_dims, Activation act, std::uint64_t seed, double output_scale = 1.0);

    static Mlp zeros(std::vector<Index> layer_dims, Activation act = Activation::Tanh);

    [[nodiscard]] Tensor forward(const Tensor& input) const;
    /// Same map as forward() without recording a graph.
    [[nodiscard]] Matrix predict(const Matrix& input) const;

    [[nodiscard]] std::vector<Tensor> parameters() const;
    [[nodiscard]] const std::vector<Index>& layer_dims() const noexcept { return dims_; }
    [[nodiscard]] Index input_dim() const { return dims_.front(); }
    [[nodiscard]] Index output_dim() const { return dims_.back(); }
    [[nodiscard]] Activation activation() const noexcept { return act_; }
    [[nodiscard]] std::vector<Layer>& layers() noexcept { return layers_; }
    [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] Mlp clone() const;
    /// this <- tau * source + (1 - tau) * this, parameter by parameter.
    void blend_from(const Mlp& source, double tau);
    void zero_grad();
    [[nodiscard]] bool all_finite() const;

private:
    void check_dims() const;

    std::vector<Index> dims_;
    Activation act_ = Activation::Tanh;
    std::vector<Layer> layers_;
};

}  // namespace ro2o::ad
