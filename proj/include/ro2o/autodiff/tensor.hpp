#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ro2o::ad {

/// Row-major dense storage used by every tensor in the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of the define-by-run graph. Children own their parents, never
/// the other way round, so a graph is released as soon as the last handle to
/// its output goes away.
struct Node {
    Matrix value;
    Matrix grad;  // empty until the first accumulation
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward;

    template <typename Derived>
    void accumulate(const Eigen::MatrixBase<Derived>& g)
    {
        if (grad.size() == 0) {
            grad = g;
        } else {
            grad += g;
        }
    }
};

/// Handle to a 2-D tensor (rows x cols) with an optional gradient buffer.
/// Copies share the underlying node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}

    static Tensor constant(Matrix value);
    static Tensor parameter(Matrix value);
    static Tensor scalar(double value);

    [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }
    [[nodiscard]] const Matrix& value() const { return node_->value; }
    [[nodiscard]] Matrix& mutable_value() { return node_->value; }
    [[nodiscard]] bool has_grad() const { return node_->grad.size() != 0; }
    /// Gradient buffer; a zero matrix of matching shape when nothing was accumulated.
    [[nodiscard]] Matrix grad() const;
    void zero_grad() { node_->grad.resize(0, 0); }

    [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
    [[nodiscard]] Index rows() const { return node_->value.rows(); }
    [[nodiscard]] Index cols() const { return node_->value.cols(); }
    [[nodiscard]] std::array<Index, 2> shape() const { return {rows(), cols()}; }
    [[nodiscard]] Index size() const { return node_->value.size(); }
    [[nodiscard]] double item() const;

    [[nodiscard]] const NodePtr& node() const { return node_; }

private:
    NodePtr node_;
};

/// Reverse sweep from a 1x1 loss. Gradients add onto whatever the leaves
/// already hold; call zero_grad() on parameters between updates.
void backward(const Tensor& loss);

[[nodiscard]] std::string shape_string(const Matrix& m);

}  // namespace ro2o::ad
