#include "ro2o/autodiff/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace ro2o::ad {

Tensor Tensor::constant(Matrix value)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value)
{
    Matrix m(1, 1);
    m(0, 0) = value;
    return constant(std::move(m));
}

Matrix Tensor::grad() const
{
    if (node_->grad.size() == 0) {
        return Matrix::Zero(rows(), cols());
    }
    return node_->grad;
}

double Tensor::item() const
{
    if (size() != 1) {
        throw DimensionError("item() on tensor of shape " + shape_string(value()));
    }
    return node_->value(0, 0);
}

std::string shape_string(const Matrix& m)
{
    std::ostringstream os;
    os << '[' << m.rows() << ", " << m.cols() << ']';
    return os.str();
}

void backward(const Tensor& loss)
{
    if (!loss.defined() || loss.size() != 1) {
        throw DimensionError("backward() needs a scalar loss, got shape "
                             + (loss.defined() ? shape_string(loss.value()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) {
        return;
    }

    // Iterative post-order DFS; reversed, it is a valid reverse-topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior nodes start clean so a graph can be swept only once meaningfully.
    for (Node* n : order) {
        if (n->backward) {
            n->grad.resize(0, 0);
        }
    }
    loss.node()->accumulate(Matrix::Ones(1, 1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward && n->grad.size() != 0) {
            n->backward(*n);
        }
    }
}

}  // namespace ro2o::ad
