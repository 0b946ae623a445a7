#include "ro2o/autodiff/ops.hpp"

#include <cmath>
#include <limits>

namespace ro2o::ad {
namespace {

using BackwardFn = std::function<void(Node&)>;

Tensor make_result(Matrix value, std::vector<NodePtr> parents, BackwardFn fn)
{
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool any = false;
    for (const auto& p : parents) {
        any = any || p->requires_grad;
    }
    if (any) {
        node->requires_grad = true;
        node->parents = std::move(parents);
        node->backward = std::move(fn);
    }
    return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs "
                             + shape_string(b.value()));
    }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv)
{
    Matrix y = x.value().unaryExpr(fwd);
    return make_result(std::move(y), {x.node()}, [deriv](Node& self) {
        Node& in = *self.parents[0];
        if (!in.requires_grad) {
            return;
        }
        Matrix g = self.grad;
        for (Index i = 0; i < g.rows(); ++i) {
            for (Index j = 0; j < g.cols(); ++j) {
                g(i, j) *= deriv(in.value(i, j), self.value(i, j));
            }
        }
        in.accumulate(g);
    });
}

}  // namespace

Tensor detach(const Tensor& x) { return Tensor::constant(x.value()); }

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ " + shape_string(a.value()) + " x "
                             + shape_string(b.value()));
    }
    Matrix y = a.value() * b.value();
    return make_result(std::move(y), {a.node(), b.node()}, [](Node& self) {
        Node& lhs = *self.parents[0];
        Node& rhs = *self.parents[1];
        if (lhs.requires_grad) {
            lhs.accumulate(self.grad * rhs.value.transpose());
        }
        if (rhs.requires_grad) {
            rhs.accumulate(lhs.value.transpose() * self.grad);
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b)
{
    if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
        throw DimensionError("linear: incompatible shapes x" + shape_string(x.value()) + " w"
                             + shape_string(w.value()) + " b" + shape_string(b.value()));
    }
    Matrix y = x.value() * w.value();
    y.rowwise() += b.value().row(0);
    return make_result(std::move(y), {x.node(), w.node(), b.node()}, [](Node& self) {
        Node& in = *self.parents[0];
        Node& weight = *self.parents[1];
        Node& bias = *self.parents[2];
        if (in.requires_grad) {
            in.accumulate(self.grad * weight.value.transpose());
        }
        if (weight.requires_grad) {
            weight.accumulate(in.value.transpose() * self.grad);
        }
        if (bias.requires_grad) {
            bias.accumulate(self.grad.colwise().sum());
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "add");
    return make_result(a.value() + b.value(), {a.node(), b.node()}, [](Node& self) {
        for (auto& p : self.parents) {
            if (p->requires_grad) {
                p->accumulate(self.grad);
            }
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "sub");
    return make_result(a.value() - b.value(), {a.node(), b.node()}, [](Node& self) {
        if (self.parents[0]->requires_grad) {
            self.parents[0]->accumulate(self.grad);
        }
        if (self.parents[1]->requires_grad) {
            self.parents[1]->accumulate(-self.grad);
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "mul");
    return make_result(a.value().cwiseProduct(b.value()), {a.node(), b.node()}, [](Node& self) {
        Node& lhs = *self.parents[0];
        Node& rhs = *self.parents[1];
        if (lhs.requires_grad) {
            lhs.accumulate(self.grad.cwiseProduct(rhs.value));
        }
        if (rhs.requires_grad) {
            rhs.accumulate(self.grad.cwiseProduct(lhs.value));
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b)
{
    require_same_shape(a, b, "div");
    return make_result(a.value().cwiseQuotient(b.value()), {a.node(), b.node()}, [](Node& self) {
        Node& num = *self.parents[0];
        Node& den = *self.parents[1];
        if (num.requires_grad) {
            num.accumulate(self.grad.cwiseQuotient(den.value));
        }
        if (den.requires_grad) {
            den.accumulate(-self.grad.cwiseProduct(self.value).cwiseQuotient(den.value));
        }
    });
}

Tensor scale(const Tensor& a, double s)
{
    return make_result(a.value() * s, {a.node()}, [s](Node& self) { self.parents[0]->accumulate(self.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s)
{
    Matrix y = a.value().array() + s;
    return make_result(std::move(y), {a.node()}, [](Node& self) { self.parents[0]->accumulate(self.grad); });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Matrix tanh_values(const Matrix& x)
{
    // Vectorizes through exp; std::tanh on doubles does not.
    return 1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0);
}

Tensor tanh(const Tensor& x)
{
    Matrix y = tanh_values(x.value());
    return make_result(std::move(y), {x.node()}, [](Node& self) {
        Node& in = *self.parents[0];
        if (!in.requires_grad) {
            return;
        }
        in.accumulate(self.grad.cwiseProduct((1.0 - self.value.array().square()).matrix()));
    });
}

Tensor relu(const Tensor& x)
{
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x)
{
    return unary(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x)
{
    return unary(
        x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x)
{
    return unary(
        x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x)
{
    return unary(
        x, [](double v) { return std::sqrt(v); }, [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor softplus(const Tensor& x)
{
    return unary(
        x,
        [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
        [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor clamp(const Tensor& x, double lo, double hi)
{
    return unary(
        x, [lo, hi](double v) { return v < lo ? lo : (v > hi ? hi : v); },
        [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& x)
{
    Matrix y(1, 1);
    y(0, 0) = x.value().sum();
    return make_result(std::move(y), {x.node()}, [](Node& self) {
        Node& in = *self.parents[0];
        in.accumulate(Matrix::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0)));
    });
}

Tensor mean(const Tensor& x)
{
    if (x.size() == 0) {
        throw DimensionError("mean of empty tensor");
    }
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor row_sum(const Tensor& x)
{
    Matrix y = x.value().rowwise().sum();
    return make_result(std::move(y), {x.node()}, [](Node& self) {
        Node& in = *self.parents[0];
        Matrix g(in.value.rows(), in.value.cols());
        g.colwise() = self.grad.col(0);
        in.accumulate(g);
    });
}

Tensor row_mean(const Tensor& x)
{
    if (x.cols() == 0) {
        throw DimensionError("row_mean over zero columns");
    }
    return scale(row_sum(x), 1.0 / static_cast<double>(x.cols()));
}

namespace {

Tensor row_select(const Tensor& x, bool take_max)
{
    if (x.cols() == 0) {
        throw DimensionError("row reduction over zero columns");
    }
    const Index rows = x.rows();
    std::vector<Index> arg(static_cast<std::size_t>(rows));
    Matrix y(rows, 1);
    for (Index i = 0; i < rows; ++i) {
        Index best = 0;
        if (take_max) {
            y(i, 0) = x.value().row(i).maxCoeff(&best);
        } else {
            y(i, 0) = x.value().row(i).minCoeff(&best);
        }
        arg[static_cast<std::size_t>(i)] = best;
    }
    return make_result(std::move(y), {x.node()}, [arg = std::move(arg)](Node& self) {
        Node& in = *self.parents[0];
        Matrix g = Matrix::Zero(in.value.rows(), in.value.cols());
        for (Index i = 0; i < g.rows(); ++i) {
            g(i, arg[static_cast<std::size_t>(i)]) = self.grad(i, 0);
        }
        in.accumulate(g);
    });
}

}  // namespace

Tensor row_max(const Tensor& x) { return row_select(x, true); }
Tensor row_min(const Tensor& x) { return row_select(x, false); }

Tensor broadcast_cols(const Tensor& x, Index n)
{
    if (x.cols() != 1) {
        throw DimensionError("broadcast_cols needs a column, got " + shape_string(x.value()));
    }
    Matrix y(x.rows(), n);
    y.colwise() = x.value().col(0);
    return make_result(std::move(y), {x.node()}, [](Node& self) {
        self.parents[0]->accumulate(self.grad.rowwise().sum());
    });
}

Tensor concat_cols(std::span<const Tensor> parts)
{
    if (parts.empty()) {
        throw DimensionError("concat_cols of nothing");
    }
    const Index rows = parts.front().rows();
    Index total = 0;
    std::vector<NodePtr> parents;
    std::vector<Index> offsets;
    for (const auto& p : parts) {
        if (p.rows() != rows) {
            throw DimensionError("concat_cols: row count mismatch");
        }
        offsets.push_back(total);
        total += p.cols();
        parents.push_back(p.node());
    }
    Matrix y(rows, total);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        y.middleCols(offsets[k], parts[k].cols()) = parts[k].value();
    }
    return make_result(std::move(y), std::move(parents), [offsets = std::move(offsets)](Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            Node& p = *self.parents[k];
            if (p.requires_grad) {
                p.accumulate(self.grad.middleCols(offsets[k], p.value.cols()));
            }
        }
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b)
{
    const std::array<Tensor, 2> parts{a, b};
    return concat_cols(std::span<const Tensor>(parts));
}

Tensor slice_cols(const Tensor& x, Index start, Index count)
{
    if (start < 0 || count < 0 || start + count > x.cols()) {
        throw DimensionError("slice_cols out of range on " + shape_string(x.value()));
    }
    Matrix y = x.value().middleCols(start, count);
    return make_result(std::move(y), {x.node()}, [start, count](Node& self) {
        Node& in = *self.parents[0];
        Matrix g = Matrix::Zero(in.value.rows(), in.value.cols());
        g.middleCols(start, count) = self.grad;
        in.accumulate(g);
    });
}

}  // namespace ro2o::ad
