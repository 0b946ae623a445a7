#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fd_check.hpp"
#include "ro2o/autodiff/adam.hpp"
#include "ro2o/autodiff/checkpoint.hpp"
#include "ro2o/autodiff/mlp.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace ro2o;
using ad::Matrix;
using ad::Tensor;

namespace {

Matrix random_matrix(ad::Index r, ad::Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Matrix m(r, c);
    for (ad::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = n01(rng);
    }
    return m;
}

}  // namespace

TEST_CASE("zero network maps anything to zero")
{
    const auto net = ad::Mlp::zeros({3, 5, 2});
    const Matrix out = net.predict(random_matrix(4, 3, 1));
    CHECK(out.rows() == 4);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single identity layer is the identity")
{
    auto net = ad::Mlp::zeros({2, 2});
    net.layers()[0].weight.mutable_value() = Matrix::Identity(2, 2);
    const Matrix x = random_matrix(3, 2, 2);
    CHECK((net.predict(x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-layer net matches hand evaluation")
{
    auto net = ad::Mlp::zeros({2, 2, 1}, ad::Activation::Tanh);
    net.layers()[0].weight.mutable_value() << 1.0, 2.0, 3.0, 4.0;
    net.layers()[0].bias.mutable_value() << 0.5, -0.5;
    net.layers()[1].weight.mutable_value() << 1.0, -1.0;
    net.layers()[1].bias.mutable_value() << 0.25;
    Matrix x(1, 2);
    x << 1.0, -1.0;
    // hidden pre-activations: [1 - 3 + 0.5, 2 - 4 - 0.5]
    const double expected = std::tanh(-1.5) - std::tanh(-2.5) + 0.25;
    CHECK(net.predict(x)(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(net.forward(Tensor::constant(x)).item() == doctest::Approx(expected).epsilon(1e-14));

    auto relu = ad::Mlp::zeros({2, 2, 1}, ad::Activation::Relu);
    relu.layers()[0].weight.mutable_value() << 1.0, 2.0, 3.0, 4.0;
    relu.layers()[1].weight.mutable_value() << 1.0, 1.0;
    Matrix y(1, 2);
    y << 1.0, 1.0;
    CHECK(relu.predict(y)(0, 0) == doctest::Approx(4.0 + 6.0));
}

TEST_CASE("linear and quadratic gradients")
{
    Matrix xv(1, 3);
    xv << 0.5, -2.0, 3.0;
    auto w = Tensor::parameter(Matrix::Constant(1, 3, 0.7));
    ad::backward(ad::sum(ad::mul(w, Tensor::constant(xv))));
    CHECK((w.grad() - xv).cwiseAbs().maxCoeff() == 0.0);

    auto v = Tensor::parameter(Matrix::Constant(1, 1, 5.0));
    ad::backward(ad::sum(ad::square(ad::add_scalar(v, -3.0))));
    CHECK(v.grad()(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("random two-layer net gradients agree with finite differences")
{
    for (auto act : {ad::Activation::Tanh, ad::Activation::Relu}) {
        ad::Mlp net({4, 8, 3}, act, 11);
        const Tensor x = Tensor::constant(random_matrix(5, 4, 3));
        const Matrix target = random_matrix(5, 3, 4);
        auto loss = [&] { return ad::mean(ad::square(ad::sub(net.forward(x), Tensor::constant(target)))); };
        CHECK(testing::max_gradient_error(net.parameters(), loss) <= 1e-4);
    }
}

TEST_CASE("elementwise and reduction ops agree with finite differences")
{
    auto a = Tensor::parameter(random_matrix(3, 4, 5));
    auto b = Tensor::parameter(random_matrix(3, 4, 6).array().abs() + 0.5);
    auto loss = [&] {
        Tensor t = ad::add(ad::mul(ad::tanh(a), ad::log(b)), ad::div(ad::exp(ad::scale(a, 0.3)), b));
        t = ad::add(t, ad::softplus(ad::neg(a)));
        t = ad::add(t, ad::sqrt(ad::add_scalar(ad::square(a), 1.0)));
        Tensor rows = ad::add(ad::row_max(t), ad::row_min(t));
        rows = ad::add(rows, ad::row_mean(ad::slice_cols(t, 1, 2)));
        Tensor wide = ad::concat_cols(rows, ad::row_sum(t));
        return ad::sum(ad::mul(wide, ad::broadcast_cols(rows, 2)));
    };
    CHECK(testing::max_gradient_error({a, b}, loss) <= 1e-4);
}

TEST_CASE("matmul and linear gradients")
{
    auto x = Tensor::parameter(random_matrix(3, 4, 7));
    auto w = Tensor::parameter(random_matrix(4, 2, 8));
    auto b = Tensor::parameter(random_matrix(1, 2, 9));
    auto loss = [&] { return ad::sum(ad::square(ad::add(ad::linear(x, w, b), ad::matmul(x, w)))); };
    CHECK(testing::max_gradient_error({x, w, b}, loss) <= 1e-4);
}

TEST_CASE("shape mismatch is reported")
{
    const auto a = Tensor::constant(Matrix::Zero(2, 3));
    const auto b = Tensor::constant(Matrix::Zero(3, 2));
    CHECK_THROWS_AS((void)ad::add(a, b), ad::DimensionError);
    CHECK_THROWS_AS((void)ad::matmul(a, a), ad::DimensionError);
}

TEST_CASE("detach blocks gradients and clamp passes only inside")
{
    auto p = Tensor::parameter(Matrix::Constant(1, 2, 2.0));
    ad::backward(ad::sum(ad::mul(p, ad::detach(p))));
    CHECK(p.grad()(0, 0) == doctest::Approx(2.0));

    auto q = Tensor::parameter((Matrix(1, 3) << -2.0, 0.0, 2.0).finished());
    ad::backward(ad::sum(ad::clamp(q, -1.0, 1.0)));
    CHECK(q.grad()(0, 0) == 0.0);
    CHECK(q.grad()(0, 1) == 1.0);
    CHECK(q.grad()(0, 2) == 0.0);
}

TEST_CASE("tanh_values matches std::tanh")
{
    Matrix x = random_matrix(4, 50, 12) * 5.0;
    x(0, 0) = 40.0;
    x(0, 1) = -40.0;
    x(0, 2) = 0.0;
    const Matrix y = ad::tanh_values(x);
    for (ad::Index i = 0; i < x.size(); ++i) {
        CHECK(y.data()[i] == doctest::Approx(std::tanh(x.data()[i])).epsilon(1e-13));
    }
}

TEST_CASE("adam with zero gradient leaves parameters alone")
{
    auto p = Tensor::parameter(Matrix::Constant(2, 2, 1.5));
    std::vector<Tensor> params{p};
    ad::AdamState st(params, {});
    ad::adam_step(st, params);
    CHECK(st.step == 1);
    CHECK((p.value().array() == 1.5).all());
}

TEST_CASE("adam moves against a constant gradient")
{
    auto p = Tensor::parameter(Matrix::Zero(1, 2));
    std::vector<Tensor> params{p};
    ad::AdamState st(params, {0.01, 0.9, 0.999, 1e-8});
    for (int i = 0; i < 50; ++i) {
        p.zero_grad();
        p.node()->accumulate((Matrix(1, 2) << 3.0, -0.5).finished());
        ad::adam_step(st, params);
    }
    CHECK(p.value()(0, 0) < 0.0);
    CHECK(p.value()(0, 1) > 0.0);
}

TEST_CASE("adam step from known moments matches the recurrence")
{
    auto p = Tensor::parameter(Matrix::Constant(1, 1, 1.0));
    std::vector<Tensor> params{p};
    ad::AdamState st(params, {0.1, 0.9, 0.999, 1e-8});
    st.first_moment[0](0, 0) = 0.2;
    st.second_moment[0](0, 0) = 0.05;
    st.step = 3;
    p.node()->accumulate(Matrix::Constant(1, 1, 0.4));
    ad::adam_step(st, params);

    const double m = 0.9 * 0.2 + 0.1 * 0.4;
    const double v = 0.999 * 0.05 + 0.001 * 0.16;
    const double mhat = m / (1.0 - std::pow(0.9, 4));
    const double vhat = v / (1.0 - std::pow(0.999, 4));
    CHECK(p.value()(0, 0) == doctest::Approx(1.0 - 0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-14));
}

TEST_CASE("adam rejects non-finite gradients")
{
    auto p = Tensor::parameter(Matrix::Constant(1, 1, 1.0));
    std::vector<Tensor> params{p};
    ad::AdamState st(params, {});
    p.node()->accumulate(Matrix::Constant(1, 1, std::nan("")));
    CHECK_THROWS_AS(ad::adam_step(st, params), ad::NonFiniteError);
    CHECK(p.value()(0, 0) == 1.0);
}

TEST_CASE("checkpoint round trip is exact and byte-stable")
{
    ad::Checkpoint ck;
    ck.networks["net"] = ad::Mlp({3, 4, 1}, ad::Activation::Relu, 5);
    ck.matrices["m"] = random_matrix(2, 3, 6);
    ck.strings["note"] = "hello";

    std::stringstream first;
    ad::write_checkpoint(ck, first);
    const std::string bytes = first.str();
    CHECK(bytes.compare(0, 8, std::string(ad::kCheckpointMagic, 8)) == 0);

    std::stringstream in(bytes);
    const auto back = ad::read_checkpoint(in);
    const Matrix x = random_matrix(5, 3, 7);
    CHECK((back.networks.at("net").predict(x) - ck.networks.at("net").predict(x)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.networks.at("net").activation() == ad::Activation::Relu);
    CHECK((back.matrices.at("m") - ck.matrices.at("m")).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.strings.at("note") == "hello");

    std::stringstream second;
    ad::write_checkpoint(back, second);
    CHECK(second.str() == bytes);
}

TEST_CASE("checkpoint with a bad header is refused")
{
    std::stringstream junk("NOTACKPTxxxxxxxxxxxx");
    CHECK_THROWS_AS((void)ad::read_checkpoint(junk), ad::CheckpointError);
}

TEST_CASE("clone is independent, copies share parameters")
{
    ad::Mlp a({2, 3, 1}, ad::Activation::Tanh, 1);
    ad::Mlp shared = a;
    ad::Mlp cloned = a.clone();
    a.layers()[0].weight.mutable_value().setZero();
    CHECK(shared.layers()[0].weight.value().cwiseAbs().maxCoeff() == 0.0);
    CHECK(cloned.layers()[0].weight.value().cwiseAbs().maxCoeff() > 0.0);
}
