#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ro2o/critic/ensemble_critic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ro2o;
using ad::Matrix;
using ad::Tensor;
using critic::EnsembleCritic;
using critic::TargetMode;

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

ad::Mlp linear_head(const Matrix& w)
{
    auto net = ad::Mlp::zeros({w.rows(), 1});
    net.layers()[0].weight.mutable_value() = w;
    return net;
}

}  // namespace

TEST_CASE("zero-initialised members output zero")
{
    std::vector<ad::Mlp> members{ad::Mlp::zeros({3, 4, 1}), ad::Mlp::zeros({3, 4, 1})};
    const EnsembleCritic c(2, 1, members);
    const Matrix q = c.q_values(random_matrix(5, 2, 1), random_matrix(5, 1, 2));
    CHECK(q.rows() == 5);
    CHECK(q.cols() == 2);
    CHECK(q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand-set linear heads give w_i^T x")
{
    Matrix w1(3, 1), w2(3, 1);
    w1 << 1.0, 2.0, -1.0;
    w2 << 0.5, 0.0, 3.0;
    const EnsembleCritic c(2, 1, {linear_head(w1), linear_head(w2)});
    Matrix s(1, 2), a(1, 1);
    s << 1.0, -2.0;
    a << 4.0;
    const Matrix q = c.q_values(s, a);
    CHECK(q(0, 0) == doctest::Approx(1.0 - 4.0 - 4.0));
    CHECK(q(0, 1) == doctest::Approx(0.5 + 12.0));
    const Tensor qt = c.q_all(Tensor::constant(s), Tensor::constant(a));
    CHECK((qt.value() - q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical members agree and have zero uncertainty")
{
    ad::Mlp net({3, 8, 1}, ad::Activation::Tanh, 4);
    const EnsembleCritic c(2, 1, {net.clone(), net.clone(), net.clone()});
    const Matrix q = c.q_values(random_matrix(6, 2, 3), random_matrix(6, 1, 4));
    CHECK((q.col(0) - q.col(2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(critic::uncertainty(q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("members are initialised independently")
{
    const EnsembleCritic c(2, 1, {4, {8}, ad::Activation::Tanh, 1.0}, 9);
    const Matrix q = c.q_values(random_matrix(3, 2, 5), random_matrix(3, 1, 6));
    CHECK(critic::uncertainty(q).minCoeff() > 0.0);
}

TEST_CASE("terminal transitions target the reward in every mode")
{
    Matrix tq(1, 3);
    tq << 1.0, 5.0, -2.0;
    const Matrix r = Matrix::Constant(1, 1, 0.7);
    const Matrix done = Matrix::Zero(1, 1);
    const Matrix logp = Matrix::Constant(1, 1, -1.0);
    for (auto mode : {TargetMode::SharedMin, TargetMode::Independent, TargetMode::SharedMax}) {
        const Matrix y = critic::td_target(tq, r, done, logp, mode, 0.99, 0.3);
        CHECK((y.array() == 0.7).all());
    }
}

TEST_CASE("target modes on {1, 3}")
{
    Matrix tq(1, 2);
    tq << 1.0, 3.0;
    const Matrix zero = Matrix::Zero(1, 1);
    const Matrix one = Matrix::Ones(1, 1);
    const Matrix min = critic::td_target(tq, zero, one, zero, TargetMode::SharedMin, 1.0, 0.0);
    const Matrix ind = critic::td_target(tq, zero, one, zero, TargetMode::Independent, 1.0, 0.0);
    const Matrix max = critic::td_target(tq, zero, one, zero, TargetMode::SharedMax, 1.0, 0.0);
    CHECK(min(0, 0) == 1.0);
    CHECK(min(0, 1) == 1.0);
    CHECK(ind(0, 0) == 1.0);
    CHECK(ind(0, 1) == 3.0);
    CHECK(max(0, 0) == 3.0);
    CHECK(max(0, 1) == 3.0);
}

TEST_CASE("entropy-corrected target by hand")
{
    Matrix tq(1, 2);
    tq << 1.0, 4.0;
    const Matrix y = critic::td_target(tq, Matrix::Constant(1, 1, 0.1), Matrix::Ones(1, 1),
                                       Matrix::Constant(1, 1, -2.0), TargetMode::SharedMin, 0.99, 0.5);
    CHECK(y(0, 0) == doctest::Approx(2.08).epsilon(1e-14));
}

TEST_CASE("target ordering: min <= independent <= max")
{
    const Matrix tq = random_matrix(50, 5, 7);
    const Matrix r = random_matrix(50, 1, 8);
    const Matrix nt = (random_matrix(50, 1, 9).array() > 0.0).cast<double>();
    const Matrix lp = random_matrix(50, 1, 10);
    const Matrix lo = critic::td_target(tq, r, nt, lp, TargetMode::SharedMin, 0.9, 0.2);
    const Matrix mid = critic::td_target(tq, r, nt, lp, TargetMode::Independent, 0.9, 0.2);
    const Matrix hi = critic::td_target(tq, r, nt, lp, TargetMode::SharedMax, 0.9, 0.2);
    CHECK(((lo.array() <= mid.array()) && (mid.array() <= hi.array())).all());
}

TEST_CASE("uncertainty hand values")
{
    const std::vector<double> two{1.0, 3.0};
    CHECK(critic::uncertainty(two) == 1.0);
    const std::vector<double> four{0.0, 0.0, 0.0, 4.0};
    CHECK(critic::uncertainty(four) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    const std::vector<double> same{2.5, 2.5, 2.5};
    CHECK(critic::uncertainty(same) == 0.0);
}

TEST_CASE("uncertainty tensor form matches and differentiates")
{
    auto q = Tensor::parameter(random_matrix(4, 5, 11));
    const Tensor u = critic::uncertainty(q);
    CHECK((u.value() - critic::uncertainty(q.value())).cwiseAbs().maxCoeff() <= 1e-14);
    ad::backward(ad::sum(u));
    // d std / d q_j = (q_j - mean) / (N std)
    const Matrix& v = q.value();
    for (ad::Index b = 0; b < v.rows(); ++b) {
        const double m = v.row(b).mean();
        const double s = critic::uncertainty(Matrix(v.row(b)))(0, 0);
        for (ad::Index j = 0; j < v.cols(); ++j) {
            CHECK(q.grad()(b, j) == doctest::Approx((v(b, j) - m) / (5.0 * s)).epsilon(1e-10));
        }
    }
}

TEST_CASE("polyak update")
{
    auto make = [](double v) {
        auto net = ad::Mlp::zeros({2, 1});
        net.layers()[0].weight.mutable_value().setConstant(v);
        return net;
    };
    EnsembleCritic c(1, 1, {make(2.0), make(2.0)});
    c.targets()[0].layers()[0].weight.mutable_value().setZero();

    c.polyak_update(0.5);
    CHECK(c.targets()[0].layers()[0].weight.value()(0, 0) == 1.0);

    double gap = 1.0;
    for (int i = 0; i < 10; ++i) {
        c.polyak_update(0.5);
        const double now = std::abs(c.targets()[0].layers()[0].weight.value()(0, 0) - 2.0);
        CHECK(now == doctest::Approx(gap / 2.0).epsilon(1e-12));
        gap = now;
    }
    c.polyak_update(1.0);
    CHECK(c.targets()[0].layers()[0].weight.value()(0, 0) == 2.0);
    CHECK_THROWS(c.polyak_update(0.0));
}

TEST_CASE("target networks never receive gradients")
{
    EnsembleCritic c(2, 1, {3, {8}, ad::Activation::Tanh, 1.0}, 1);
    const Matrix s = random_matrix(4, 2, 2);
    const Matrix a = random_matrix(4, 1, 3);
    const Matrix y = c.target_values(s, a);
    const Tensor q = c.q_all(Tensor::constant(s), Tensor::constant(a));
    ad::backward(ad::mean(ad::square(ad::sub(q, Tensor::constant(y)))));
    for (const auto& t : c.targets()) {
        for (const auto& p : t.parameters()) {
            CHECK_FALSE(p.has_grad());
        }
    }
    bool member_grad = false;
    for (const auto& p : c.parameters()) {
        member_grad = member_grad || p.has_grad();
    }
    CHECK(member_grad);
}

TEST_CASE("frozen evaluation passes gradients to actions only")
{
    EnsembleCritic c(2, 1, {2, {8}, ad::Activation::Tanh, 1.0}, 5);
    auto a = Tensor::parameter(random_matrix(3, 1, 6));
    ad::backward(ad::sum(c.q_all_frozen(Tensor::constant(random_matrix(3, 2, 7)), a)));
    CHECK(a.has_grad());
    for (const auto& p : c.parameters()) {
        CHECK_FALSE(p.has_grad());
    }
}

TEST_CASE("checkpoint restores members and targets")
{
    EnsembleCritic c(2, 1, {3, {6}, ad::Activation::Relu, 1.0}, 8);
    c.members()[1].layers()[0].weight.mutable_value()(0, 0) += 1.0;
    ad::Checkpoint ck;
    c.store(ck);
    const auto back = EnsembleCritic::restore(ck, 2, 1);
    const Matrix s = random_matrix(4, 2, 9);
    const Matrix a = random_matrix(4, 1, 10);
    CHECK(back.size() == 3);
    CHECK((back.q_values(s, a) - c.q_values(s, a)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.target_values(s, a) - c.target_values(s, a)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input shape errors")
{
    const EnsembleCritic c(2, 1, {2, {4}, ad::Activation::Tanh, 1.0}, 1);
    CHECK_THROWS_AS((void)c.q_values(Matrix::Zero(3, 3), Matrix::Zero(3, 1)), ad::DimensionError);
    CHECK_THROWS_AS((void)c.q_values(Matrix::Zero(3, 2), Matrix::Zero(2, 1)), ad::DimensionError);
}
