#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "json.hpp"
#include "ro2o/linmdp/checks.hpp"

#include <algorithm>
#include <numeric>

using namespace ro2o::linmdp;

namespace {

MatD random_pd(int d, Rng& rng)
{
    std::normal_distribution<double> g;
    MatD a(d, d);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a.data()[i] = g(rng);
    }
    return a * a.transpose() + 0.5 * MatD::Identity(d, d);
}

VecD random_vec(int d, Rng& rng)
{
    std::normal_distribution<double> g;
    VecD v(d);
    for (int i = 0; i < d; ++i) {
        v(i) = g(rng);
    }
    return v;
}

LinearMdpDataset<double> plain_dataset(const MatD& x, const VecD& y)
{
    LinearMdpDataset<double> ds;
    ds.in_features = x;
    ds.in_targets = y;
    ds.ood_features = MatD(0, x.cols());
    ds.ood_targets = VecD(0);
    return ds;
}

}  // namespace

// ---- LSVI ------------------------------------------------------------------

TEST_CASE("plain regression matches the normal equations")
{
    MatD x(3, 2);
    x << 1.0, 0.0, 0.5, 0.5, 0.0, 1.0;
    VecD y(3);
    y << 1.0, 2.0, -1.0;
    const auto ds = plain_dataset(x, y);
    const auto sol = lsvi_solve(ds);
    const VecD oracle = (x.transpose() * x).inverse() * x.transpose() * y;
    CHECK_FALSE(sol.ridge_used);
    CHECK((sol.weights - oracle).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero-difference robust pairs change nothing")
{
    Rng rng(1);
    auto ds = make_synthetic_dataset({4, 20, 10, 0, 2, 0.2}, rng);
    ds.robust.clear();
    const VecD base = lsvi_solve(ds).weights;
    for (int i = 0; i < 3; ++i) {
        const VecD anchor = ds.in_features.row(i).transpose();
        ds.robust.push_back({anchor, anchor.transpose().replicate(3, 1)});
    }
    CHECK(build_covariance(ds).robust.cwiseAbs().maxCoeff() == 0.0);
    CHECK((lsvi_solve(ds).weights - base).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("the solution is a stationary point of the objective")
{
    Rng rng(2);
    const auto ds = make_synthetic_dataset({6, 40, 20, 8, 2, 0.2}, rng);
    const auto sol = lsvi_solve(ds);
    const double h = 1e-6;
    VecD grad(ds.dim());
    for (Eigen::Index i = 0; i < ds.dim(); ++i) {
        VecD up = sol.weights;
        VecD down = sol.weights;
        up(i) += h;
        down(i) -= h;
        grad(i) = (lsvi_objective(ds, up, sol.ridge) - lsvi_objective(ds, down, sol.ridge)) / (2.0 * h);
    }
    CHECK(grad.norm() <= 1e-8);
}

TEST_CASE("a singular covariance without ridge is refused")
{
    MatD x(2, 3);
    x << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0;
    const auto ds = plain_dataset(x, VecD::Ones(2));
    CHECK_THROWS_AS((void)lsvi_solve(ds, 0.0), FactorizationError);
    const auto with_ridge = lsvi_solve(ds);
    CHECK(with_ridge.ridge_used);
}

TEST_CASE("row order does not matter")
{
    Rng rng(3);
    const auto ds = make_synthetic_dataset({5, 30, 12, 6, 2, 0.2}, rng);
    auto shuffled = ds;
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < 30; ++i) {
        shuffled.in_features.row(i) = ds.in_features.row(perm[static_cast<std::size_t>(i)]);
        shuffled.in_targets(i) = ds.in_targets(perm[static_cast<std::size_t>(i)]);
    }
    std::reverse(shuffled.robust.begin(), shuffled.robust.end());
    CHECK((lsvi_solve(shuffled).weights - lsvi_solve(ds).weights).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((build_covariance(shuffled).total() - build_covariance(ds).total()).cwiseAbs().maxCoeff() <= 1e-12);
}

// ---- covariance ------------------------------------------------------------

TEST_CASE("covariance hand examples")
{
    MatD e1(1, 2);
    e1 << 1.0, 0.0;
    const auto c = build_covariance(plain_dataset(e1, VecD::Ones(1)));
    MatD want = MatD::Zero(2, 2);
    want(0, 0) = 1.0;
    CHECK((c.in - want).cwiseAbs().maxCoeff() == 0.0);

    VecD delta(2);
    delta << 0.3, -0.1;
    VecD anchor(2);
    anchor << 0.2, 0.4;
    LinearMdpDataset<double> ds = plain_dataset(e1, VecD::Ones(1));
    MatD pert(2, 2);
    pert.row(0) = (anchor + delta).transpose();
    pert.row(1) = (anchor - delta).transpose();
    ds.robust.push_back({anchor, pert});
    CHECK((build_covariance(ds).robust - delta * delta.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("random covariance components are symmetric and PSD")
{
    Rng rng(4);
    const auto c = build_covariance(make_synthetic_dataset({6, 40, 20, 8, 2, 0.2}, rng));
    for (const MatD* m : {&c.in, &c.ood, &c.robust}) {
        CHECK((*m - m->transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(min_eigenvalue(*m) >= -1e-10);
    }
    CHECK(min_eigenvalue(c.total()) > 0.0);
}

TEST_CASE("covariance is half the objective Hessian")
{
    CHECK(check_hessian_consistency({5, 30, 10, 6, 2, 0.2}, 5).passed());
}

// ---- LCB -------------------------------------------------------------------

TEST_CASE("lcb hand values")
{
    const LcbQuantifier<double> id(MatD::Identity(3, 3), 1.0);
    CHECK(id.gamma(VecD::Unit(3, 0)) == 1.0);

    MatD tab = MatD::Identity(3, 3);
    tab(1, 1) = 4.0;
    CHECK(LcbQuantifier<double>(tab, 1.0).gamma(VecD::Unit(3, 1)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS((void)id.gamma(VecD::Ones(2)));
}

TEST_CASE("lcb matches a dense inverse")
{
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        const MatD lambda = random_pd(5, rng);
        const VecD phi = random_vec(5, rng);
        const double beta = 0.5 + t * 0.1;
        const LcbQuantifier<double> q(lambda, beta);
        const double oracle = beta * std::sqrt(phi.dot(lambda.inverse() * phi));
        CHECK(std::abs(q.gamma(phi) - oracle) <= 1e-10);
    }
}

TEST_CASE("adding data never raises gamma")
{
    Rng rng(7);
    const MatD lambda = random_pd(4, rng);
    const LcbQuantifier<double> before(lambda, 1.0);
    for (int t = 0; t < 50; ++t) {
        const VecD v = random_vec(4, rng);
        const LcbQuantifier<double> after(lambda + v * v.transpose(), 1.0);
        const VecD phi = random_vec(4, rng);
        CHECK(after.gamma(phi) <= before.gamma(phi) + 1e-12);
    }
}

TEST_CASE("a duplicated point lowers gamma as Sherman-Morrison predicts")
{
    Rng rng(8);
    const MatD lambda = random_pd(4, rng);
    const VecD phi = random_vec(4, rng);
    const LcbQuantifier<double> before(lambda, 1.0);
    const LcbQuantifier<double> after(lambda + phi * phi.transpose(), 1.0);
    const double q = before.quadratic(phi);
    CHECK(after.quadratic(phi) == doctest::Approx(q / (1.0 + q)).epsilon(1e-10));
    CHECK(after.gamma(phi) < before.gamma(phi));
    const LcbQuantifier<double> same(lambda + MatD::Zero(4, 4), 1.0);
    CHECK(same.gamma(phi) == before.gamma(phi));
}

// ---- tabular ---------------------------------------------------------------

TEST_CASE("tabular gamma")
{
    const auto g = tabular_gamma<double>({1.0, 100.0, 4.0}, 1.0);
    CHECK(g[0] == 1.0);
    CHECK(g[2] == 0.5);
    CHECK(tabular_gamma<double>({100.0}, 2.0)[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(std::isinf(tabular_gamma<double>({0.0}, 1.0)[0]));
    CHECK(tabular_gamma<double>({0.0}, 1.0, 1e-6)[0] == doctest::Approx(1e3));
    CHECK_THROWS((void)tabular_gamma<double>({-1.0}, 1.0));
    const auto rep = check_tabular(12, 1.5, 9);
    CHECK(rep.passed());
    CHECK(rep.worst_margin >= 0.0);
}

// ---- theory checks ---------------------------------------------------------

TEST_CASE("lemma 1: full-rank differences are PD, rank-deficient are not")
{
    const auto pos = check_lemma1({}, 1);
    CHECK(pos.trials == 100);
    CHECK(pos.violations == 0);
    CHECK(check_lemma1_negative({}, 1).passed());

    Rng rng(2);
    MatD anchors = random_ball_features(3, 3, 0.5, rng);
    const auto groups = rank_deficient_robust_set(anchors, 4, 0.2, rng);
    LinearMdpDataset<double> ds = plain_dataset(MatD(0, 3), VecD(0));
    ds.robust = groups;
    CHECK(std::abs(min_eigenvalue(build_covariance(ds).robust)) <= 1e-12);
    ds.robust = full_rank_robust_set(anchors, 1, 0.2, rng);
    CHECK(min_eigenvalue(build_covariance(ds).robust) > 0.0);
}

TEST_CASE("theorem 1: robust data strictly shrinks gamma")
{
    const auto rep = check_theorem1({}, 3);
    CHECK(rep.trials == 1000);
    CHECK(rep.violations == 0);
    CHECK(rep.worst_margin > 0.0);
    CHECK(check_theorem1_ood_extreme(3).passed());
}

TEST_CASE("theorem 2: online batches never raise gamma")
{
    const auto rep = check_theorem2({}, 4);
    CHECK(rep.trials == 10 * 200 + 1);  // plus the trajectory-sum check
    CHECK(rep.violations == 0);
}

TEST_CASE("lemma 2: posterior variance matches the quadratic form")
{
    const auto rep = check_lemma2({}, 5);
    CHECK(rep.trials == 20);
    CHECK(rep.violations == 0);

    // Lambda = I, phi = e1: empirical variance within 0.02 of 1.
    Rng rng(6);
    std::normal_distribution<double> g;
    double s = 0.0, s2 = 0.0;
    const int k = 100000;
    for (int i = 0; i < k; ++i) {
        const double v = g(rng);
        s += v;
        s2 += v * v;
    }
    const double var = s2 / k - (s / k) * (s / k);
    CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("xi-uncertainty coverage after calibration")
{
    const auto xi = check_xi_uncertainty({}, 7);
    CHECK(xi.report.passed());
    CHECK(xi.coverage >= 0.9);
    CHECK(xi.beta >= 0.1);
    CHECK(xi.beta <= 10.0);
}

TEST_CASE("theory checks hold across seeds")
{
    Theorem1Options t1;
    t1.queries = 200;
    Theorem2Options t2;
    t2.queries = 50;
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        CHECK(check_lemma1({}, seed).passed());
        CHECK(check_theorem1(t1, seed).passed());
        CHECK(check_theorem2(t2, seed).passed());
    }
}

TEST_CASE("report json carries the documented keys")
{
    const auto rep = check_tabular(4, 1.0, 1);
    const auto j = nlohmann::json::parse(rep.to_json());
    for (const char* key : {"check", "trials", "violations", "worst_margin", "ridge_used", "seed"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["seed"] == 1);
}

TEST_CASE("synthetic linear MDP is well formed")
{
    Rng rng(11);
    const auto mdp = make_linear_mdp(6, 20, 3, 8, rng);
    CHECK_NOTHROW(mdp.validate());
    for (int s = 0; s < 20; ++s) {
        for (int a = 0; a < 3; ++a) {
            CHECK(mdp.phi(s, a).norm() <= 1.0 + 1e-12);
            CHECK(mdp.reward(s, a) >= 0.0);
            CHECK(mdp.reward(s, a) <= 1.0);
        }
    }
    const VecD zero = VecD::Zero(20);
    CHECK(mdp.bellman(2, 1, zero) == doctest::Approx(mdp.reward(2, 1)));
}
