#include "ro2o/linmdp/checks.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ro2o::linmdp {
namespace {

using json = nlohmann::ordered_json;

json report_json(const CheckReport& r)
{
    json j;
    j["check"] = r.check;
    j["trials"] = r.trials;
    j["violations"] = r.violations;
    j["worst_margin"] = r.worst_margin;
    j["ridge_used"] = r.ridge_used;
    j["seed"] = r.seed;
    return j;
}

CheckReport make_report(std::string name, std::uint64_t seed)
{
    CheckReport r;
    r.check = std::move(name);
    r.seed = seed;
    r.worst_margin = std::numeric_limits<double>::infinity();
    return r;
}

MatD robust_covariance(const std::vector<RobustGroup<double>>& groups, int d)
{
    LinearMdpDataset<double> ds;
    ds.in_features = MatD::Zero(0, d);
    ds.in_targets = VecD::Zero(0);
    ds.ood_features = MatD::Zero(0, d);
    ds.ood_targets = VecD::Zero(0);
    ds.robust = groups;
    return build_covariance(ds).robust;
}

MatD one_hot_rows(const std::vector<int>& idx, int d)
{
    MatD out = MatD::Zero(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out(static_cast<Eigen::Index>(i), idx[i]) = 1.0;
    }
    return out;
}

}  // namespace

std::string CheckReport::to_json() const { return report_json(*this).dump(); }

CheckReport check_lemma1(const Lemma1Options& opts, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("lemma1", seed);
    for (int t = 0; t < opts.trials; ++t) {
        const MatD anchors = random_ball_features(opts.anchors, opts.d, 1.0 - opts.eps, rng);
        const MatD lam = robust_covariance(full_rank_robust_set(anchors, opts.extra, opts.eps, rng), opts.d);
        const double lo = min_eigenvalue(lam);
        ++r.trials;
        if (!(lo > 0.0) || !is_numerically_pd(lam)) {
            ++r.violations;
        }
        r.worst_margin = std::min(r.worst_margin, lo);
    }
    return r;
}

CheckReport check_lemma1_negative(const Lemma1Options& opts, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("lemma1-negative", seed);
    const MatD anchors = random_ball_features(opts.anchors, opts.d, 1.0 - opts.eps, rng);
    const MatD lam = robust_covariance(rank_deficient_robust_set(anchors, opts.d + opts.extra, opts.eps, rng), opts.d);
    const double lo = min_eigenvalue(lam);
    r.trials = 1;
    // The negative test passes when the rank-deficient set is recognised as not PD.
    const bool detected = std::abs(lo) <= 1e-12 && !is_numerically_pd(lam);
    r.violations = detected ? 0 : 1;
    r.worst_margin = 1e-12 - std::abs(lo);
    return r;
}

CheckReport check_theorem1(const Theorem1Options& opts, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("theorem1", seed);
    const auto ds = make_synthetic_dataset(opts.data, rng);
    const auto cov = build_covariance(ds);
    const LcbQuantifier<double> variant(MatD(cov.in + cov.ood), opts.beta);
    const LcbQuantifier<double> ro2o(cov.total(), opts.beta);
    r.ridge_used = variant.ridge_used() || ro2o.ridge_used();
    const MatD queries = random_ball_features(opts.queries, opts.data.d, 1.0, rng);
    for (int q = 0; q < opts.queries; ++q) {
        const VecD phi = queries.row(q).transpose();
        const double g_var = variant.gamma(phi);
        const double g_ro2o = ro2o.gamma(phi);
        ++r.trials;
        if (!(g_ro2o < g_var)) {
            ++r.violations;
        }
        r.worst_margin = std::min(r.worst_margin, g_var - g_ro2o);
    }
    return r;
}

CheckReport check_theorem1_ood_extreme(std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("theorem1-ood-extreme", seed);
    constexpr int d = 4;
    constexpr double beta = 1.0;
    // Pair 3 never appears in the in-sample or OOD data.
    LinearMdpDataset<double> ds;
    ds.in_features = one_hot_rows({0, 0, 0, 0, 0, 1, 1, 1, 2, 2}, d);
    ds.in_targets = VecD::Zero(ds.in_features.rows());
    ds.ood_features = one_hot_rows({0, 1}, d);
    ds.ood_targets = VecD::Zero(2);
    ds.robust = full_rank_robust_set(one_hot_rows({0, 1, 2}, d), 2, 0.2, rng);
    const auto cov = build_covariance(ds);

    const VecD query = VecD::Unit(d, 3);
    const LcbQuantifier<double> variant(MatD(cov.in + cov.ood), beta);
    const LcbQuantifier<double> ro2o(cov.total(), beta);
    r.ridge_used = variant.ridge_used() || ro2o.ridge_used();

    const double expected_var = beta / std::sqrt(kDefaultRidge);
    const double g_var = variant.gamma(query);
    const double cap = beta / std::sqrt(min_eigenvalue(cov.robust));
    const double g_ro2o = ro2o.gamma(query);
    r.trials = 2;
    if (!(variant.ridge_used() && std::abs(g_var - expected_var) <= 1e-6 * expected_var)) {
        ++r.violations;
    }
    if (!(g_ro2o <= cap)) {
        ++r.violations;
    }
    r.worst_margin = cap - g_ro2o;
    return r;
}

CheckReport check_theorem2(const Theorem2Options& opts, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("theorem2", seed);
    const LinearMdpSpec mdp = make_linear_mdp(opts.d, opts.n_states, opts.n_actions, opts.horizon, rng);
    std::uniform_int_distribution<int> pick_s(0, opts.n_states - 1);
    std::uniform_int_distribution<int> pick_a(0, opts.n_actions - 1);

    // Offline RO2O covariance: in-sample pairs, OOD pairs and robust groups.
    LinearMdpDataset<double> ds;
    ds.in_features.resize(opts.offline_pairs, opts.d);
    ds.ood_features.resize(opts.offline_pairs / 2, opts.d);
    for (Eigen::Index i = 0; i < ds.in_features.rows(); ++i) {
        ds.in_features.row(i) = mdp.phi(pick_s(rng), pick_a(rng)).transpose();
    }
    for (Eigen::Index i = 0; i < ds.ood_features.rows(); ++i) {
        ds.ood_features.row(i) = mdp.phi(pick_s(rng), pick_a(rng)).transpose();
    }
    ds.in_targets = VecD::Zero(ds.in_features.rows());
    ds.ood_targets = VecD::Zero(ds.ood_features.rows());
    ds.robust = full_rank_robust_set(ds.in_features.topRows(std::min<Eigen::Index>(4, ds.in_features.rows())), 2,
                                     0.05, rng);
    MatD lambda = build_covariance(ds).total();

    // A fixed deterministic evaluation policy.
    std::vector<int> policy(static_cast<std::size_t>(opts.n_states));
    for (auto& a : policy) {
        a = pick_a(rng);
    }
    auto trajectory = [&](int start, Rng& g) {
        std::vector<VecD> feats;
        int s = start;
        for (int h = 0; h < opts.horizon; ++h) {
            const int a = policy[static_cast<std::size_t>(s)];
            feats.push_back(mdp.phi(s, a));
            s = mdp.sample_next(s, a, g);
        }
        return feats;
    };

    std::vector<VecD> queries;
    for (int q = 0; q < opts.queries; ++q) {
        queries.push_back(mdp.phi(pick_s(rng), pick_a(rng)));
    }
    const std::vector<VecD> eval_traj = trajectory(pick_s(rng), rng);

    LcbQuantifier<double> before(lambda, opts.beta);
    r.ridge_used = before.ridge_used();
    std::vector<double> gamma_prev;
    for (const auto& q : queries) {
        gamma_prev.push_back(before.gamma(q));
    }
    double traj_before = 0.0;
    for (const auto& f : eval_traj) {
        traj_before += before.gamma(f);
    }

    for (int b = 0; b < opts.batches; ++b) {
        for (int e = 0; e < opts.batch_episodes; ++e) {
            for (const auto& f : trajectory(pick_s(rng), rng)) {
                lambda += f * f.transpose();
            }
        }
        const LcbQuantifier<double> after(lambda, opts.beta);
        r.ridge_used = r.ridge_used || after.ridge_used();
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const double g = after.gamma(queries[q]);
            ++r.trials;
            if (g > gamma_prev[q] + opts.tolerance) {
                ++r.violations;
            }
            r.worst_margin = std::min(r.worst_margin, gamma_prev[q] - g);
            gamma_prev[q] = g;
        }
    }
    const LcbQuantifier<double> final_q(lambda, opts.beta);
    double traj_after = 0.0;
    for (const auto& f : eval_traj) {
        traj_after += final_q.gamma(f);
    }
    ++r.trials;
    if (!(traj_after < traj_before)) {
        ++r.violations;
    }
    return r;
}

CheckReport check_lemma2(const Lemma2Options& opts, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("lemma2", seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    MatD a(opts.d, opts.d);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a.data()[i] = n01(rng);
    }
    const MatD lambda = a * a.transpose() / opts.d + 0.5 * MatD::Identity(opts.d, opts.d);
    VecD mean(opts.d);
    for (int i = 0; i < opts.d; ++i) {
        mean(i) = n01(rng);
    }
    const auto f = factorize<double>(lambda);
    r.ridge_used = f.ridge_used;

    // w = mean + L^-T z has covariance (L L^T)^-1; rows of W are draws.
    MatD z(opts.samples, opts.d);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = n01(rng);
    }
    const MatD l_inv = f.llt.matrixL().solve(MatD::Identity(opts.d, opts.d));
    MatD w = z * l_inv;
    w.rowwise() += mean.transpose();

    const LcbQuantifier<double> lcb(lambda, 1.0);
    for (int q = 0; q < opts.queries; ++q) {
        const VecD phi = random_unit_vector(opts.d, rng);
        const VecD proj = w * phi;
        const double m = proj.mean();
        const double var = (proj.array() - m).square().sum() / static_cast<double>(opts.samples - 1);
        const double analytic = lcb.quadratic(phi);
        const double rel = std::abs(var - analytic) / analytic;
        ++r.trials;
        if (rel > opts.rel_tolerance) {
            ++r.violations;
        }
        r.worst_margin = std::min(r.worst_margin, opts.rel_tolerance - rel);
    }
    return r;
}

CheckReport check_tabular(int pairs, double beta, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("tabular-gamma", seed);
    std::uniform_int_distribution<int> count(1, 200);
    std::vector<double> counts;
    std::vector<int> rows;
    for (int j = 0; j < pairs; ++j) {
        const int n = count(rng);
        counts.push_back(n);
        rows.insert(rows.end(), static_cast<std::size_t>(n), j);
    }
    const MatD phi = one_hot_rows(rows, pairs);
    const LcbQuantifier<double> lcb(MatD(phi.transpose() * phi), beta);
    r.ridge_used = lcb.ridge_used();
    const auto table = tabular_gamma(counts, beta);
    for (int j = 0; j < pairs; ++j) {
        const double diff = std::abs(lcb.gamma(VecD::Unit(pairs, j)) - table[static_cast<std::size_t>(j)]);
        ++r.trials;
        if (diff > 1e-12) {
            ++r.violations;
        }
        r.worst_margin = std::min(r.worst_margin, 1e-12 - diff);
    }
    return r;
}

XiReport check_xi_uncertainty(const XiOptions& opts, std::uint64_t seed)
{
    Rng rng(seed);
    XiReport out;
    out.report = make_report("xi-uncertainty", seed);
    const LinearMdpSpec mdp = make_linear_mdp(opts.d, opts.n_states, opts.n_actions, opts.horizon, rng);
    std::uniform_int_distribution<int> pick_s(0, opts.n_states - 1);
    std::uniform_int_distribution<int> pick_a(0, opts.n_actions - 1);
    std::uniform_real_distribution<double> u(0.0, static_cast<double>(opts.horizon - 1));

    struct Sample {
        double error;
        double width;  // sqrt(phi^T Lambda^-1 phi)
    };
    bool ridge = false;
    auto run_trials = [&](int trials) {
        std::vector<Sample> samples;
        for (int t = 0; t < trials; ++t) {
            VecD v(opts.n_states);
            for (int s = 0; s < opts.n_states; ++s) {
                v(s) = u(rng);
            }
            LinearMdpDataset<double> ds;
            ds.in_features.resize(opts.samples, opts.d);
            ds.in_targets.resize(opts.samples);
            for (int i = 0; i < opts.samples; ++i) {
                const int s = pick_s(rng);
                const int a = pick_a(rng);
                ds.in_features.row(i) = mdp.phi(s, a).transpose();
                ds.in_targets(i) = mdp.reward(s, a) + v(mdp.sample_next(s, a, rng));
            }
            ds.ood_features = MatD::Zero(0, opts.d);
            ds.ood_targets = VecD::Zero(0);
            const auto sol = lsvi_solve(ds);
            const LcbQuantifier<double> lcb(build_covariance(ds).total(), 1.0);
            ridge = ridge || sol.ridge_used || lcb.ridge_used();
            for (int q = 0; q < opts.queries_per_trial; ++q) {
                const int s = pick_s(rng);
                const int a = pick_a(rng);
                const VecD phi = mdp.phi(s, a);
                samples.push_back({std::abs(phi.dot(sol.weights) - mdp.bellman(s, a, v)), lcb.gamma(phi)});
            }
        }
        return samples;
    };
    auto coverage = [](const std::vector<Sample>& s, double beta) {
        std::size_t hit = 0;
        for (const auto& x : s) {
            hit += x.error <= beta * x.width ? 1 : 0;
        }
        return static_cast<double>(hit) / static_cast<double>(s.size());
    };

    // Calibrate on separate trials at a stricter level than the held-out target.
    const auto calib = run_trials(opts.calibration_trials);
    out.beta = 10.0;
    for (int k = 1; k <= 100; ++k) {
        const double beta = 0.1 * k;
        if (coverage(calib, beta) >= 1.0 - opts.xi / 2.0) {
            out.beta = beta;
            break;
        }
    }
    const auto held = run_trials(opts.heldout_trials);
    out.coverage = coverage(held, out.beta);
    out.report.trials = static_cast<std::int64_t>(held.size());
    out.report.violations = out.coverage >= 1.0 - opts.xi ? 0 : 1;
    out.report.worst_margin = out.coverage - (1.0 - opts.xi);
    out.report.ridge_used = ridge;
    return out;
}

CheckReport check_hessian_consistency(const SyntheticDatasetOptions& data, std::uint64_t seed)
{
    Rng rng(seed);
    CheckReport r = make_report("hessian-consistency", seed);
    const auto ds = make_synthetic_dataset(data, rng);
    const MatD lambda = build_covariance(ds).total();
    const VecD w0 = random_ball_features(1, data.d, 1.0, rng).row(0).transpose();
    const double h = 1e-3;
    const double tol = 1e-6 * (1.0 + lambda.cwiseAbs().maxCoeff());
    for (int i = 0; i < data.d; ++i) {
        for (int j = 0; j < data.d; ++j) {
            auto f = [&](double si, double sj) {
                VecD w = w0;
                w(i) += si * h;
                w(j) += sj * h;
                return lsvi_objective(ds, w);
            };
            const double hess = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * h * h);
            const double err = std::abs(hess - 2.0 * lambda(i, j));
            ++r.trials;
            if (err > tol) {
                ++r.violations;
            }
            r.worst_margin = std::min(r.worst_margin, tol - err);
        }
    }
    return r;
}

bool TheorySuiteResult::passed() const
{
    return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.passed(); });
}

std::string TheorySuiteResult::to_json() const
{
    json j;
    j["passed"] = passed();
    j["seconds"] = seconds;
    j["reports"] = json::array();
    for (const auto& r : reports) {
        j["reports"].push_back(report_json(r));
    }
    return j.dump(2);
}

TheorySuiteResult run_theory_suite(std::uint64_t seed, const TheorySuiteSizes& sizes)
{
    const auto t0 = std::chrono::steady_clock::now();
    TheorySuiteResult out;
    out.reports.push_back(check_lemma1(sizes.lemma1, seed));
    out.reports.push_back(check_lemma1_negative(sizes.lemma1, seed + 1));
    out.reports.push_back(check_theorem1(sizes.theorem1, seed + 2));
    out.reports.push_back(check_theorem1_ood_extreme(seed + 3));
    out.reports.push_back(check_theorem2(sizes.theorem2, seed + 4));
    out.reports.push_back(check_lemma2(sizes.lemma2, seed + 5));
    out.reports.push_back(check_tabular(sizes.tabular_pairs, 2.0, seed + 6));
    out.reports.push_back(check_xi_uncertainty(sizes.xi, seed + 7).report);
    out.reports.push_back(check_hessian_consistency(sizes.theorem1.data, seed + 8));
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace ro2o::linmdp
