#pragma once

#include "ro2o/linmdp/synthetic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ro2o::linmdp {

/// Outcome of one randomized verification. `worst_margin` is the smallest
/// slack observed; a negative value means the property failed somewhere.
struct CheckReport {
    std::string check;
    std::int64_t trials = 0;
    std::int64_t violations = 0;
    double worst_margin = 0.0;
    bool ridge_used = false;
    std::uint64_t seed = 0;

    [[nodiscard]] bool passed() const noexcept { return violations == 0; }
    /// {"check", "trials", "violations", "worst_margin", "ridge_used", "seed"}.
    [[nodiscard]] std::string to_json() const;
};

struct Lemma1Options {
    int d = 6;
    int anchors = 4;
    int extra = 2;        // perturbations per anchor beyond d
    double eps = 0.2;
    int trials = 100;
};
/// Lambda_robust from full-rank difference sets must be positive definite.
[[nodiscard]] CheckReport check_lemma1(const Lemma1Options& opts, std::uint64_t seed);
/// Differences confined to one direction: the check must detect a zero
/// eigenvalue (|lambda_min| <= 1e-12). Passing means non-PD was detected.
[[nodiscard]] CheckReport check_lemma1_negative(const Lemma1Options& opts, std::uint64_t seed);

struct Theorem1Options {
    SyntheticDatasetOptions data{4, 30, 15, 6, 2, 0.2};
    int queries = 1000;
    double beta = 1.0;
};
/// Gamma with the robust term strictly below Gamma without it at every query.
[[nodiscard]] CheckReport check_theorem1(const Theorem1Options& opts, std::uint64_t seed);
/// One-hot construction where the query pair has no in-sample or OOD data:
/// the variant's Gamma is beta / sqrt(ridge) while the robust term caps it
/// at beta / sqrt(lambda_min(Lambda_robust)).
[[nodiscard]] CheckReport check_theorem1_ood_extreme(std::uint64_t seed);

struct Theorem2Options {
    int d = 6;
    int n_states = 20;
    int n_actions = 3;
    int horizon = 8;
    int offline_pairs = 30;
    int batches = 10;
    int batch_episodes = 3;
    int queries = 200;
    double tolerance = 1e-10;
    double beta = 1.0;
};
/// Folding online batches into the covariance never raises Gamma, and the
/// summed Gamma along an evaluation-policy trajectory shrinks.
[[nodiscard]] CheckReport check_theorem2(const Theorem2Options& opts, std::uint64_t seed);

struct Lemma2Options {
    int d = 5;
    int queries = 20;
    int samples = 100000;
    double rel_tolerance = 0.03;
};
/// Empirical variance of phi^T w over posterior draws w ~ N(mean, Lambda^-1)
/// against phi^T Lambda^-1 phi.
[[nodiscard]] CheckReport check_lemma2(const Lemma2Options& opts, std::uint64_t seed);

/// tabular_gamma against lcb() on one-hot features, |diff| <= 1e-12.
[[nodiscard]] CheckReport check_tabular(int pairs, double beta, std::uint64_t seed);

struct XiOptions {
    int d = 6;
    int n_states = 30;
    int n_actions = 4;
    int horizon = 5;
    int samples = 200;
    int calibration_trials = 20;
    int heldout_trials = 20;
    int queries_per_trial = 50;
    double xi = 0.1;
};
/// Calibrates beta on a grid over {0.1, ..., 10}, then measures held-out
/// coverage of |T_hat V - T V| <= Gamma; passes at coverage >= 1 - xi.
struct XiReport {
    CheckReport report;
    double beta = 0.0;
    double coverage = 0.0;
};
[[nodiscard]] XiReport check_xi_uncertainty(const XiOptions& opts, std::uint64_t seed);

/// Finite-difference Hessian of the least-squares objective equals
/// 2 * (Lambda_in + Lambda_ood + Lambda_robust).
[[nodiscard]] CheckReport check_hessian_consistency(const SyntheticDatasetOptions& data, std::uint64_t seed);

struct TheorySuiteSizes {
    Lemma1Options lemma1;
    Theorem1Options theorem1;
    Theorem2Options theorem2;
    Lemma2Options lemma2;
    XiOptions xi;
    int tabular_pairs = 12;
};

struct TheorySuiteResult {
    std::vector<CheckReport> reports;
    double seconds = 0.0;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::string to_json() const;
};

[[nodiscard]] TheorySuiteResult run_theory_suite(std::uint64_t seed, const TheorySuiteSizes& sizes = {});

}  // namespace ro2o::linmdp
