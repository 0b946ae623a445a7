#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ro2o::linmdp {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultRidge = 1e-6;

class FactorizationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Perturbed features phi(s_hat, a) sharing the anchor's action, one row each.
template <typename Scalar>
struct RobustGroup {
    Vec<Scalar> anchor;        // phi(s, a)
    Mat<Scalar> perturbed;     // k x d
};

/// Feature rows and regression targets for the three data roles.
template <typename Scalar>
struct LinearMdpDataset {
    Mat<Scalar> in_features;   // n x d
    Vec<Scalar> in_targets;    // y = r + V(s')
    Mat<Scalar> ood_features;  // m x d
    Vec<Scalar> ood_targets;   // pseudo-targets y_hat
    std::vector<RobustGroup<Scalar>> robust;

    [[nodiscard]] Eigen::Index dim() const { return in_features.cols(); }
};

template <typename Scalar>
struct CovarianceDecomposition {
    Mat<Scalar> in;
    Mat<Scalar> ood;
    Mat<Scalar> robust;

    [[nodiscard]] Mat<Scalar> total() const { return in + ood + robust; }
};

/// Lambda_in = sum phi phi^T, Lambda_ood likewise, and Lambda_robust sums,
/// over anchors, the within-group mean of (phi_hat - phi)(phi_hat - phi)^T.
template <typename Scalar>
[[nodiscard]] CovarianceDecomposition<Scalar> build_covariance(const LinearMdpDataset<Scalar>& ds)
{
    const Eigen::Index d = ds.dim();
    CovarianceDecomposition<Scalar> c;
    c.in = ds.in_features.transpose() * ds.in_features;
    c.ood = ds.ood_features.rows() > 0 ? Mat<Scalar>(ds.ood_features.transpose() * ds.ood_features)
                                       : Mat<Scalar>::Zero(d, d);
    c.robust = Mat<Scalar>::Zero(d, d);
    for (const auto& g : ds.robust) {
        if (g.perturbed.rows() == 0) {
            continue;
        }
        Mat<Scalar> diff = g.perturbed;
        diff.rowwise() -= g.anchor.transpose();
        c.robust += diff.transpose() * diff / static_cast<Scalar>(g.perturbed.rows());
    }
    return c;
}

/// Cholesky factor of a symmetric matrix, adding ridge * I only when the
/// plain factorization fails or is numerically singular.
template <typename Scalar>
struct Factorization {
    Eigen::LLT<Mat<Scalar>> llt;
    bool ridge_used = false;
    Scalar ridge = 0;
};

template <typename Scalar>
[[nodiscard]] bool is_numerically_pd(const Mat<Scalar>& m)
{
    Eigen::LLT<Mat<Scalar>> llt(m);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    const auto diag = llt.matrixLLT().diagonal().cwiseAbs();
    // Reject factors whose pivots collapse relative to the largest one.
    return diag.minCoeff() > std::sqrt(std::numeric_limits<Scalar>::epsilon()) * diag.maxCoeff() * Scalar(1e-4);
}

template <typename Scalar>
[[nodiscard]] Factorization<Scalar> factorize(const Mat<Scalar>& m, Scalar ridge = Scalar(kDefaultRidge))
{
    Factorization<Scalar> f;
    if (is_numerically_pd(m)) {
        f.llt.compute(m);
        return f;
    }
    if (!(ridge > 0)) {
        throw FactorizationError("covariance matrix is singular and no ridge was allowed");
    }
    f.llt.compute(m + ridge * Mat<Scalar>::Identity(m.rows(), m.cols()));
    if (f.llt.info() != Eigen::Success) {
        throw FactorizationError("covariance matrix is not positive semi-definite");
    }
    f.ridge_used = true;
    f.ridge = ridge;
    return f;
}

template <typename Scalar>
struct LsviSolution {
    Vec<Scalar> weights;
    bool ridge_used = false;
    Scalar ridge = 0;
};

/// w = Lambda^-1 (sum phi y + sum phi_hat y_hat).
template <typename Scalar>
[[nodiscard]] LsviSolution<Scalar> lsvi_solve(const LinearMdpDataset<Scalar>& ds, Scalar ridge = Scalar(kDefaultRidge))
{
    const auto cov = build_covariance(ds);
    Vec<Scalar> rhs = ds.in_features.transpose() * ds.in_targets;
    if (ds.ood_features.rows() > 0) {
        rhs += ds.ood_features.transpose() * ds.ood_targets;
    }
    const auto f = factorize<Scalar>(cov.total(), ridge);
    return {f.llt.solve(rhs), f.ridge_used, f.ridge};
}

/// Three-term least-squares objective whose minimizer lsvi_solve returns:
/// in-sample and OOD squared residuals plus the per-group mean squared
/// value difference between perturbed and anchor features, plus ridge.
template <typename Scalar>
[[nodiscard]] Scalar lsvi_objective(const LinearMdpDataset<Scalar>& ds, const Vec<Scalar>& w, Scalar ridge = 0)
{
    Scalar total = (ds.in_targets - ds.in_features * w).squaredNorm();
    if (ds.ood_features.rows() > 0) {
        total += (ds.ood_targets - ds.ood_features * w).squaredNorm();
    }
    for (const auto& g : ds.robust) {
        if (g.perturbed.rows() == 0) {
            continue;
        }
        Vec<Scalar> diff = g.perturbed * w;
        diff.array() -= g.anchor.dot(w);
        total += diff.squaredNorm() / static_cast<Scalar>(g.perturbed.rows());
    }
    return total + ridge * w.squaredNorm();
}

/// Gamma(phi) = beta * sqrt(phi^T Lambda^-1 phi) via a Cholesky solve.
template <typename Scalar>
class LcbQuantifier {
public:
    LcbQuantifier(const Mat<Scalar>& lambda, Scalar beta, Scalar ridge = Scalar(kDefaultRidge))
        : lambda_(lambda), beta_(beta), f_(factorize<Scalar>(lambda, ridge))
    {
        if (lambda.rows() != lambda.cols()) {
            throw std::invalid_argument("LcbQuantifier: covariance must be square");
        }
        if (!(beta >= 0)) {
            throw std::invalid_argument("LcbQuantifier: beta must be >= 0");
        }
    }

    /// phi^T Lambda^-1 phi.
    [[nodiscard]] Scalar quadratic(const Vec<Scalar>& phi) const
    {
        if (phi.size() != lambda_.rows()) {
            throw std::invalid_argument("LcbQuantifier: feature has the wrong dimension");
        }
        const Vec<Scalar> y = f_.llt.matrixL().solve(phi);
        return y.squaredNorm();
    }
    [[nodiscard]] Scalar gamma(const Vec<Scalar>& phi) const { return beta_ * std::sqrt(quadratic(phi)); }

    [[nodiscard]] const Mat<Scalar>& matrix() const noexcept { return lambda_; }
    [[nodiscard]] Scalar beta() const noexcept { return beta_; }
    [[nodiscard]] bool ridge_used() const noexcept { return f_.ridge_used; }
    [[nodiscard]] const Eigen::LLT<Mat<Scalar>>& factor() const noexcept { return f_.llt; }

private:
    Mat<Scalar> lambda_;
    Scalar beta_;
    Factorization<Scalar> f_;
};

/// beta / sqrt(N) per pair. Zero counts give beta / sqrt(ridge) when a ridge
/// is supplied, otherwise +infinity.
template <typename Scalar>
[[nodiscard]] std::vector<Scalar> tabular_gamma(const std::vector<Scalar>& counts, Scalar beta, Scalar ridge = 0)
{
    std::vector<Scalar> out;
    out.reserve(counts.size());
    for (Scalar n : counts) {
        if (n < 0) {
            throw std::invalid_argument("tabular_gamma: negative count");
        }
        const Scalar eff = n + ridge;
        out.push_back(eff > 0 ? beta / std::sqrt(eff) : std::numeric_limits<Scalar>::infinity());
    }
    return out;
}

template <typename Scalar>
[[nodiscard]] Scalar min_eigenvalue(const Mat<Scalar>& sym)
{
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace ro2o::linmdp
