#include "ro2o/data/normalizer.hpp"

#include <cmath>

namespace ro2o::data {

Eigen::VectorXd Normalizer::normalize(const Eigen::VectorXd& s) const
{
    return (s - mean).cwiseQuotient(stddev);
}

Eigen::VectorXd Normalizer::denormalize(const Eigen::VectorXd& z) const
{
    return z.cwiseProduct(stddev) + mean;
}

Matrix Normalizer::normalize_rows(const Matrix& states) const
{
    Matrix out = states;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= stddev.transpose().array();
    return out;
}

Matrix Normalizer::denormalize_rows(const Matrix& z) const
{
    Matrix out = z;
    out.array().rowwise() *= stddev.transpose().array();
    out.rowwise() += mean.transpose();
    return out;
}

Normalizer Normalizer::identity(int dim)
{
    Normalizer n;
    n.mean = Eigen::VectorXd::Zero(dim);
    n.stddev = Eigen::VectorXd::Ones(dim);
    return n;
}

Normalizer fit_normalizer(const std::vector<Transition>& dataset, double std_floor)
{
    if (dataset.empty()) {
        throw std::invalid_argument("fit_normalizer on an empty dataset");
    }
    if (!(std_floor > 0.0)) {
        throw std::invalid_argument("normalizer std floor must be positive");
    }
    const auto dim = dataset.front().state.size();
    Normalizer n;
    n.std_floor = std_floor;
    n.mean = Eigen::VectorXd::Zero(dim);
    double count = 0.0;
    for (const auto& t : dataset) {
        n.mean += t.state + t.next_state;
        count += 2.0;
    }
    n.mean /= count;
    // Second pass about the mean keeps the variance free of cancellation.
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (const auto& t : dataset) {
        var += (t.state - n.mean).cwiseAbs2();
        var += (t.next_state - n.mean).cwiseAbs2();
    }
    var /= count;
    n.stddev = var.cwiseSqrt();
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (!(n.stddev(k) >= std_floor)) {
            n.stddev(k) = std_floor;
            n.warnings.push_back("state dimension " + std::to_string(k) + " has (near) zero variance; std floored at "
                                 + std::to_string(std_floor));
        }
    }
    return n;
}

namespace {

template <typename Get>
Batch gather(std::size_t count, const Normalizer& normalizer, Get get)
{
    Batch b;
    if (count == 0) {
        return b;
    }
    const Transition& first = get(0).first;
    const auto sd = first.state.size();
    const auto ad = first.action.size();
    const auto n = static_cast<Eigen::Index>(count);
    Matrix states(n, sd);
    Matrix next(n, sd);
    b.actions.resize(n, ad);
    b.rewards.resize(n, 1);
    b.not_terminal.resize(n, 1);
    b.provenance.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto [t, prov] = get(i);
        const auto r = static_cast<Eigen::Index>(i);
        states.row(r) = t.state.transpose();
        next.row(r) = t.next_state.transpose();
        b.actions.row(r) = t.action.transpose();
        b.rewards(r, 0) = t.reward;
        b.not_terminal(r, 0) = t.terminal() ? 0.0 : 1.0;
        b.provenance[i] = prov;
    }
    b.states = normalizer.normalize_rows(states);
    b.next_states = normalizer.normalize_rows(next);
    return b;
}

}  // namespace

Batch make_batch(const std::vector<SampledRecord>& records, const Normalizer& normalizer)
{
    return gather(records.size(), normalizer, [&](std::size_t i) {
        return std::pair<const Transition&, Provenance>(*records[i].transition, records[i].provenance);
    });
}

Batch make_batch(const std::vector<Transition>& transitions, const Normalizer& normalizer)
{
    return gather(transitions.size(), normalizer, [&](std::size_t i) {
        return std::pair<const Transition&, Provenance>(transitions[i], Provenance::Offline);
    });
}

}  // namespace ro2o::data
