#pragma once

#include "ro2o/env/dataset.hpp"

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ro2o::data {

using env::Provenance;
using env::Transition;
using Rng = std::mt19937_64;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-capacity ring of transitions. Once full, each insert overwrites the
/// oldest record.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity, Provenance tag = Provenance::Offline);

    void add(Transition t);
    void add_all(const std::vector<Transition>& ts);
    void clear();

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::size_t capacity() const noexcept { return storage_.size(); }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] Provenance provenance() const noexcept { return tag_; }
    /// i-th record in insertion order, 0 = oldest still stored.
    [[nodiscard]] const Transition& at(std::size_t i) const;
    [[nodiscard]] std::vector<Transition> snapshot() const;

private:
    std::vector<Transition> storage_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    Provenance tag_;
};

enum class BufferRegime { OfflineOnly, Union, DiscardOffline };

[[nodiscard]] BufferRegime regime_from_string(std::string_view name);
[[nodiscard]] std::string_view to_string(BufferRegime regime);

struct SampledRecord {
    const Transition* transition = nullptr;
    Provenance provenance = Provenance::Offline;
};

/// Offline and online buffers with regime-dependent sampling.
class BufferSet {
public:
    BufferSet(std::size_t offline_capacity, std::size_t online_capacity);

    [[nodiscard]] ReplayBuffer& offline() noexcept { return offline_; }
    [[nodiscard]] ReplayBuffer& online() noexcept { return online_; }
    [[nodiscard]] const ReplayBuffer& offline() const noexcept { return offline_; }
    [[nodiscard]] const ReplayBuffer& online() const noexcept { return online_; }

    /// Number of records visible under a regime.
    [[nodiscard]] std::size_t active_size(BufferRegime regime) const;

    /// Uniform i.i.d. draws (with replacement) over the active index space;
    /// Union concatenates offline then online indices.
    [[nodiscard]] std::vector<SampledRecord> sample(BufferRegime regime, std::size_t batch_size, Rng& rng) const;

    /// Snapshot of both buffers in the dataset format with a provenance column.
    [[nodiscard]] env::Dataset snapshot(const env::DatasetHeader& header) const;
    void restore(const env::Dataset& data);

private:
    ReplayBuffer offline_;
    ReplayBuffer online_;
};

/// Dense mini-batch; states already normalized.
struct Batch {
    Matrix states;
    Matrix actions;
    Matrix rewards;      // B x 1
    Matrix next_states;
    Matrix not_terminal;  // B x 1, 0 where the transition ended in a true terminal
    std::vector<Provenance> provenance;

    [[nodiscard]] Eigen::Index size() const { return states.rows(); }
};

}  // namespace ro2o::data
