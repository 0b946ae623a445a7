#include "ro2o/data/replay_buffer.hpp"

namespace ro2o::data {

ReplayBuffer::ReplayBuffer(std::size_t capacity, Provenance tag) : storage_(capacity), tag_(tag)
{
    if (capacity == 0) {
        throw std::invalid_argument("replay buffer capacity must be positive");
    }
}

void ReplayBuffer::add(Transition t)
{
    storage_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % storage_.size();
    if (size_ < storage_.size()) {
        ++size_;
    }
}

void ReplayBuffer::add_all(const std::vector<Transition>& ts)
{
    for (const auto& t : ts) {
        add(t);
    }
}

void ReplayBuffer::clear()
{
    size_ = 0;
    cursor_ = 0;
}

const Transition& ReplayBuffer::at(std::size_t i) const
{
    if (i >= size_) {
        throw std::out_of_range("replay buffer index " + std::to_string(i) + " >= size " + std::to_string(size_));
    }
    const std::size_t oldest = size_ < storage_.size() ? 0 : cursor_;
    return storage_[(oldest + i) % storage_.size()];
}

std::vector<Transition> ReplayBuffer::snapshot() const
{
    std::vector<Transition> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        out.push_back(at(i));
    }
    return out;
}

BufferRegime regime_from_string(std::string_view name)
{
    if (name == "offline-only") {
        return BufferRegime::OfflineOnly;
    }
    if (name == "union") {
        return BufferRegime::Union;
    }
    if (name == "discard-offline") {
        return BufferRegime::DiscardOffline;
    }
    throw std::invalid_argument("unknown buffer regime '" + std::string(name) + "'");
}

std::string_view to_string(BufferRegime regime)
{
    switch (regime) {
    case BufferRegime::OfflineOnly:
        return "offline-only";
    case BufferRegime::Union:
        return "union";
    case BufferRegime::DiscardOffline:
        return "discard-offline";
    }
    return "union";
}

BufferSet::BufferSet(std::size_t offline_capacity, std::size_t online_capacity)
    : offline_(offline_capacity, Provenance::Offline), online_(online_capacity, Provenance::Online)
{
}

std::size_t BufferSet::active_size(BufferRegime regime) const
{
    switch (regime) {
    case BufferRegime::OfflineOnly:
        return offline_.size();
    case BufferRegime::Union:
        return offline_.size() + online_.size();
    case BufferRegime::DiscardOffline:
        return online_.size();
    }
    return 0;
}

std::vector<SampledRecord> BufferSet::sample(BufferRegime regime, std::size_t batch_size, Rng& rng) const
{
    const std::size_t n = active_size(regime);
    if (n == 0) {
        throw SamplingError("cannot sample from an empty buffer (regime " + std::string(to_string(regime)) + ")");
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<SampledRecord> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
        std::size_t i = pick(rng);
        if (regime == BufferRegime::DiscardOffline) {
            out.push_back({&online_.at(i), Provenance::Online});
        } else if (i < offline_.size()) {
            out.push_back({&offline_.at(i), Provenance::Offline});
        } else {
            out.push_back({&online_.at(i - offline_.size()), Provenance::Online});
        }
    }
    return out;
}

env::Dataset BufferSet::snapshot(const env::DatasetHeader& header) const
{
    env::Dataset data;
    data.header = header;
    for (const auto* buf : {&offline_, &online_}) {
        for (std::size_t i = 0; i < buf->size(); ++i) {
            data.transitions.push_back(buf->at(i));
            data.provenance.push_back(buf->provenance());
        }
    }
    data.header.count = data.transitions.size();
    return data;
}

void BufferSet::restore(const env::Dataset& data)
{
    offline_.clear();
    online_.clear();
    for (std::size_t i = 0; i < data.transitions.size(); ++i) {
        const bool online = !data.provenance.empty() && data.provenance[i] == Provenance::Online;
        (online ? online_ : offline_).add(data.transitions[i]);
    }
}

}  // namespace ro2o::data
