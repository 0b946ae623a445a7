#include "ro2o/env/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ro2o::env {

QualityTier tier_from_string(std::string_view name)
{
    if (name == "expert") {
        return QualityTier::Expert;
    }
    if (name == "medium") {
        return QualityTier::Medium;
    }
    if (name == "medium-replay-mix") {
        return QualityTier::MediumReplayMix;
    }
    if (name == "mixed-shift") {
        return QualityTier::MixedShift;
    }
    throw std::invalid_argument("unknown dataset tier '" + std::string(name) + "'");
}

std::string_view to_string(QualityTier tier)
{
    switch (tier) {
    case QualityTier::Expert:
        return "expert";
    case QualityTier::Medium:
        return "medium";
    case QualityTier::MediumReplayMix:
        return "medium-replay-mix";
    case QualityTier::MixedShift:
        return "mixed-shift";
    }
    return "medium";
}

void DatasetQuality::validate() const
{
    if (!(noise_scale >= 0.0)) {
        throw std::invalid_argument("dataset noise scale must be >= 0");
    }
    if (episodes < 1) {
        throw std::invalid_argument("dataset episode count must be >= 1");
    }
}

std::vector<Transition> generate_dataset(const Environment& env, const DatasetQuality& quality, std::uint64_t seed)
{
    env.spec().validate();
    quality.validate();
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Transition> out;
    out.reserve(static_cast<std::size_t>(quality.episodes * env.spec().horizon));

    for (int ep = 0; ep < quality.episodes; ++ep) {
        bool expert = false;
        switch (quality.tier) {
        case QualityTier::Expert:
            expert = true;
            break;
        case QualityTier::Medium:
            expert = false;
            break;
        case QualityTier::MediumReplayMix:
            expert = ep % 2 == 0;
            break;
        case QualityTier::MixedShift:
            expert = ep < (quality.episodes + 1) / 2;
            break;
        }
        EnvState state = env.reset(rng);
        for (;;) {
            Vector a = expert ? env.expert_action(state.x) : env.medium_action(state.x);
            for (Eigen::Index k = 0; k < a.size(); ++k) {
                a(k) += quality.noise_scale * noise(rng);
            }
            StepResult r = env.step(state, a);
            const bool done = r.transition.done;
            out.push_back(std::move(r.transition));
            state = std::move(r.next);
            if (done) {
                break;
            }
        }
    }
    return out;
}

double sparse_reward_transform(double r) { return 4.0 * (r - 0.5); }

void apply_sparse_reward_transform(std::vector<Transition>& data)
{
    for (auto& t : data) {
        t.reward = sparse_reward_transform(t.reward);
    }
}

namespace {

void check_consistent(const Dataset& data)
{
    if (!data.provenance.empty() && data.provenance.size() != data.transitions.size()) {
        throw std::invalid_argument("dataset provenance column length differs from record count");
    }
    for (const auto& t : data.transitions) {
        if (t.state.size() != data.header.state_dim || t.next_state.size() != data.header.state_dim
            || t.action.size() != data.header.action_dim) {
            throw std::invalid_argument("dataset record does not match header dimensions");
        }
    }
}

void append_number(std::string& line, double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out)
{
    check_consistent(data);
    const auto& h = data.header;
    out << "# ro2o-dataset v1\n"
        << "# env=" << h.env_name << '\n'
        << "# state_dim=" << h.state_dim << '\n'
        << "# action_dim=" << h.action_dim << '\n'
        << "# count=" << data.transitions.size() << '\n'
        << "# tier=" << h.tier << '\n'
        << "# seed=" << h.seed << '\n';
    std::string line;
    for (int k = 0; k < h.state_dim; ++k) {
        line += "s" + std::to_string(k) + ",";
    }
    for (int k = 0; k < h.action_dim; ++k) {
        line += "a" + std::to_string(k) + ",";
    }
    line += "reward,";
    for (int k = 0; k < h.state_dim; ++k) {
        line += "ns" + std::to_string(k) + ",";
    }
    line += "done,truncated";
    if (!data.provenance.empty()) {
        line += ",provenance";
    }
    out << line << '\n';
    for (std::size_t i = 0; i < data.transitions.size(); ++i) {
        const auto& t = data.transitions[i];
        line.clear();
        for (Eigen::Index k = 0; k < t.state.size(); ++k) {
            append_number(line, t.state(k));
            line += ',';
        }
        for (Eigen::Index k = 0; k < t.action.size(); ++k) {
            append_number(line, t.action(k));
            line += ',';
        }
        append_number(line, t.reward);
        line += ',';
        for (Eigen::Index k = 0; k < t.next_state.size(); ++k) {
            append_number(line, t.next_state(k));
            line += ',';
        }
        line += t.done ? '1' : '0';
        line += ',';
        line += t.truncated ? '1' : '0';
        if (!data.provenance.empty()) {
            line += data.provenance[i] == Provenance::Online ? ",online" : ",offline";
        }
        out << line << '\n';
    }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    write_dataset_csv(data, out);
}

Dataset read_dataset_csv(std::istream& in)
{
    Dataset data;
    std::string line;
    bool header_row_seen = false;
    bool with_provenance = false;
    std::uint64_t declared = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                continue;
            }
            const std::string key = line.substr(2, eq - 2);
            const std::string value = line.substr(eq + 1);
            if (key == "env") {
                data.header.env_name = value;
            } else if (key == "state_dim") {
                data.header.state_dim = std::stoi(value);
            } else if (key == "action_dim") {
                data.header.action_dim = std::stoi(value);
            } else if (key == "count") {
                declared = std::stoull(value);
            } else if (key == "tier") {
                data.header.tier = value;
            } else if (key == "seed") {
                data.header.seed = std::stoull(value);
            }
            continue;
        }
        if (!header_row_seen) {
            header_row_seen = true;
            with_provenance = line.find("provenance") != std::string::npos;
            continue;
        }
        const int sd = data.header.state_dim;
        const int ad = data.header.action_dim;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        const std::size_t expected = static_cast<std::size_t>(2 * sd + ad + 3 + (with_provenance ? 1 : 0));
        if (cells.size() != expected) {
            throw std::runtime_error("dataset CSV row has " + std::to_string(cells.size()) + " cells, expected "
                                     + std::to_string(expected));
        }
        Transition t;
        t.state.resize(sd);
        t.action.resize(ad);
        t.next_state.resize(sd);
        std::size_t c = 0;
        for (int k = 0; k < sd; ++k) {
            t.state(k) = std::strtod(cells[c++].c_str(), nullptr);
        }
        for (int k = 0; k < ad; ++k) {
            t.action(k) = std::strtod(cells[c++].c_str(), nullptr);
        }
        t.reward = std::strtod(cells[c++].c_str(), nullptr);
        for (int k = 0; k < sd; ++k) {
            t.next_state(k) = std::strtod(cells[c++].c_str(), nullptr);
        }
        t.done = cells[c++] == "1";
        t.truncated = cells[c++] == "1";
        if (with_provenance) {
            data.provenance.push_back(cells[c] == "online" ? Provenance::Online : Provenance::Offline);
        }
        data.transitions.push_back(std::move(t));
    }
    data.header.count = data.transitions.size();
    if (declared != data.header.count) {
        throw std::runtime_error("dataset CSV declares " + std::to_string(declared) + " records but holds "
                                 + std::to_string(data.header.count));
    }
    return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return read_dataset_csv(in);
}

namespace {

constexpr char kDatasetMagic[8] = {'R', 'O', '2', 'O', 'D', 'S', 'E', 'T'};
constexpr std::uint32_t kDatasetVersion = 1;

template <typename T>
void put(std::ostream& out, T v)
{
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in)
{
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) {
        throw std::runtime_error("binary dataset truncated");
    }
    return v;
}

void put_string(std::ostream& out, const std::string& s)
{
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in)
{
    const auto n = get<std::uint32_t>(in);
    if (n > (1U << 20)) {
        throw std::runtime_error("binary dataset: implausible string length");
    }
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

void put_vector(std::ostream& out, const Vector& v)
{
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void get_vector(std::istream& in, Vector& v, int n)
{
    v.resize(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void write_dataset_binary(const Dataset& data, const std::filesystem::path& path)
{
    check_consistent(data);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    const auto& h = data.header;
    out.write(kDatasetMagic, sizeof(kDatasetMagic));
    put<std::uint32_t>(out, kDatasetVersion);
    put_string(out, h.env_name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.state_dim));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(h.action_dim));
    put<std::uint64_t>(out, data.transitions.size());
    put_string(out, h.tier);
    put<std::uint64_t>(out, h.seed);
    put<std::uint8_t>(out, data.provenance.empty() ? 0 : 1);
    for (std::size_t i = 0; i < data.transitions.size(); ++i) {
        const auto& t = data.transitions[i];
        put_vector(out, t.state);
        put_vector(out, t.action);
        put<double>(out, t.reward);
        put_vector(out, t.next_state);
        put<std::uint8_t>(out, t.done ? 1 : 0);
        put<std::uint8_t>(out, t.truncated ? 1 : 0);
        if (!data.provenance.empty()) {
            put<std::uint8_t>(out, static_cast<std::uint8_t>(data.provenance[i]));
        }
    }
}

Dataset read_dataset_binary(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    char magic[sizeof(kDatasetMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
        throw std::runtime_error(path.string() + " is not a binary dataset (bad magic)");
    }
    if (get<std::uint32_t>(in) != kDatasetVersion) {
        throw std::runtime_error("unsupported binary dataset version");
    }
    Dataset data;
    auto& h = data.header;
    h.env_name = get_string(in);
    h.state_dim = static_cast<int>(get<std::uint32_t>(in));
    h.action_dim = static_cast<int>(get<std::uint32_t>(in));
    h.count = get<std::uint64_t>(in);
    h.tier = get_string(in);
    h.seed = get<std::uint64_t>(in);
    const bool with_provenance = get<std::uint8_t>(in) != 0;
    data.transitions.resize(h.count);
    for (std::uint64_t i = 0; i < h.count; ++i) {
        auto& t = data.transitions[i];
        get_vector(in, t.state, h.state_dim);
        get_vector(in, t.action, h.action_dim);
        t.reward = get<double>(in);
        get_vector(in, t.next_state, h.state_dim);
        t.done = get<std::uint8_t>(in) != 0;
        t.truncated = get<std::uint8_t>(in) != 0;
        if (with_provenance) {
            data.provenance.push_back(static_cast<Provenance>(get<std::uint8_t>(in)));
        }
    }
    return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path)
{
    if (path.extension() == ".csv") {
        write_dataset_csv(data, path);
    } else {
        write_dataset_binary(data, path);
    }
}

Dataset load_dataset(const std::filesystem::path& path)
{
    return path.extension() == ".csv" ? read_dataset_csv(path) : read_dataset_binary(path);
}

}  // namespace ro2o::env
