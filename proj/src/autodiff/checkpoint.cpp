#include "ro2o/autodiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ro2o::ad {
namespace {

enum class BlockKind : std::uint32_t { Network = 0, Dense = 1, Text = 2 };

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
        throw CheckpointError("checkpoint truncated");
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
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) {
        throw CheckpointError("checkpoint truncated inside a string");
    }
    return s;
}

void put_dense(std::ostream& out, const Matrix& m)
{
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Matrix get_dense(std::istream& in)
{
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows > (1ULL << 32) || cols > (1ULL << 32)) {
        throw CheckpointError("implausible dense block shape");
    }
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) {
        throw CheckpointError("checkpoint truncated inside a dense block");
    }
    return m;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out)
{
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint32_t>(out,
                       static_cast<std::uint32_t>(ckpt.networks.size() + ckpt.matrices.size() + ckpt.strings.size()));
    for (const auto& [name, net] : ckpt.networks) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(BlockKind::Network));
        put_string(out, name);
        put<std::uint32_t>(out, static_cast<std::uint32_t>(net.activation()));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_dims().size()));
        for (Index d : net.layer_dims()) {
            put<std::uint64_t>(out, static_cast<std::uint64_t>(d));
        }
        for (const auto& layer : net.layers()) {
            const Matrix& w = layer.weight.value();
            const Matrix& b = layer.bias.value();
            out.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
            out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size() * sizeof(double)));
        }
    }
    for (const auto& [name, m] : ckpt.matrices) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(BlockKind::Dense));
        put_string(out, name);
        put_dense(out, m);
    }
    for (const auto& [name, s] : ckpt.strings) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(BlockKind::Text));
        put_string(out, name);
        put_string(out, s);
    }
}

Checkpoint read_checkpoint(std::istream& in)
{
    char magic[sizeof(kCheckpointMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
        throw CheckpointError("not a checkpoint (bad magic)");
    }
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    const auto blocks = get<std::uint32_t>(in);
    for (std::uint32_t k = 0; k < blocks; ++k) {
        const auto kind = static_cast<BlockKind>(get<std::uint32_t>(in));
        std::string name = get_string(in);
        switch (kind) {
        case BlockKind::Network: {
            const auto act = static_cast<Activation>(get<std::uint32_t>(in));
            const auto n_dims = get<std::uint32_t>(in);
            std::vector<Index> dims;
            for (std::uint32_t d = 0; d < n_dims; ++d) {
                dims.push_back(static_cast<Index>(get<std::uint64_t>(in)));
            }
            Mlp net = Mlp::zeros(dims, act);
            for (auto& layer : net.layers()) {
                Matrix& w = layer.weight.mutable_value();
                Matrix& b = layer.bias.mutable_value();
                in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
                in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(b.size() * sizeof(double)));
            }
            if (!in) {
                throw CheckpointError("checkpoint truncated inside network '" + name + "'");
            }
            ckpt.networks.emplace(std::move(name), std::move(net));
            break;
        }
        case BlockKind::Dense:
            ckpt.matrices.emplace(std::move(name), get_dense(in));
            break;
        case BlockKind::Text:
            ckpt.strings.emplace(std::move(name), get_string(in));
            break;
        default:
            throw CheckpointError("unknown block kind in checkpoint");
        }
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError("cannot open " + path.string() + " for writing");
    }
    write_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open " + path.string());
    }
    return read_checkpoint(in);
}

}  // namespace ro2o::ad
