#pragma once

#include "ro2o/autodiff/mlp.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace ro2o::ad {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Named bundle of networks, dense blocks and strings. The on-disk layout is
/// described in docs/FORMATS.md; blocks are written in name order so equal
/// contents always give equal bytes.
struct Checkpoint {
    std::map<std::string, Mlp> networks;
    std::map<std::string, Matrix> matrices;
    std::map<std::string, std::string> strings;
};

inline constexpr char kCheckpointMagic[8] = {'R', 'O', '2', 'O', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);
[[nodiscard]] Checkpoint read_checkpoint(std::istream& in);

}  // namespace ro2o::ad
