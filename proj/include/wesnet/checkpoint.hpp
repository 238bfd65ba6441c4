#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "wesnet/experiment.hpp"
#include "wesnet/network.hpp"
#include "wesnet/optimizer.hpp"

namespace wesnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout: magic "WSNCKPT\0", u32 version, u64 header length, JSON header
/// (configs, hash, tensor names and shapes), little-endian f64 tensors in header
/// order, then a u64 FNV-1a checksum of every preceding byte.
struct Checkpoint {
    ExperimentConfig experiment;
    NetworkParams params;
    std::optional<AdamState> adam;
};

std::string encode_checkpoint(const Checkpoint& ckpt);

/// Throws CorruptionError on truncation, bad magic, checksum or shape mismatch,
/// and VersionError on an unknown format version.
Checkpoint decode_checkpoint(std::string_view bytes);

/// Writes the binary file and a `<path>.json` sidecar holding the header, both atomically.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// The JSON header of an encoded checkpoint.
nlohmann::json checkpoint_header(const Checkpoint& ckpt);

}  // namespace wesnet
