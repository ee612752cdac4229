#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "tempent/influence.hpp"

namespace tempent {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Unreadable, corrupted or incompatible checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::string_view text);

/// Binary container: magic, version, the full TemporalMps in exact
/// little-endian doubles, and a trailing FNV-1a checksum of everything before it.
std::vector<std::uint8_t> encode_checkpoint(const TemporalMps& l);
TemporalMps decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Written to a sibling temporary file first, then renamed into place.
void save_checkpoint(const TemporalMps& l, const std::filesystem::path& path);
TemporalMps load_checkpoint(const std::filesystem::path& path);

}  // namespace tempent
