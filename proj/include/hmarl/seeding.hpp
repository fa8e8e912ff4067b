#pragma once

#include <cstdint>
#include <string_view>

namespace hmarl {

/// Derives an independent sub-seed from a global seed and a stream name
/// (FNV-1a of the name folded into the seed, then splitmix64 finalized).
/// Stable across platforms and releases.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stream);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace hmarl
