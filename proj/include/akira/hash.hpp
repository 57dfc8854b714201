#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace akira {

// 64-bit FNV-1a. Stable across platforms and runs, which std::hash is not.
constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Lower-case 16-digit hex rendering of fnv1a64(text).
std::string content_hash(std::string_view text);

}  // namespace akira
