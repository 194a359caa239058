#pragma once

#include <cstdint>
#include <cstring>
#include <span>

namespace dpct {

/// FNV-1a over the raw bytes of a run of doubles.
inline std::uint64_t fnv1a(std::span<const double> values, std::uint64_t h = 1469598103934665603ULL) {
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace dpct
