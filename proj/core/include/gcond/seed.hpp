#pragma once

#include <cstdint>

namespace gcond {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent seed for (stream, index) under a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(base ^ mix64(stream)) + index);
}

// Stream tags.
inline constexpr std::uint64_t kStreamTheta = 1;
inline constexpr std::uint64_t kStreamPhi = 2;
inline constexpr std::uint64_t kStreamInit = 3;
inline constexpr std::uint64_t kStreamSampling = 4;
inline constexpr std::uint64_t kStreamEval = 5;
inline constexpr std::uint64_t kStreamSelect = 6;
inline constexpr std::uint64_t kStreamDropout = 7;

}  // namespace gcond
