#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace uavchase {

using Vec3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

// A caller passed an argument that breaks an operation's contract
// (action outside its space, mismatched shapes, ...).
struct ContractError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Tensor shapes disagree with the expected network layout.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A persisted artifact failed validation (magic, version, CRC, truncation).
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration key unknown, malformed or out of range. what() names the key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Derives the seed of a named substream ("channel", "worker-3", "eval-12")
// from the root seed. Streams with different names are decorrelated.
inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name) {
  return detail::splitmix64(detail::splitmix64(root) ^ detail::fnv1a(name));
}

inline std::uint64_t substream_seed(std::uint64_t root, std::string_view name,
                                    std::uint64_t index) {
  return substream_seed(root, std::string(name) + "-" + std::to_string(index));
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Shortest text that parses back to the same double.
inline std::string format_shortest(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

}  // namespace uavchase
