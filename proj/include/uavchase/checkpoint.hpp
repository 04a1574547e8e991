#pragma once

// Binary checkpoint of the four networks.
//
//   "UAVC" | u32 version | 4 x { u8 tag ('d','x','y','z') | u32 tensor_count |
//   tensor_count x { u32 rank | rank x u32 dim | f32 values, row-major } } | u32 crc32
//
// All integers and floats little-endian; the CRC covers every preceding byte.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <zlib.h>

#include "uavchase/net.hpp"

namespace uavchase {

inline constexpr std::array<char, 4> kCheckpointMagic{'U', 'A', 'V', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NetworkQuad = std::array<NetworkParams<float>, 4>;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  unsigned char u8() {
    need(1);
    return bytes_[pos_++];
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw IntegrityError("checkpoint truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(const unsigned char* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const NetworkQuad& nets) {
  std::vector<unsigned char> out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, kCheckpointVersion);
  for (int n = 0; n < 4; ++n) {
    const auto& p = nets[n];
    const auto layout = tensor_layout(p.shape);
    if (layout.size() != p.tensors.size()) throw ShapeError("network tensor count mismatch");
    out.push_back(static_cast<unsigned char>(kDimNames[n]));
    detail::put_u32(out, static_cast<std::uint32_t>(p.tensors.size()));
    for (std::size_t i = 0; i < p.tensors.size(); ++i) {
      const auto& t = p.tensors[i];
      detail::put_u32(out, static_cast<std::uint32_t>(layout[i].rank));
      detail::put_u32(out, static_cast<std::uint32_t>(t.rows()));
      if (layout[i].rank == 2) detail::put_u32(out, static_cast<std::uint32_t>(t.cols()));
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
          detail::put_u32(out, std::bit_cast<std::uint32_t>(t(r, c)));
        }
      }
    }
  }
  detail::put_u32(out, detail::crc32_of(out.data(), out.size()));
  return out;
}

inline NetworkQuad decode_checkpoint(const std::vector<unsigned char>& bytes,
                                     const NetShape& expected) {
  if (bytes.size() < kCheckpointMagic.size() + 8) throw IntegrityError("checkpoint truncated");
  if (!std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw IntegrityError("checkpoint has bad magic bytes");
  }
  const std::size_t body = bytes.size() - 4;
  // CRC first so that truncation anywhere is reported as an integrity failure.
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (stored != detail::crc32_of(bytes.data(), body)) {
    throw IntegrityError("checkpoint CRC mismatch (corrupt or truncated file)");
  }
  detail::ByteReader in(bytes, body);
  for (std::size_t i = 0; i < kCheckpointMagic.size(); ++i) in.u8();
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw IntegrityError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto layout = tensor_layout(expected);
  NetworkQuad nets;
  for (int n = 0; n < 4; ++n) {
    const char tag = static_cast<char>(in.u8());
    if (tag != kDimNames[n]) throw IntegrityError(std::string("unexpected network tag '") + tag + "'");
    const std::uint32_t count = in.u32();
    if (count != layout.size()) {
      throw ShapeError("checkpoint network '" + std::string(1, tag) + "' has " +
                       std::to_string(count) + " tensors, expected " +
                       std::to_string(layout.size()));
    }
    auto p = ParamSet<float>::zeros(expected);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t rank = in.u32();
      if (rank < 1 || rank > 2) throw IntegrityError("checkpoint tensor rank must be 1 or 2");
      const std::uint32_t rows = in.u32();
      const std::uint32_t cols = rank == 2 ? in.u32() : 1;
      if (static_cast<int>(rank) != layout[i].rank || static_cast<int>(rows) != layout[i].rows ||
          static_cast<int>(cols) != layout[i].cols) {
        throw ShapeError("checkpoint tensor " + layout[i].name + " has shape " +
                         std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                         std::to_string(layout[i].rows) + "x" + std::to_string(layout[i].cols));
      }
      auto& t = p.tensors[i];
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = in.f32();
      }
    }
    nets[n] = std::move(p);
  }
  if (in.pos() != body) throw IntegrityError("checkpoint has trailing bytes");
  return nets;
}

inline void save_checkpoint(const std::string& path, const NetworkQuad& nets) {
  const auto bytes = encode_checkpoint(nets);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline NetworkQuad load_checkpoint(const std::string& path, const NetShape& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected);
}

}  // namespace uavchase
