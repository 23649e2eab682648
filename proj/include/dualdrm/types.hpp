#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace dualdrm {

using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Isometry3 = Eigen::Isometry3d;

using NodeId = std::uint32_t;
using VoxelId = std::uint32_t;

inline constexpr NodeId kInvalidNode = static_cast<NodeId>(-1);

enum class ChainId : std::uint8_t { arm1 = 1, arm2 = 2 };

inline ChainId other_chain(ChainId c) {
  return c == ChainId::arm1 ? ChainId::arm2 : ChainId::arm1;
}

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller input is invalid (joint-limit violation, malformed argument).
class InputError : public Error {
public:
  using Error::Error;
};

/// An API contract was violated, e.g. pairing nodes with different torso indices.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Two artifacts were built against different grids, paddings or metrics.
class CompatibilityError : public Error {
public:
  using Error::Error;
};

/// A resource cap was exceeded (node cap, pair-enumeration budget).
class CapacityError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents. Serialization errors derive from this.
class FormatError : public Error {
public:
  using Error::Error;
};

// 64-bit FNV-1a, used for content checksums and grid/metric binding hashes.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t seed) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  return fnv1a64(buf, 8, seed);
}

inline std::uint64_t fnv1a64_f64(double v, std::uint64_t seed) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  return fnv1a64_u64(bits, seed);
}

}  // namespace dualdrm
