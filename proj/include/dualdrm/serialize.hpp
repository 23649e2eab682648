#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualdrm/dual_roadmap.hpp"

namespace dualdrm {

class BadMagicError : public FormatError {
public:
  using FormatError::FormatError;
};
class VersionError : public FormatError {
public:
  using FormatError::FormatError;
};
class ChecksumError : public FormatError {
public:
  using FormatError::FormatError;
};
class TruncationError : public FormatError {
public:
  using FormatError::FormatError;
};

inline constexpr char kFileMagic[8] = {'D', 'U', 'A', 'L', 'D', 'R', 'M', '\0'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class PayloadKind : std::uint32_t {
  roadmap = 1,
  dual_roadmap = 2,
};

/// Fixed 40-byte little-endian header preceding every binary payload:
/// magic, format version, payload kind, FNV-1a checksum over the payload
/// bytes, and the grid/discretization/metric binding hash.
struct FileHeader {
  std::uint32_t version = kFormatVersion;
  PayloadKind kind = PayloadKind::roadmap;
  std::uint64_t checksum = 0;
  std::uint64_t meta_hash = 0;
  std::uint64_t payload_size = 0;
};

void save_roadmap(const std::string& path, const Roadmap& r);
Roadmap load_roadmap(const std::string& path);

/// Container: shared torso table, two roadmap blocks, two inter-map CSR
/// blocks, one checksum. When `verify_model` is given the loaded roadmaps'
/// support invariants are re-evaluated (slow; debug use).
void save_dual(const std::string& path, const DualRoadmap& dual);
DualRoadmap load_dual(const std::string& path,
                      const RobotModel* verify_model = nullptr);

/// In-memory encodings, exposed for byte-identity tests.
std::vector<std::uint8_t> encode_roadmap(const Roadmap& r);
std::vector<std::uint8_t> encode_dual(const DualRoadmap& dual);

/// Reads only the header of a serialized file.
FileHeader peek_header(const std::string& path);

struct CompatResult {
  bool compatible = true;
  std::string mismatch;  // name of the first differing field

  explicit operator bool() const { return compatible; }
};

/// Exact-match compatibility between two roadmap parameter sets: grid spec,
/// voxel size, padding, discretization and metric weights.
CompatResult hash_compatibility(const RoadmapMeta& a, const RoadmapMeta& b);

/// Scenario-side compatibility: the scenario only pins the voxel grid.
CompatResult hash_compatibility(const RoadmapMeta& a, const VoxelGrid& scenario_grid);

}  // namespace dualdrm
