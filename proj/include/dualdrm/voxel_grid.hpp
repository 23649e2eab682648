#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

#include "dualdrm/types.hpp"

namespace dualdrm {

struct Sphere {
  Vec3 center;
  double radius;
};

/// Axis-aligned voxel discretization of the workspace. Ids are linear with x
/// fastest: id = ix + nx*(iy + ny*iz). Points on the upper boundary are out
/// of bounds.
struct VoxelGrid {
  Vec3 min_corner = Vec3::Zero();
  double voxel_size = 0.0;
  std::array<std::uint32_t, 3> dims = {0, 0, 0};

  VoxelGrid() = default;
  VoxelGrid(const Vec3& min, double size, std::array<std::uint32_t, 3> d);

  std::uint64_t total_voxels() const {
    return std::uint64_t(dims[0]) * dims[1] * dims[2];
  }

  std::optional<VoxelId> voxel_of(const Vec3& p) const;

  std::array<std::uint32_t, 3> cell_of(VoxelId id) const;
  VoxelId id_of(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz) const {
    return ix + dims[0] * (iy + std::uint64_t(dims[1]) * iz);
  }

  Vec3 voxel_center(VoxelId id) const;  // throws InputError on invalid id
  double circumscribing_radius() const;
  Sphere circumscribing_sphere(VoxelId id) const;

  /// Binds occupancy sets and roadmaps to this exact discretization.
  std::uint64_t spec_hash() const;

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
    return a.min_corner == b.min_corner && a.voxel_size == b.voxel_size &&
           a.dims == b.dims;
  }
};

/// Set of active voxel ids, stored as a bit array over the grid.
class OccupancySet {
public:
  OccupancySet() = default;
  explicit OccupancySet(const VoxelGrid& grid);

  void insert(VoxelId id);
  bool test(VoxelId id) const {
    return (bits_[id >> 6] >> (id & 63)) & 1u;
  }
  std::uint64_t size() const { return size_; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  void clear();

  std::vector<VoxelId> active_ids() const;  // ascending

  template <typename F>
  void for_each_active(F&& f) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word) {
        const int bit = std::countr_zero(word);
        f(static_cast<VoxelId>(w * 64 + bit));
        word &= word - 1;
      }
    }
  }

  std::uint64_t grid_hash() const { return grid_hash_; }

private:
  std::vector<std::uint64_t> bits_;
  std::uint64_t size_ = 0;
  std::uint64_t grid_hash_ = 0;
};

struct PointIngest {
  OccupancySet occupancy;
  std::size_t dropped = 0;  // points outside the grid
};

PointIngest occupancy_from_points(const VoxelGrid& grid,
                                  const std::vector<Vec3>& points);

}  // namespace dualdrm
