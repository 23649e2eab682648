#include "dualdrm/voxel_grid.hpp"

#include <algorithm>
#include <cmath>

namespace dualdrm {

VoxelGrid::VoxelGrid(const Vec3& min, double size, std::array<std::uint32_t, 3> d)
    : min_corner(min), voxel_size(size), dims(d) {
  if (!(voxel_size > 0.0)) throw InputError("voxel_size must be > 0");
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw InputError("grid dims must all be >= 1");
  }
  if (total_voxels() > std::uint64_t(kInvalidNode)) {
    throw InputError("grid has too many voxels for the id type");
  }
}

std::optional<VoxelId> VoxelGrid::voxel_of(const Vec3& p) const {
  std::uint32_t idx[3];
  for (int k = 0; k < 3; ++k) {
    const double c = std::floor((p[k] - min_corner[k]) / voxel_size);
    if (c < 0.0 || c >= double(dims[k])) return std::nullopt;
    idx[k] = static_cast<std::uint32_t>(c);
  }
  return id_of(idx[0], idx[1], idx[2]);
}

std::array<std::uint32_t, 3> VoxelGrid::cell_of(VoxelId id) const {
  const std::uint32_t ix = id % dims[0];
  const std::uint32_t iy = (id / dims[0]) % dims[1];
  const std::uint32_t iz = id / (dims[0] * dims[1]);
  return {ix, iy, iz};
}

Vec3 VoxelGrid::voxel_center(VoxelId id) const {
  if (id >= total_voxels()) throw InputError("voxel id out of range");
  const auto c = cell_of(id);
  return min_corner + voxel_size * Vec3(c[0] + 0.5, c[1] + 0.5, c[2] + 0.5);
}

double VoxelGrid::circumscribing_radius() const {
  return voxel_size * std::sqrt(3.0) / 2.0;
}

Sphere VoxelGrid::circumscribing_sphere(VoxelId id) const {
  return {voxel_center(id), circumscribing_radius()};
}

std::uint64_t VoxelGrid::spec_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (int k = 0; k < 3; ++k) h = fnv1a64_f64(min_corner[k], h);
  h = fnv1a64_f64(voxel_size, h);
  for (int k = 0; k < 3; ++k) h = fnv1a64_u64(dims[k], h);
  return h;
}

OccupancySet::OccupancySet(const VoxelGrid& grid)
    : bits_((grid.total_voxels() + 63) / 64, 0),
      size_(grid.total_voxels()),
      grid_hash_(grid.spec_hash()) {}

void OccupancySet::insert(VoxelId id) {
  if (id >= size_) throw InputError("voxel id out of range for occupancy set");
  bits_[id >> 6] |= std::uint64_t(1) << (id & 63);
}

std::size_t OccupancySet::count() const {
  std::size_t n = 0;
  for (std::uint64_t w : bits_) n += std::popcount(w);
  return n;
}

void OccupancySet::clear() {
  std::fill(bits_.begin(), bits_.end(), 0);
}

std::vector<VoxelId> OccupancySet::active_ids() const {
  std::vector<VoxelId> out;
  out.reserve(count());
  for_each_active([&](VoxelId id) { out.push_back(id); });
  return out;
}

PointIngest occupancy_from_points(const VoxelGrid& grid,
                                  const std::vector<Vec3>& points) {
  PointIngest out{OccupancySet(grid), 0};
  for (const auto& p : points) {
    if (auto id = grid.voxel_of(p)) {
      out.occupancy.insert(*id);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

}  // namespace dualdrm
