#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dualdrm/serialize.hpp"
#include "support.hpp"

using namespace dualdrm;
using namespace dualdrm::testing;

namespace {

constexpr double kPi = 3.14159265358979323846;

Roadmap tiny_roadmap() {
  const RobotModel m = mini_dual(1, 1);
  return build_roadmap(m, ChainId::arm1, {JointGrid(0, 0, kPi / 6)},
                       {JointGrid(0, kPi / 6, kPi / 6)}, small_grid(), 0.03);
}

DualRoadmap tiny_dual() {
  const RobotModel m = mini_dual(1, 2);
  return build_dual(m, {JointGrid(-kPi / 4, kPi / 4, kPi / 4)},
                    {JointGrid(-kPi / 2, kPi / 2, kPi / 2),
                     JointGrid(-kPi / 2, kPi / 2, kPi / 2)},
                    {JointGrid(-kPi / 2, kPi / 2, kPi / 2),
                     JointGrid(-kPi / 2, kPi / 2, kPi / 2)},
                    small_grid(), 0.03);
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("roadmap round trip is bit-identical") {
  const Roadmap r = tiny_roadmap();
  const std::string path = temp_path("rt_roadmap.bin");
  save_roadmap(path, r);
  const Roadmap loaded = load_roadmap(path);

  CHECK(encode_roadmap(loaded) == encode_roadmap(r));
  CHECK(loaded.node_values == r.node_values);
  CHECK(loaded.adj == r.adj);
  CHECK(loaded.mc == r.mc);
  CHECK(loaded.mc_offsets == r.mc_offsets);
  CHECK(loaded.torso.values == r.torso.values);
  CHECK(loaded.meta.compat_hash() == r.meta.compat_hash());

  // save(load(save(x))) == save(x) at file level
  const std::string path2 = temp_path("rt_roadmap2.bin");
  save_roadmap(path2, loaded);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("dual round trip is bit-identical, support verified on load") {
  const RobotModel m = mini_dual(1, 2);
  const DualRoadmap dual = tiny_dual();
  const std::string path = temp_path("rt_dual.bin");
  save_dual(path, dual);
  const DualRoadmap loaded = load_dual(path, &m);
  CHECK(encode_dual(loaded) == encode_dual(dual));
  CHECK(loaded.inter1 == dual.inter1);
  CHECK(loaded.inter2 == dual.inter2);
  CHECK(loaded.torso_support_equal());
}

TEST_CASE("corruption and truncation yield typed errors") {
  const Roadmap r = tiny_roadmap();
  const std::string path = temp_path("corrupt.bin");
  save_roadmap(path, r);
  const auto good = read_bytes(path);

  SUBCASE("flipping one payload byte is a checksum error") {
    auto bad = good;
    bad[good.size() - 1] ^= 0x01;
    write_bytes(path, bad);
    CHECK_THROWS_AS(load_roadmap(path), ChecksumError);
  }
  SUBCASE("bad magic") {
    auto bad = good;
    bad[0] = 'X';
    write_bytes(path, bad);
    CHECK_THROWS_AS(load_roadmap(path), BadMagicError);
  }
  SUBCASE("future version") {
    auto bad = good;
    bad[8] = 2;  // version field
    // keep checksum untouched: version mismatch must be detected first
    write_bytes(path, bad);
    CHECK_THROWS_AS(load_roadmap(path), VersionError);
  }
  SUBCASE("truncation") {
    for (std::size_t keep : {std::size_t(10), std::size_t(39), good.size() - 9}) {
      auto bad = good;
      bad.resize(keep);
      write_bytes(path, bad);
      CHECK_THROWS_AS(load_roadmap(path), TruncationError);
    }
  }
  SUBCASE("wrong payload kind") {
    write_bytes(path, good);
    CHECK_THROWS_AS(load_dual(path), FormatError);
  }
  SUBCASE("missing file is an io error") {
    CHECK_THROWS_AS(load_roadmap(temp_path("does_not_exist.bin")), IoError);
  }
}

TEST_CASE("fuzzed corruption never crashes, always throws typed errors") {
  const Roadmap r = tiny_roadmap();
  const std::string path = temp_path("fuzz.bin");
  save_roadmap(path, r);
  const auto good = read_bytes(path);

  TestRng rng(97);
  for (int trial = 0; trial < 200; ++trial) {
    auto bad = good;
    const int kind = static_cast<int>(rng.below(3));
    if (kind == 0) {
      bad.resize(rng.below(bad.size()));
    } else if (kind == 1) {
      for (int k = 0; k < 4; ++k) {
        bad[rng.below(bad.size())] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      }
    } else {
      const std::size_t n = 1 + rng.below(64);
      for (std::size_t k = 0; k < n; ++k) {
        bad.push_back(static_cast<std::uint8_t>(rng.below(256)));
      }
    }
    write_bytes(path, bad);
    try {
      (void)load_roadmap(path);
      // rare: a mutation may cancel out; accept successful loads
    } catch (const FormatError&) {
    } catch (const IoError&) {
    }
  }
}

TEST_CASE("header peek") {
  const Roadmap r = tiny_roadmap();
  const std::string path = temp_path("peek.bin");
  save_roadmap(path, r);
  const FileHeader h = peek_header(path);
  CHECK(h.kind == PayloadKind::roadmap);
  CHECK(h.version == kFormatVersion);
  CHECK(h.meta_hash == r.meta.compat_hash());
  CHECK(h.payload_size == encode_roadmap(r).size());
}

TEST_CASE("hash_compatibility") {
  const Roadmap r = tiny_roadmap();

  SUBCASE("identical metadata is compatible") {
    CHECK(hash_compatibility(r.meta, r.meta).compatible);
    CHECK(hash_compatibility(r.meta, r.meta.grid).compatible);
  }
  SUBCASE("voxel size mismatch names the field") {
    RoadmapMeta other = r.meta;
    other.grid.voxel_size = 0.05;
    const auto c = hash_compatibility(r.meta, other);
    CHECK_FALSE(c.compatible);
    CHECK(c.mismatch == "grid.voxel_size");
  }
  SUBCASE("padding mismatch names the field") {
    RoadmapMeta other = r.meta;
    other.padding = r.meta.padding + 0.01;
    const auto c = hash_compatibility(r.meta, other);
    CHECK_FALSE(c.compatible);
    CHECK(c.mismatch == "padding");
  }
  SUBCASE("metric weight mismatch names the field") {
    RoadmapMeta other = r.meta;
    other.torso_weights[0] = 2.0;
    const auto c = hash_compatibility(r.meta, other);
    CHECK_FALSE(c.compatible);
    CHECK(c.mismatch == "torso_weights");
  }
  SUBCASE("scenario grid mismatch") {
    const auto c = hash_compatibility(r.meta, paper_grid());
    CHECK_FALSE(c.compatible);
    CHECK(c.mismatch == "grid.min_corner");
  }
}
