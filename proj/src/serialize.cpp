#include "dualdrm/serialize.hpp"

#include <cstring>
#include <fstream>

namespace dualdrm {

namespace {

class ByteWriter {
public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void u64_list(const std::vector<std::uint64_t>& v) {
    u64(v.size());
    for (auto x : v) u64(x);
  }
  void id_list(const std::vector<NodeId>& v) {
    u64(v.size());
    for (auto x : v) u64(x);  // 64-bit ids on disk
  }
  void f64_list(const std::vector<double>& v) {
    u64(v.size());
    for (auto x : v) f64(x);
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<std::uint64_t> u64_list() {
    const std::uint64_t n = checked_count(8);
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = u64();
    return v;
  }
  std::vector<NodeId> id_list() {
    const std::uint64_t n = checked_count(8);
    std::vector<NodeId> v(n);
    for (auto& x : v) {
      const std::uint64_t raw = u64();
      if (raw > kInvalidNode) throw FormatError("node/voxel id overflows 32 bits");
      x = static_cast<NodeId>(raw);
    }
    return v;
  }
  std::vector<double> f64_list() {
    const std::uint64_t n = checked_count(8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }
  bool done() const { return pos_ == size_; }

private:
  std::uint64_t checked_count(std::size_t elem_size) {
    const std::uint64_t n = u64();
    if (n > (size_ - pos_) / elem_size) {
      throw TruncationError("list length exceeds remaining payload");
    }
    return n;
  }
  void need(std::size_t n) {
    if (pos_ + n > size_) throw TruncationError("payload ends prematurely");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_grid(ByteWriter& w, const VoxelGrid& g) {
  for (int k = 0; k < 3; ++k) w.f64(g.min_corner[k]);
  w.f64(g.voxel_size);
  for (int k = 0; k < 3; ++k) w.u64(g.dims[k]);
}

VoxelGrid read_grid(ByteReader& r) {
  Vec3 min;
  for (int k = 0; k < 3; ++k) min[k] = r.f64();
  const double size = r.f64();
  std::array<std::uint32_t, 3> dims;
  for (int k = 0; k < 3; ++k) dims[k] = static_cast<std::uint32_t>(r.u64());
  return VoxelGrid(min, size, dims);
}

void write_spec(ByteWriter& w, const std::vector<JointGrid>& spec) {
  w.u64(spec.size());
  for (const auto& g : spec) {
    w.f64(g.lo);
    w.f64(g.step);
    w.u64(g.count);
  }
}

std::vector<JointGrid> read_spec(ByteReader& r) {
  const std::uint64_t n = r.u64();
  if (n > 64) throw FormatError("implausible joint count");
  std::vector<JointGrid> out(n);
  for (auto& g : out) {
    g.lo = r.f64();
    g.step = r.f64();
    g.count = static_cast<std::uint32_t>(r.u64());
  }
  return out;
}

void write_roadmap_block(ByteWriter& w, const Roadmap& r) {
  w.u32(static_cast<std::uint32_t>(r.meta.chain));
  write_grid(w, r.meta.grid);
  w.f64(r.meta.padding);
  w.u32(r.meta.max_moving_joints);
  write_spec(w, r.meta.torso_spec);
  write_spec(w, r.meta.arm_spec);
  w.f64_list(r.meta.torso_weights);
  w.f64_list(r.meta.arm_weights);
  w.u64(r.torso.T);
  w.f64_list(r.torso.values);
  w.f64_list(r.node_values);
  w.u64(r.torso_of.size());
  for (auto t : r.torso_of) w.u64(t);
  w.u64_list(r.nodes_by_torso);
  w.u64_list(r.adj_offsets);
  w.id_list(r.adj);
  w.u64_list(r.mc_offsets);
  w.id_list(r.mc);
}

Roadmap read_roadmap_block(ByteReader& rd) {
  Roadmap r;
  const std::uint32_t chain = rd.u32();
  if (chain != 1 && chain != 2) throw FormatError("bad chain id");
  r.meta.chain = static_cast<ChainId>(chain);
  r.meta.grid = read_grid(rd);
  r.meta.padding = rd.f64();
  r.meta.max_moving_joints = rd.u32();
  r.meta.torso_spec = read_spec(rd);
  r.meta.arm_spec = read_spec(rd);
  r.meta.torso_weights = rd.f64_list();
  r.meta.arm_weights = rd.f64_list();
  r.torso.T = static_cast<std::uint32_t>(rd.u64());
  r.torso.values = rd.f64_list();
  r.node_values = rd.f64_list();
  const std::uint64_t n_nodes = rd.u64();
  r.torso_of.resize(n_nodes);
  for (auto& t : r.torso_of) t = static_cast<std::uint32_t>(rd.u64());
  r.nodes_by_torso = rd.u64_list();
  r.adj_offsets = rd.u64_list();
  r.adj = rd.id_list();
  r.mc_offsets = rd.u64_list();
  r.mc = rd.id_list();

  // structural sanity so later accessors cannot run off the end
  if (r.torso.T != r.meta.torso_spec.size() ||
      r.nodes_by_torso.size() != std::size_t(r.torso.size()) + 1 ||
      r.adj_offsets.size() != n_nodes + 1 ||
      r.mc_offsets.size() != r.meta.grid.total_voxels() + 1 ||
      r.adj_offsets.back() != r.adj.size() || r.mc_offsets.back() != r.mc.size() ||
      r.node_values.size() != n_nodes * r.joint_dof()) {
    throw FormatError("inconsistent roadmap block structure");
  }
  return r;
}

std::uint64_t header_meta_hash(const Roadmap& r) { return r.meta.compat_hash(); }

void write_file(const std::string& path, PayloadKind kind, std::uint64_t meta_hash,
                const std::vector<std::uint8_t>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);

  std::uint8_t header[40];
  std::memcpy(header, kFileMagic, 8);
  auto put32 = [&](std::size_t off, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) header[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  auto put64 = [&](std::size_t off, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) header[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
  };
  put32(8, kFormatVersion);
  put32(12, static_cast<std::uint32_t>(kind));
  put64(16, fnv1a64(payload.data(), payload.size()));
  put64(24, meta_hash);
  put64(32, payload.size());
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed: " + path);
}

struct LoadedFile {
  FileHeader header;
  std::vector<std::uint8_t> payload;
};

FileHeader parse_header(const std::uint8_t* h, std::size_t n) {
  if (n < 40) throw TruncationError("file shorter than the header");
  if (std::memcmp(h, kFileMagic, 8) != 0) {
    throw BadMagicError("not a dualdrm binary file");
  }
  auto get32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(h[off + i]) << (8 * i);
    return v;
  };
  auto get64 = [&](std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(h[off + i]) << (8 * i);
    return v;
  };
  FileHeader out;
  out.version = get32(8);
  out.kind = static_cast<PayloadKind>(get32(12));
  out.checksum = get64(16);
  out.meta_hash = get64(24);
  out.payload_size = get64(32);
  if (out.version != kFormatVersion) {
    throw VersionError("unsupported format version " + std::to_string(out.version));
  }
  return out;
}

LoadedFile read_file(const std::string& path, PayloadKind expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  LoadedFile f;
  f.header = parse_header(bytes.data(), bytes.size());
  if (f.header.kind != expected_kind) {
    throw FormatError("unexpected payload kind in " + path);
  }
  if (bytes.size() - 40 != f.header.payload_size) {
    throw TruncationError("payload size mismatch (truncated or padded file)");
  }
  f.payload.assign(bytes.begin() + 40, bytes.end());
  if (fnv1a64(f.payload.data(), f.payload.size()) != f.header.checksum) {
    throw ChecksumError("payload checksum mismatch");
  }
  return f;
}

}  // namespace

std::vector<std::uint8_t> encode_roadmap(const Roadmap& r) {
  ByteWriter w;
  write_roadmap_block(w, r);
  return w.take();
}

std::vector<std::uint8_t> encode_dual(const DualRoadmap& dual) {
  ByteWriter w;
  // shared torso table, then the two roadmap blocks, then the inter maps
  w.u64(dual.r1.torso.T);
  w.f64_list(dual.r1.torso.values);
  write_roadmap_block(w, dual.r1);
  write_roadmap_block(w, dual.r2);
  w.u64_list(dual.inter1_offsets);
  w.id_list(dual.inter1);
  w.u64_list(dual.inter2_offsets);
  w.id_list(dual.inter2);
  return w.take();
}

void save_roadmap(const std::string& path, const Roadmap& r) {
  write_file(path, PayloadKind::roadmap, header_meta_hash(r), encode_roadmap(r));
}

Roadmap load_roadmap(const std::string& path) {
  LoadedFile f = read_file(path, PayloadKind::roadmap);
  ByteReader rd(f.payload.data(), f.payload.size());
  Roadmap r = read_roadmap_block(rd);
  if (!rd.done()) throw FormatError("trailing bytes after roadmap payload");
  if (r.meta.compat_hash() != f.header.meta_hash) {
    throw FormatError("header meta hash does not match the payload");
  }
  return r;
}

void save_dual(const std::string& path, const DualRoadmap& dual) {
  write_file(path, PayloadKind::dual_roadmap, header_meta_hash(dual.r1),
             encode_dual(dual));
}

DualRoadmap load_dual(const std::string& path, const RobotModel* verify_model) {
  LoadedFile f = read_file(path, PayloadKind::dual_roadmap);
  ByteReader rd(f.payload.data(), f.payload.size());
  DualRoadmap dual;
  TorsoTable shared;
  shared.T = static_cast<std::uint32_t>(rd.u64());
  shared.values = rd.f64_list();
  dual.r1 = read_roadmap_block(rd);
  dual.r2 = read_roadmap_block(rd);
  dual.inter1_offsets = rd.u64_list();
  dual.inter1 = rd.id_list();
  dual.inter2_offsets = rd.u64_list();
  dual.inter2 = rd.id_list();
  if (!rd.done()) throw FormatError("trailing bytes after dual payload");

  if (!(dual.r1.torso == shared) || !(dual.r2.torso == shared)) {
    throw FormatError("roadmap torso tables do not match the shared table");
  }
  if (dual.inter1_offsets.size() != std::size_t(dual.r1.node_count()) + 1 ||
      dual.inter2_offsets.size() != std::size_t(dual.r2.node_count()) + 1 ||
      dual.inter1_offsets.back() != dual.inter1.size() ||
      dual.inter2_offsets.back() != dual.inter2.size()) {
    throw FormatError("inconsistent inter-map structure");
  }
  if (dual.r1.meta.compat_hash() != f.header.meta_hash) {
    throw FormatError("header meta hash does not match the payload");
  }
  if (verify_model) {
    if (!verify_roadmap_support(dual.r1, *verify_model) ||
        !verify_roadmap_support(dual.r2, *verify_model)) {
      throw FormatError("loaded roadmap fails support re-verification");
    }
  }
  return dual;
}

FileHeader peek_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::uint8_t h[40];
  in.read(reinterpret_cast<char*>(h), sizeof(h));
  if (in.gcount() != sizeof(h)) throw TruncationError("file shorter than the header");
  return parse_header(h, sizeof(h));
}

namespace {

CompatResult mismatch(const char* field) { return {false, field}; }

CompatResult compare_grids(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.min_corner != b.min_corner) return mismatch("grid.min_corner");
  if (a.voxel_size != b.voxel_size) return mismatch("grid.voxel_size");
  if (a.dims != b.dims) return mismatch("grid.dims");
  return {};
}

}  // namespace

CompatResult hash_compatibility(const RoadmapMeta& a, const RoadmapMeta& b) {
  if (auto g = compare_grids(a.grid, b.grid); !g) return g;
  if (a.padding != b.padding) return mismatch("padding");
  if (a.torso_weights != b.torso_weights) return mismatch("torso_weights");
  if (a.max_moving_joints != b.max_moving_joints) return mismatch("max_moving_joints");
  auto specs_equal = [](const std::vector<JointGrid>& x, const std::vector<JointGrid>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i].lo != y[i].lo || x[i].step != y[i].step || x[i].count != y[i].count)
        return false;
    }
    return true;
  };
  if (!specs_equal(a.torso_spec, b.torso_spec)) return mismatch("torso_spec");
  return {};
}

CompatResult hash_compatibility(const RoadmapMeta& a, const VoxelGrid& scenario_grid) {
  return compare_grids(a.grid, scenario_grid);
}

}  // namespace dualdrm
