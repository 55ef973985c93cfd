#include "postseg/nifti.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace postseg {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kVoxOffset = 352;

enum Datatype : std::int16_t {
  kUInt8 = 2,
  kInt16 = 4,
  kInt32 = 8,
  kFloat32 = 16,
  kFloat64 = 64,
  kInt8 = 256,
  kUInt16 = 512,
  kUInt32 = 768,
  kInt64 = 1024,
  kUInt64 = 1280,
};

int datatype_size(std::int16_t dt) {
  switch (dt) {
    case kUInt8: case kInt8: return 1;
    case kInt16: case kUInt16: return 2;
    case kInt32: case kUInt32: case kFloat32: return 4;
    case kFloat64: case kInt64: case kUInt64: return 8;
    default: return 0;
  }
}

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& buf, bool swap) : buf_(buf), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    unsigned char tmp[sizeof(T)];
    std::memcpy(tmp, buf_.data() + offset, sizeof(T));
    if (swap_) std::reverse(tmp, tmp + sizeof(T));
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    return v;
  }

 private:
  const std::vector<unsigned char>& buf_;
  bool swap_;
};

template <typename T>
void put(std::vector<unsigned char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw IoError("no such file: " + path.string());
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> out;
  std::vector<unsigned char> chunk(1 << 16);
  for (;;) {
    int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) {
      gzclose(f);
      throw IoError("corrupt compressed stream in " + path.string());
    }
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  gzclose(f);
  return out;
}

struct RawVolume {
  Geometry geometry;
  std::vector<double> values;
};

RawVolume parse(const std::vector<unsigned char>& buf, const std::string& name) {
  if (buf.size() < kHeaderSize) throw ValidationError(name + ": truncated NIfTI header");
  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, buf.data(), 4);
  bool swap = false;
  if (sizeof_hdr != kHeaderSize) {
    auto u = static_cast<std::uint32_t>(sizeof_hdr);
    u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    if (u != static_cast<std::uint32_t>(kHeaderSize))
      throw ValidationError(name + ": not a NIfTI-1 file (sizeof_hdr)");
    swap = true;
  }
  if (std::memcmp(buf.data() + 344, "n+1", 4) != 0 &&
      std::memcmp(buf.data() + 344, "ni1", 4) != 0)
    throw ValidationError(name + ": bad NIfTI-1 magic");
  if (std::memcmp(buf.data() + 344, "ni1", 4) == 0)
    throw ValidationError(name + ": split header/image pairs are not supported");

  ByteReader r(buf, swap);
  std::int16_t ndim = r.get<std::int16_t>(40);
  if (ndim < 1 || ndim > 7) throw ValidationError(name + ": invalid dim[0]");
  std::int64_t dim[8] = {0, 1, 1, 1, 1, 1, 1, 1};
  for (int i = 1; i <= ndim; ++i) dim[i] = r.get<std::int16_t>(40 + 2 * i);
  for (int i = 4; i <= ndim; ++i)
    if (dim[i] != 1) throw ValidationError(name + ": only single 3D frames are supported");
  for (int i = 1; i <= 3; ++i)
    if (dim[i] < 1) throw ValidationError(name + ": non-positive dimension");

  std::int16_t datatype = r.get<std::int16_t>(70);
  int bytes = datatype_size(datatype);
  if (bytes == 0)
    throw ValidationError(name + ": unsupported datatype " + std::to_string(datatype));

  RawVolume raw;
  raw.geometry.dims = {dim[1], dim[2], dim[3]};
  raw.geometry.spacing = {std::fabs(r.get<float>(80)), std::fabs(r.get<float>(84)),
                          std::fabs(r.get<float>(88))};
  if (ndim < 2) raw.geometry.spacing.dy = 1.0;
  if (ndim < 3) raw.geometry.spacing.dz = 1.0;
  if (!raw.geometry.spacing.valid())
    throw ValidationError(name + ": pixdim must be positive and finite");

  Orientation& o = raw.geometry.orientation;
  o.qfac = r.get<float>(76) < 0.0f ? -1.0f : 1.0f;
  o.qform_code = r.get<std::int16_t>(252);
  o.sform_code = r.get<std::int16_t>(254);
  for (int i = 0; i < 3; ++i) {
    o.quatern[i] = r.get<float>(256 + 4 * i);
    o.qoffset[i] = r.get<float>(268 + 4 * i);
    for (int j = 0; j < 4; ++j) o.srow[i][j] = r.get<float>(280 + 16 * i + 4 * j);
  }
  o.has_srow = true;

  float vox_offset = r.get<float>(108);
  auto offset = static_cast<std::size_t>(vox_offset);
  if (vox_offset < kHeaderSize || offset != vox_offset)
    throw ValidationError(name + ": invalid vox_offset");
  std::size_t n = raw.geometry.dims.size();
  if (buf.size() < offset + n * static_cast<std::size_t>(bytes))
    throw ValidationError(name + ": truncated voxel data");

  float slope = r.get<float>(112);
  float inter = r.get<float>(116);
  bool scaled = std::isfinite(slope) && slope != 0.0f && !(slope == 1.0f && inter == 0.0f);

  raw.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t at = offset + i * static_cast<std::size_t>(bytes);
    double v = 0.0;
    switch (datatype) {
      case kUInt8: v = buf[at]; break;
      case kInt8: v = static_cast<std::int8_t>(buf[at]); break;
      case kInt16: v = r.get<std::int16_t>(at); break;
      case kUInt16: v = r.get<std::uint16_t>(at); break;
      case kInt32: v = r.get<std::int32_t>(at); break;
      case kUInt32: v = r.get<std::uint32_t>(at); break;
      case kInt64: v = static_cast<double>(r.get<std::int64_t>(at)); break;
      case kUInt64: v = static_cast<double>(r.get<std::uint64_t>(at)); break;
      case kFloat32: v = r.get<float>(at); break;
      case kFloat64: v = r.get<double>(at); break;
    }
    if (scaled) v = v * slope + inter;
    if (!std::isfinite(v)) throw ValidationError(name + ": non-finite voxel value");
    raw.values[i] = v;
  }
  return raw;
}

std::vector<unsigned char> make_header(const Geometry& g, std::int16_t datatype) {
  std::vector<unsigned char> h(kVoxOffset, 0);
  put<std::int32_t>(h, 0, kHeaderSize);
  h[38] = 'r';
  put<std::int16_t>(h, 40, 3);
  put<std::int16_t>(h, 42, static_cast<std::int16_t>(g.dims.nx));
  put<std::int16_t>(h, 44, static_cast<std::int16_t>(g.dims.ny));
  put<std::int16_t>(h, 46, static_cast<std::int16_t>(g.dims.nz));
  for (int i = 4; i < 8; ++i) put<std::int16_t>(h, 40 + 2 * i, 1);
  put<std::int16_t>(h, 70, datatype);
  put<std::int16_t>(h, 72, static_cast<std::int16_t>(8 * datatype_size(datatype)));
  const Orientation& o = g.orientation;
  put<float>(h, 76, o.qfac);
  put<float>(h, 80, static_cast<float>(g.spacing.dx));
  put<float>(h, 84, static_cast<float>(g.spacing.dy));
  put<float>(h, 88, static_cast<float>(g.spacing.dz));
  put<float>(h, 108, static_cast<float>(kVoxOffset));
  put<float>(h, 112, 1.0f);
  h[123] = 2;  // mm
  put<std::int16_t>(h, 252, o.qform_code);
  put<std::int16_t>(h, 254, o.sform_code);
  for (int i = 0; i < 3; ++i) {
    put<float>(h, 256 + 4 * i, o.quatern[i]);
    put<float>(h, 268 + 4 * i, o.qoffset[i]);
  }
  const double sp[3] = {g.spacing.dx, g.spacing.dy, g.spacing.dz};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      float v = o.has_srow ? o.srow[i][j] : (i == j ? static_cast<float>(sp[i]) : 0.0f);
      put<float>(h, 280 + 16 * i + 4 * j, v);
    }
  }
  std::memcpy(h.data() + 344, "n+1", 4);
  return h;
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& header,
                const void* data, std::size_t bytes) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "wb6");
    if (!f) throw IoError("cannot write " + path.string());
    bool ok = gzwrite(f, header.data(), static_cast<unsigned>(header.size())) ==
              static_cast<int>(header.size());
    const auto* p = static_cast<const unsigned char*>(data);
    std::size_t left = bytes;
    while (ok && left > 0) {
      auto chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
      ok = gzwrite(f, p, chunk) == static_cast<int>(chunk);
      p += chunk;
      left -= chunk;
    }
    if (gzclose(f) != Z_OK || !ok) throw IoError("write failed: " + path.string());
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("write failed: " + path.string());
}

void check_writable(const Geometry& g) {
  if (!g.spacing.valid()) throw ValidationError("cannot save: invalid spacing");
  for (auto d : {g.dims.nx, g.dims.ny, g.dims.nz})
    if (d < 1 || d > 32767) throw ValidationError("cannot save: dimension out of NIfTI-1 range");
}

}  // namespace

std::variant<ScalarVolume, LabelMap> load_nifti(const std::filesystem::path& path,
                                                 VolumeKind kind) {
  RawVolume raw = parse(read_all(path), path.string());
  if (kind == VolumeKind::Scalar) {
    std::vector<float> data(raw.values.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      data[i] = static_cast<float>(raw.values[i]);
      if (!std::isfinite(data[i]))
        throw ValidationError(path.string() + ": value overflows float32");
    }
    return ScalarVolume(raw.geometry, std::move(data));
  }
  std::vector<std::uint8_t> data(raw.values.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    double v = raw.values[i];
    double rounded = std::round(v);
    if (std::fabs(v - rounded) > 1e-3 || rounded < 0.0 || rounded > kMaxLabel)
      throw ValidationError(path.string() + ": label out of range / non-integral value " +
                            std::to_string(v));
    data[i] = static_cast<std::uint8_t>(rounded);
  }
  return LabelMap(raw.geometry, std::move(data));
}

ScalarVolume load_scalar_nifti(const std::filesystem::path& path) {
  return std::get<ScalarVolume>(load_nifti(path, VolumeKind::Scalar));
}

LabelMap load_label_nifti(const std::filesystem::path& path) {
  return std::get<LabelMap>(load_nifti(path, VolumeKind::Label));
}

void save_nifti(const ScalarVolume& volume, const std::filesystem::path& path) {
  check_writable(volume.geometry());
  validate_finite(volume);
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  write_file(path, make_header(volume.geometry(), kFloat32), volume.raw().data(),
             volume.size() * sizeof(float));
}

void save_nifti(const LabelMap& labels, const std::filesystem::path& path) {
  check_writable(labels.geometry());
  validate_labels(labels);
  write_file(path, make_header(labels.geometry(), kUInt8), labels.raw().data(), labels.size());
}

}  // namespace postseg
