#include "momoc/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace momoc {
namespace {

constexpr bool kLittleEndian = std::endian::native == std::endian::little;

void swap_bytes(char* p, std::size_t width) {
  for (std::size_t i = 0; i < width / 2; ++i) std::swap(p[i], p[width - 1 - i]);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return in;
}

bool is_nifti(const std::filesystem::path& path) { return path.extension() == ".nii"; }

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::size_t samples_per_voxel(const std::string& dtype) {
  if (dtype == "c64") return 2;
  if (dtype == "f32") return 1;
  throw Error(ErrorCode::kInvalidInput, "unsupported PMV1 dtype '" + dtype + "'");
}

PmvFile complex_file(const std::vector<ComplexVolume>& vols, const std::string& meta_json,
                     bool stacked) {
  PmvFile f;
  f.dtype = "c64";
  const Dims d = vols.front().dims();
  if (stacked) f.dims.push_back(vols.size());
  f.dims.insert(f.dims.end(), {d.ny, d.nz, d.nx});
  f.meta_json = meta_json;
  f.payload.reserve(2 * d.size() * vols.size());
  for (const auto& v : vols) {
    require_same_dims(v.dims(), d, "stacked volume");
    for (const auto& z : v) {
      f.payload.push_back(static_cast<float>(z.real()));
      f.payload.push_back(static_cast<float>(z.imag()));
    }
  }
  return f;
}

// NIfTI-1 header field offsets.
constexpr std::size_t kHdrSize = 348;
constexpr std::size_t kVoxOffset = 352;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffMagic = 344;

template <typename T>
void put(std::vector<char>& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
  if (!kLittleEndian) swap_bytes(buf.data() + off, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& buf, std::size_t off, bool swap) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, buf.data() + off, sizeof(T));
  if (swap) swap_bytes(tmp, sizeof(T));
  T v;
  std::memcpy(&v, tmp, sizeof(T));
  return v;
}

template <typename T>
void decode_samples(const std::vector<char>& raw, bool swap, std::vector<double>& out) {
  out.resize(raw.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, raw.data() + i * sizeof(T), sizeof(T));
    if (swap) swap_bytes(tmp, sizeof(T));
    T v;
    std::memcpy(&v, tmp, sizeof(T));
    out[i] = static_cast<double>(v);
  }
}

}  // namespace

Dims PmvFile::volume_dims() const {
  const std::size_t off = dims.size() == 4 ? 1 : 0;
  return {dims[off], dims[off + 1], dims[off + 2]};
}

void write_pmv(const std::filesystem::path& path, const PmvFile& file) {
  if (file.dims.size() != 3 && file.dims.size() != 4) {
    throw Error(ErrorCode::kInvalidInput, "PMV1 dims must have 3 or 4 entries");
  }
  if (file.payload.size() != product(file.dims) * samples_per_voxel(file.dtype)) {
    throw Error(ErrorCode::kInvalidInput, "PMV1 payload length does not match dims");
  }
  nlohmann::json header;
  header["magic"] = "PMV1";
  header["dtype"] = file.dtype;
  header["dims"] = file.dims;
  header["endianness"] = "little";
  try {
    header["meta"] = nlohmann::json::parse(file.meta_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput, std::string("PMV1 meta is not valid JSON: ") + e.what());
  }
  auto out = open_out(path);
  out << header.dump() << '\n';
  std::vector<float> payload = file.payload;
  if (!kLittleEndian) {
    for (auto& v : payload) swap_bytes(reinterpret_cast<char*>(&v), sizeof(float));
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

PmvFile read_pmv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "'" + path.string() + "' is empty");
  PmvFile f;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("magic") != "PMV1") throw Error(ErrorCode::kInvalidInput, "bad PMV1 magic");
    if (header.value("endianness", "little") != "little") {
      throw Error(ErrorCode::kInvalidInput, "only little-endian PMV1 payloads are supported");
    }
    f.dtype = header.at("dtype").get<std::string>();
    f.dims = header.at("dims").get<std::vector<std::size_t>>();
    f.meta_json = header.contains("meta") ? header["meta"].dump() : "{}";
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidInput,
                "'" + path.string() + "' has a malformed PMV1 header: " + e.what());
  }
  if (f.dims.size() != 3 && f.dims.size() != 4) {
    throw Error(ErrorCode::kInvalidInput, "PMV1 dims must have 3 or 4 entries");
  }
  const std::size_t n = product(f.dims) * samples_per_voxel(f.dtype);
  f.payload.resize(n);
  in.read(reinterpret_cast<char*>(f.payload.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float)) {
    throw Error(ErrorCode::kIo, "'" + path.string() + "' payload is truncated");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::kIo, "'" + path.string() + "' has trailing bytes after the payload");
  }
  if (!kLittleEndian) {
    for (auto& v : f.payload) swap_bytes(reinterpret_cast<char*>(&v), sizeof(float));
  }
  return f;
}

void write_volume(const std::filesystem::path& path, const ComplexVolume& vol,
                  const std::string& meta_json) {
  write_pmv(path, complex_file({vol}, meta_json, false));
}

void write_volume(const std::filesystem::path& path, const RealVolume& vol,
                  const std::string& meta_json) {
  PmvFile f;
  f.dtype = "f32";
  f.dims = {vol.dims().ny, vol.dims().nz, vol.dims().nx};
  f.meta_json = meta_json;
  f.payload.assign(vol.begin(), vol.end());
  write_pmv(path, f);
}

void write_volumes(const std::filesystem::path& path, const std::vector<ComplexVolume>& vols,
                   const std::string& meta_json) {
  if (vols.empty()) throw Error(ErrorCode::kInvalidInput, "no volumes to write");
  write_pmv(path, complex_file(vols, meta_json, true));
}

void write_real_volume(const std::filesystem::path& path, const RealVolume& vol,
                       const std::string& meta_json) {
  if (is_nifti(path)) {
    write_nifti(path, vol);
  } else {
    write_volume(path, vol, meta_json);
  }
}

std::vector<ComplexVolume> read_volumes(const std::filesystem::path& path) {
  const PmvFile f = read_pmv(path);
  const Dims d = f.volume_dims();
  const bool complex = f.dtype == "c64";
  std::vector<ComplexVolume> out;
  std::size_t k = 0;
  for (std::size_t v = 0; v < f.n_volumes(); ++v) {
    ComplexVolume vol(d);
    for (auto& z : vol) {
      if (complex) {
        z = {f.payload[k], f.payload[k + 1]};
        k += 2;
      } else {
        z = f.payload[k++];
      }
    }
    out.push_back(std::move(vol));
  }
  return out;
}

ComplexVolume read_complex_volume(const std::filesystem::path& path) {
  if (is_nifti(path)) return to_complex(read_nifti(path));
  auto vols = read_volumes(path);
  if (vols.size() != 1) {
    throw Error(ErrorCode::kInvalidInput, "'" + path.string() + "' holds " +
                                              std::to_string(vols.size()) + " volumes, expected 1");
  }
  return std::move(vols.front());
}

RealVolume read_real_volume(const std::filesystem::path& path) {
  if (is_nifti(path)) return read_nifti(path);
  const PmvFile f = read_pmv(path);
  if (f.n_volumes() != 1 || f.dims.size() != 3) {
    throw Error(ErrorCode::kInvalidInput, "'" + path.string() + "' is not a single 3-D volume");
  }
  if (f.dtype == "c64") return magnitude(read_complex_volume(path));
  RealVolume out(f.volume_dims());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.payload[i];
  return out;
}

void write_nifti(const std::filesystem::path& path, const RealVolume& vol) {
  std::vector<char> hdr(kVoxOffset, 0);
  put<std::int32_t>(hdr, 0, static_cast<std::int32_t>(kHdrSize));
  const Dims d = vol.dims();
  const std::int16_t dim[8] = {3,
                               static_cast<std::int16_t>(d.nx),
                               static_cast<std::int16_t>(d.nz),
                               static_cast<std::int16_t>(d.ny),
                               1, 1, 1, 1};
  if (d.nx > 32767 || d.nz > 32767 || d.ny > 32767) {
    throw Error(ErrorCode::kInvalidInput, "volume too large for NIfTI-1");
  }
  for (int i = 0; i < 8; ++i) put<std::int16_t>(hdr, kOffDim + 2 * i, dim[i]);
  put<std::int16_t>(hdr, kOffDatatype, 16);  // float32
  put<std::int16_t>(hdr, kOffBitpix, 32);
  for (int i = 0; i < 8; ++i) put<float>(hdr, kOffPixdim + 4 * i, 1.0f);
  put<float>(hdr, kOffVoxOffset, static_cast<float>(kVoxOffset));
  put<float>(hdr, kOffSclSlope, 1.0f);
  put<float>(hdr, kOffSclInter, 0.0f);
  std::memcpy(hdr.data() + kOffMagic, "n+1\0", 4);

  std::vector<float> data(vol.begin(), vol.end());
  if (!kLittleEndian) {
    for (auto& v : data) swap_bytes(reinterpret_cast<char*>(&v), sizeof(float));
  }
  auto out = open_out(path);
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

RealVolume read_nifti(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<char> hdr(kHdrSize);
  in.read(hdr.data(), static_cast<std::streamsize>(kHdrSize));
  if (static_cast<std::size_t>(in.gcount()) != kHdrSize) {
    throw Error(ErrorCode::kIo, "'" + path.string() + "' is too short for a NIfTI-1 header");
  }
  bool swap = false;
  if (get<std::int32_t>(hdr, 0, false) != static_cast<std::int32_t>(kHdrSize)) {
    if (get<std::int32_t>(hdr, 0, true) != static_cast<std::int32_t>(kHdrSize)) {
      throw Error(ErrorCode::kInvalidInput, "'" + path.string() + "' is not a NIfTI-1 file");
    }
    swap = true;
  }
  if (std::memcmp(hdr.data() + kOffMagic, "n+1", 3) != 0) {
    throw Error(ErrorCode::kInvalidInput,
                "'" + path.string() + "' is not a single-file NIfTI-1 (magic n+1)");
  }
  std::int16_t dim[8];
  for (int i = 0; i < 8; ++i) dim[i] = get<std::int16_t>(hdr, kOffDim + 2 * i, swap);
  if (dim[0] < 3 || dim[0] > 7) {
    throw Error(ErrorCode::kInvalidInput, "NIfTI volume must have at least 3 dimensions");
  }
  for (int i = 4; i <= dim[0]; ++i) {
    if (dim[i] > 1) throw Error(ErrorCode::kInvalidInput, "NIfTI volumes beyond 3-D are not supported");
  }
  for (int i = 1; i <= 3; ++i) {
    if (dim[i] < 1) throw Error(ErrorCode::kInvalidInput, "NIfTI dims must be positive");
  }
  const Dims d{static_cast<std::size_t>(dim[3]), static_cast<std::size_t>(dim[2]),
               static_cast<std::size_t>(dim[1])};
  const auto datatype = get<std::int16_t>(hdr, kOffDatatype, swap);
  std::size_t width = 0;
  switch (datatype) {
    case 2: width = 1; break;
    case 4: case 512: width = 2; break;
    case 8: case 16: width = 4; break;
    case 64: width = 8; break;
    default:
      throw Error(ErrorCode::kInvalidInput,
                  "unsupported NIfTI datatype " + std::to_string(datatype));
  }
  const auto vox_offset = static_cast<std::streamoff>(get<float>(hdr, kOffVoxOffset, swap));
  in.seekg(std::max<std::streamoff>(vox_offset, static_cast<std::streamoff>(kVoxOffset)));
  std::vector<char> raw(d.size() * width);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw Error(ErrorCode::kIo, "'" + path.string() + "' voxel data is truncated");
  }
  std::vector<double> values;
  switch (datatype) {
    case 2: decode_samples<std::uint8_t>(raw, swap, values); break;
    case 4: decode_samples<std::int16_t>(raw, swap, values); break;
    case 512: decode_samples<std::uint16_t>(raw, swap, values); break;
    case 8: decode_samples<std::int32_t>(raw, swap, values); break;
    case 16: decode_samples<float>(raw, swap, values); break;
    default: decode_samples<double>(raw, swap, values); break;
  }
  const double slope = get<float>(hdr, kOffSclSlope, swap);
  const double inter = get<float>(hdr, kOffSclInter, swap);
  if (slope != 0.0 && std::isfinite(slope) && (slope != 1.0 || inter != 0.0)) {
    for (auto& v : values) v = slope * v + inter;
  }
  return RealVolume(d, values);
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

}  // namespace momoc
