#include "lsvd/latent.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "lsvd/error.hpp"
#include "lsvd/rng.hpp"

namespace lsvd {
namespace {

constexpr std::array<char, 4> kMagic{'L', 'S', 'V', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeFloat32 = 1;
constexpr std::size_t kHeaderBytes = 24;
// Refuse anything above 2^31 elements (8 GiB of payload).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

static_assert(std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(p[i])} << (8 * i);
  return v;
}

void validate_shape(const LatentShape& s) {
  if (s.channels == 0 || s.height == 0 || s.width == 0) {
    throw ValidationError("latent shape must be positive, got " + to_string(s));
  }
  const std::uint64_t count = std::uint64_t{s.channels} * s.height * s.width;
  if (count > kMaxElements) throw ValidationError("dimension overflow: " + to_string(s));
}

}  // namespace

std::string to_string(const LatentShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
         std::to_string(s.width);
}

LatentTensor::LatentTensor(LatentShape shape, std::vector<float> data, LatentMeta meta)
    : shape_(shape), data_(std::move(data)), meta_(std::move(meta)) {
  validate_shape(shape_);
  if (data_.size() != shape_.element_count()) {
    throw ValidationError("latent data length " + std::to_string(data_.size()) +
                          " does not match shape " + to_string(shape_));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); })) {
    throw ValidationError("non-finite data in latent tensor");
  }
}

std::span<const float> LatentTensor::channel_data(std::size_t c) const {
  if (c >= shape_.channels) throw ValidationError("channel index out of range");
  return std::span<const float>(data_).subspan(c * shape_.channel_size(), shape_.channel_size());
}

Matrix LatentTensor::channel(std::size_t c) const {
  auto src = channel_data(c);
  return Matrix(shape_.height, shape_.width, std::vector<double>(src.begin(), src.end()));
}

Vector LatentTensor::channel_flat(std::size_t c) const {
  auto src = channel_data(c);
  return Vector(src.begin(), src.end());
}

LatentTensor LatentTensor::with_meta(LatentMeta meta) const {
  LatentTensor copy = *this;
  copy.meta_ = std::move(meta);
  return copy;
}

LatentTensor assemble_latent(std::span<const Matrix> channels, LatentMeta meta) {
  if (channels.empty()) throw ValidationError("assemble_latent: no channels");
  const std::size_t h = channels.front().rows();
  const std::size_t w = channels.front().cols();
  std::vector<float> data;
  data.reserve(channels.size() * h * w);
  for (const Matrix& ch : channels) {
    require_same_shape(ch, channels.front(), "assemble_latent");
    for (double v : ch.values()) data.push_back(static_cast<float>(v));
  }
  LatentShape shape{static_cast<std::uint32_t>(channels.size()), static_cast<std::uint32_t>(h),
                    static_cast<std::uint32_t>(w)};
  return LatentTensor(shape, std::move(data), std::move(meta));
}

std::filesystem::path meta_sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path out = path;
  out.replace_extension(".meta.json");
  return out;
}

void save_latent(const LatentTensor& tensor, const std::filesystem::path& path) {
  // The constructor guarantees finiteness; re-checked here because the
  // payload must never carry NaN/Inf.
  const auto data = tensor.data();
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw ValidationError("non-finite data");
  }

  std::vector<char> bytes;
  bytes.reserve(kHeaderBytes + data.size() * 4);
  for (char c : kMagic) bytes.push_back(c);
  put_u32(bytes, kVersion);
  put_u32(bytes, tensor.shape().channels);
  put_u32(bytes, tensor.shape().height);
  put_u32(bytes, tensor.shape().width);
  put_u32(bytes, kDtypeFloat32);
  for (float v : data) put_u32(bytes, std::bit_cast<std::uint32_t>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());

  const std::filesystem::path sidecar = meta_sidecar_path(path);
  if (tensor.meta() == LatentMeta{}) {
    std::error_code ec;
    std::filesystem::remove(sidecar, ec);  // stale sidecar from an earlier save
    return;
  }
  nlohmann::json j = nlohmann::json::object();
  const LatentMeta& m = tensor.meta();
  j["time_step"] = m.time_step ? nlohmann::json(*m.time_step) : nlohmann::json(nullptr);
  j["total_steps"] = m.total_steps;
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  j["tag"] = m.tag ? nlohmann::json(*m.tag) : nlohmann::json(nullptr);
  std::ofstream meta_out(sidecar, std::ios::trunc);
  if (!meta_out) throw IoError("cannot open " + sidecar.string() + " for writing");
  meta_out << j.dump(2) << '\n';
}

namespace {

LatentMeta read_sidecar(const std::filesystem::path& sidecar) {
  LatentMeta meta;
  std::ifstream in(sidecar);
  if (!in) return meta;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed metadata sidecar " + sidecar.string() + ": " + e.what());
  }
  if (!j.is_object()) throw IoError("metadata sidecar is not a JSON object: " + sidecar.string());
  try {
    if (j.contains("time_step") && !j["time_step"].is_null())
      meta.time_step = j["time_step"].get<std::int64_t>();
    if (j.contains("total_steps") && !j["total_steps"].is_null())
      meta.total_steps = j["total_steps"].get<std::int64_t>();
    if (j.contains("seed") && !j["seed"].is_null()) meta.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("tag") && !j["tag"].is_null()) meta.tag = j["tag"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad field in metadata sidecar " + sidecar.string() + ": " + e.what());
  }
  return meta;
}

}  // namespace

LatentTensor load_latent(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw IoError("not an LSVD file: " + path.string());
  }
  if (bytes.size() < kHeaderBytes) throw IoError("truncated header: " + path.string());
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kVersion) {
    throw IoError("unsupported LSVD version " + std::to_string(version) + " in " + path.string());
  }
  LatentShape shape{get_u32(bytes.data() + 8), get_u32(bytes.data() + 12),
                    get_u32(bytes.data() + 16)};
  const std::uint32_t dtype = get_u32(bytes.data() + 20);
  if (dtype != kDtypeFloat32) {
    throw IoError("unsupported dtype code " + std::to_string(dtype) + " in " + path.string());
  }
  try {
    validate_shape(shape);
  } catch (const ValidationError& e) {
    throw IoError(std::string(e.what()) + " in " + path.string());
  }
  const std::uint64_t payload = std::uint64_t{shape.element_count()} * 4;
  if (bytes.size() - kHeaderBytes < payload) throw IoError("truncated payload: " + path.string());
  if (bytes.size() - kHeaderBytes > payload) throw IoError("trailing bytes after payload: " + path.string());

  std::vector<float> data(shape.element_count());
  const char* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  if (!std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); })) {
    throw IoError("non-finite data in " + path.string());
  }
  return LatentTensor(shape, std::move(data), read_sidecar(meta_sidecar_path(path)));
}

LatentTensor synth_latent(const GenSpec& spec) {
  if (!(spec.stddev > 0.0) || !std::isfinite(spec.stddev)) {
    throw ValidationError("synth_latent: std must be positive");
  }
  if (!std::isfinite(spec.mean)) throw ValidationError("synth_latent: mean must be finite");
  validate_shape(spec.shape);
  NormalSampler normal(spec.seed);
  std::vector<float> data(spec.shape.element_count());
  for (float& v : data) v = static_cast<float>(spec.mean + spec.stddev * normal.next());
  LatentMeta meta;
  meta.seed = spec.seed;
  return LatentTensor(spec.shape, std::move(data), meta);
}

LatentTensor perturb(const LatentTensor& tensor, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("perturb: sigma must be >= 0");
  if (sigma == 0.0) return tensor;
  NormalSampler normal(seed);
  const auto src = tensor.data();
  std::vector<float> data(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    data[i] = static_cast<float>(static_cast<double>(src[i]) + sigma * normal.next());
  }
  return LatentTensor(tensor.shape(), std::move(data), tensor.meta());
}

}  // namespace lsvd
