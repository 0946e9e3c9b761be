#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lsvd/matrix.hpp"

namespace lsvd {

struct LatentShape {
  std::uint32_t channels = 4;
  std::uint32_t height = 64;
  std::uint32_t width = 64;

  std::size_t channel_size() const { return std::size_t{height} * width; }
  std::size_t element_count() const { return std::size_t{channels} * channel_size(); }
  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

std::string to_string(const LatentShape& shape);

struct LatentMeta {
  std::optional<std::int64_t> time_step;
  std::int64_t total_steps = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> tag;

  friend bool operator==(const LatentMeta&, const LatentMeta&) = default;
};

// C x H x W latent code, float32, row-major with the channel outermost.
// Construction validates the element count and finiteness; the value is
// immutable afterwards except through the explicit channel setter used by
// builders.
class LatentTensor {
 public:
  LatentTensor(LatentShape shape, std::vector<float> data, LatentMeta meta = {});

  const LatentShape& shape() const { return shape_; }
  const LatentMeta& meta() const { return meta_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> channel_data(std::size_t c) const;

  // Channel c as an H x W matrix of doubles.
  Matrix channel(std::size_t c) const;
  // Channel c flattened row-major into doubles.
  Vector channel_flat(std::size_t c) const;

  LatentTensor with_meta(LatentMeta meta) const;

  friend bool operator==(const LatentTensor&, const LatentTensor&) = default;

 private:
  LatentShape shape_;
  std::vector<float> data_;
  LatentMeta meta_;
};

// Assembles a tensor from per-channel H x W matrices (values rounded to float).
LatentTensor assemble_latent(std::span<const Matrix> channels, LatentMeta meta = {});

struct GenSpec {
  LatentShape shape;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double stddev = 1.0;
};

// Reads the LSVD binary format (and the optional `<stem>.meta.json` sidecar).
LatentTensor load_latent(const std::filesystem::path& path);

// Writes the LSVD binary format. The sidecar is written only when the meta
// differs from a default-constructed LatentMeta.
void save_latent(const LatentTensor& tensor, const std::filesystem::path& path);

// Path of the metadata sidecar for an LSVD file: the extension replaced by
// ".meta.json".
std::filesystem::path meta_sidecar_path(const std::filesystem::path& path);

// Deterministic i.i.d. normal tensor: element i (storage order) is
// float(mean + stddev * n_i) where n_i is the i-th NormalSampler(seed) draw.
LatentTensor synth_latent(const GenSpec& spec);

// tensor + sigma * g, g drawn from NormalSampler(seed) in storage order.
// sigma == 0 returns the input unchanged.
LatentTensor perturb(const LatentTensor& tensor, double sigma, std::uint64_t seed);

}  // namespace lsvd
