#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lsvd/matrix.hpp"

namespace lsvd {

// Layer widths of the singular-value predictor. Production sizes for a
// 64 x 64 channel are in = hidden = 4096, out = 64.
struct PhiDims {
  std::uint32_t in = 4096;
  std::uint32_t hidden = 4096;
  std::uint32_t out = 64;

  static PhiDims for_channel(std::size_t height, std::size_t width);
  friend bool operator==(const PhiDims&, const PhiDims&) = default;
};

// y = W x + b with W stored row-major as (out x in).
struct AffineLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<float> weight;
  std::vector<float> bias;
  friend bool operator==(const AffineLayer&, const AffineLayer&) = default;
};

// Three shared affine+ReLU layers feeding two linear heads, one for S and one
// for delta_s. Parameters are float32, matching the model file.
struct PhiModel {
  static constexpr std::size_t kShared = 3;
  static constexpr std::size_t kHeadS = 3;
  static constexpr std::size_t kHeadDeltaS = 4;
  static constexpr std::size_t kLayers = 5;

  PhiDims dims;
  // Shared layers 0..2, then head_S, then head_ds. This is also the order of
  // parameters in the model file.
  std::array<AffineLayer, kLayers> layers;

  std::size_t parameter_count() const;
  friend bool operator==(const PhiModel&, const PhiModel&) = default;
};

struct LayerGradient {
  std::vector<double> weight;
  std::vector<double> bias;
};

struct PhiGradients {
  std::array<LayerGradient, PhiModel::kLayers> layers;
};

// Activations kept by the forward pass for the backward pass. Row b of each
// buffer belongs to batch item b.
struct PhiCache {
  PhiDims dims;
  std::size_t batch = 0;
  std::vector<double> input;                   // batch x in
  std::array<std::vector<double>, 3> pre;      // batch x hidden, before ReLU
  std::array<std::vector<double>, 3> hidden;   // batch x hidden, after ReLU
};

struct PhiOutput {
  Matrix S;        // batch x out
  Matrix delta_s;  // batch x out
  PhiCache cache;
};

// He-normal weights (std sqrt(2 / fan_in)) drawn from NormalSampler(seed)
// layer by layer in file order and rounded to float; zero biases.
PhiModel init_model(const PhiDims& dims, std::uint64_t seed);

// Batched forward pass: `inputs` is batch x dims.in.
PhiOutput phi_forward(const PhiModel& model, const Matrix& inputs);
// Single-input forward pass; S and delta_s are 1 x out.
PhiOutput phi_forward(const PhiModel& model, std::span<const double> input);

// Gradients of sum_b (grad_S[b] . S[b] + grad_ds[b] . ds[b]) with respect to
// every parameter, for the batch recorded in `cache`.
PhiGradients phi_backward(const PhiModel& model, const PhiCache& cache, const Matrix& grad_S,
                          const Matrix& grad_delta_s);

// Model file: "PHI1" | version u32 = 1 | in, hidden, out u32 | parameters as
// float32, each layer weight (row-major, out x in) then bias, in layer order.
// All integers and floats little-endian.
void save_model(const PhiModel& model, const std::filesystem::path& path);
PhiModel load_model(const std::filesystem::path& path);

}  // namespace lsvd
