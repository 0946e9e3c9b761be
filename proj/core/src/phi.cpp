#include "lsvd/phi.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include <Eigen/Core>

#include "lsvd/error.hpp"
#include "lsvd/rng.hpp"

namespace lsvd {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapD = Eigen::Map<RowMat>;
using ConstMapD = Eigen::Map<const RowMat>;
using ConstMapF = Eigen::Map<const RowMatF>;
using ConstVecF = Eigen::Map<const Eigen::VectorXf>;

constexpr std::array<char, 4> kMagic{'P', 'H', 'I', '1'};
constexpr std::uint32_t kVersion = 1;

void validate_dims(const PhiDims& d) {
  if (d.in == 0 || d.hidden == 0 || d.out == 0) throw ValidationError("Phi dims must be positive");
}

std::array<std::pair<std::size_t, std::size_t>, PhiModel::kLayers> layer_shapes(const PhiDims& d) {
  return {{{d.in, d.hidden}, {d.hidden, d.hidden}, {d.hidden, d.hidden}, {d.hidden, d.out},
           {d.hidden, d.out}}};
}

RowMat weights_as_double(const AffineLayer& layer) {
  return ConstMapF(layer.weight.data(), static_cast<Eigen::Index>(layer.out),
                   static_cast<Eigen::Index>(layer.in))
      .cast<double>();
}

Eigen::RowVectorXd bias_as_double(const AffineLayer& layer) {
  return ConstVecF(layer.bias.data(), static_cast<Eigen::Index>(layer.out)).cast<double>().transpose();
}

void check_model(const PhiModel& model) {
  const auto shapes = layer_shapes(model.dims);
  for (std::size_t l = 0; l < PhiModel::kLayers; ++l) {
    const AffineLayer& layer = model.layers[l];
    if (layer.in != shapes[l].first || layer.out != shapes[l].second ||
        layer.weight.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
      throw ValidationError("Phi model layer " + std::to_string(l) + " inconsistent with dims");
    }
  }
}

}  // namespace

PhiDims PhiDims::for_channel(std::size_t height, std::size_t width) {
  const std::size_t in = height * width;
  return {static_cast<std::uint32_t>(in), static_cast<std::uint32_t>(in),
          static_cast<std::uint32_t>(std::min(height, width))};
}

std::size_t PhiModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

PhiModel init_model(const PhiDims& dims, std::uint64_t seed) {
  validate_dims(dims);
  PhiModel model;
  model.dims = dims;
  NormalSampler normal(seed);
  const auto shapes = layer_shapes(dims);
  for (std::size_t l = 0; l < PhiModel::kLayers; ++l) {
    AffineLayer& layer = model.layers[l];
    layer.in = shapes[l].first;
    layer.out = shapes[l].second;
    const double stddev = std::sqrt(2.0 / static_cast<double>(layer.in));
    layer.weight.resize(layer.in * layer.out);
    for (float& w : layer.weight) w = static_cast<float>(stddev * normal.next());
    layer.bias.assign(layer.out, 0.0f);
  }
  return model;
}

PhiOutput phi_forward(const PhiModel& model, const Matrix& inputs) {
  check_model(model);
  const PhiDims& d = model.dims;
  if (inputs.cols() != d.in) {
    throw ValidationError("Phi input length " + std::to_string(inputs.cols()) + " does not match " +
                          std::to_string(d.in));
  }
  if (inputs.rows() == 0) throw ValidationError("Phi forward on an empty batch");
  if (!inputs.all_finite()) throw ValidationError("non-finite Phi input");

  const auto batch = static_cast<Eigen::Index>(inputs.rows());
  PhiOutput out;
  out.cache.dims = d;
  out.cache.batch = inputs.rows();
  out.cache.input.assign(inputs.values().begin(), inputs.values().end());

  RowMat current = ConstMapD(out.cache.input.data(), batch, d.in);
  for (std::size_t l = 0; l < PhiModel::kShared; ++l) {
    const AffineLayer& layer = model.layers[l];
    RowMat pre(batch, static_cast<Eigen::Index>(layer.out));
    pre.noalias() = current * weights_as_double(layer).transpose();
    pre.rowwise() += bias_as_double(layer);
    out.cache.pre[l].assign(pre.data(), pre.data() + pre.size());
    current = pre.cwiseMax(0.0);
    out.cache.hidden[l].assign(current.data(), current.data() + current.size());
  }

  auto head = [&](const AffineLayer& layer) {
    RowMat y(batch, static_cast<Eigen::Index>(layer.out));
    y.noalias() = current * weights_as_double(layer).transpose();
    y.rowwise() += bias_as_double(layer);
    return Matrix(inputs.rows(), layer.out, std::vector<double>(y.data(), y.data() + y.size()));
  };
  out.S = head(model.layers[PhiModel::kHeadS]);
  out.delta_s = head(model.layers[PhiModel::kHeadDeltaS]);
  return out;
}

PhiOutput phi_forward(const PhiModel& model, std::span<const double> input) {
  return phi_forward(model, Matrix(1, input.size(), std::vector<double>(input.begin(), input.end())));
}

PhiGradients phi_backward(const PhiModel& model, const PhiCache& cache, const Matrix& grad_S,
                          const Matrix& grad_delta_s) {
  check_model(model);
  const PhiDims& d = model.dims;
  if (!(cache.dims == d) || cache.input.size() != cache.batch * d.in ||
      cache.hidden[2].size() != cache.batch * d.hidden) {
    throw ValidationError("Phi backward: cache does not match model");
  }
  if (grad_S.rows() != cache.batch || grad_S.cols() != d.out ||
      grad_delta_s.rows() != cache.batch || grad_delta_s.cols() != d.out) {
    throw ValidationError("Phi backward: upstream gradient shape mismatch");
  }
  const auto batch = static_cast<Eigen::Index>(cache.batch);
  const auto hidden = static_cast<Eigen::Index>(d.hidden);

  PhiGradients grads;
  auto store = [&](std::size_t l, const RowMat& dz, const ConstMapD& input) {
    RowMat dw(dz.cols(), input.cols());
    dw.noalias() = dz.transpose() * input;
    grads.layers[l].weight.assign(dw.data(), dw.data() + dw.size());
    const Eigen::RowVectorXd db = dz.colwise().sum();
    grads.layers[l].bias.assign(db.data(), db.data() + db.size());
  };

  const ConstMapD top(cache.hidden[2].data(), batch, hidden);
  const RowMat gs = ConstMapD(grad_S.values().data(), batch, d.out);
  const RowMat gd = ConstMapD(grad_delta_s.values().data(), batch, d.out);
  store(PhiModel::kHeadS, gs, top);
  store(PhiModel::kHeadDeltaS, gd, top);

  RowMat dh(batch, hidden);
  dh.noalias() = gs * weights_as_double(model.layers[PhiModel::kHeadS]);
  dh.noalias() += gd * weights_as_double(model.layers[PhiModel::kHeadDeltaS]);

  for (std::size_t step = 0; step < PhiModel::kShared; ++step) {
    const std::size_t l = PhiModel::kShared - 1 - step;
    const ConstMapD pre(cache.pre[l].data(), batch, hidden);
    RowMat dz = (pre.array() > 0.0).select(dh, 0.0);
    if (l == 0) {
      store(l, dz, ConstMapD(cache.input.data(), batch, d.in));
    } else {
      store(l, dz, ConstMapD(cache.hidden[l - 1].data(), batch, hidden));
      dh.noalias() = dz * weights_as_double(model.layers[l]);
    }
  }
  return grads;
}

void save_model(const PhiModel& model, const std::filesystem::path& path) {
  check_model(model);
  std::vector<char> bytes;
  bytes.reserve(20 + 4 * model.parameter_count());
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  };
  bytes.insert(bytes.end(), kMagic.begin(), kMagic.end());
  put(kVersion);
  put(model.dims.in);
  put(model.dims.hidden);
  put(model.dims.out);
  for (const AffineLayer& layer : model.layers) {
    for (float w : layer.weight) put(std::bit_cast<std::uint32_t>(w));
    for (float b : layer.bias) put(std::bit_cast<std::uint32_t>(b));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

PhiModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto get = [&](std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= std::uint32_t{static_cast<unsigned char>(bytes[offset + i])} << (8 * i);
    return v;
  };
  if (bytes.size() < 20 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw IoError("not a PHI1 model file: " + path.string());
  }
  if (get(4) != kVersion) {
    throw IoError("unsupported model version " + std::to_string(get(4)) + " in " + path.string());
  }
  PhiModel model;
  model.dims = {get(8), get(12), get(16)};
  try {
    validate_dims(model.dims);
  } catch (const ValidationError& e) {
    throw IoError(std::string(e.what()) + " in " + path.string());
  }
  const auto shapes = layer_shapes(model.dims);
  std::uint64_t expected = 20;
  for (const auto& [fan_in, fan_out] : shapes) expected += 4ull * (fan_in * fan_out + fan_out);
  if (bytes.size() != expected) {
    throw IoError("model file size " + std::to_string(bytes.size()) + " does not match dims (" +
                  std::to_string(expected) + " expected): " + path.string());
  }
  std::size_t offset = 20;
  for (std::size_t l = 0; l < PhiModel::kLayers; ++l) {
    AffineLayer& layer = model.layers[l];
    layer.in = shapes[l].first;
    layer.out = shapes[l].second;
    layer.weight.resize(layer.in * layer.out);
    layer.bias.resize(layer.out);
    for (float& w : layer.weight) {
      w = std::bit_cast<float>(get(offset));
      offset += 4;
    }
    for (float& b : layer.bias) {
      b = std::bit_cast<float>(get(offset));
      offset += 4;
    }
  }
  for (const AffineLayer& layer : model.layers) {
    for (float w : layer.weight)
      if (!std::isfinite(w)) throw IoError("non-finite parameter in " + path.string());
    for (float b : layer.bias)
      if (!std::isfinite(b)) throw IoError("non-finite parameter in " + path.string());
  }
  return model;
}

}  // namespace lsvd
