#include "lsvd/adam.hpp"

#include <cmath>

#include "lsvd/error.hpp"

namespace lsvd {
namespace {

template <typename T>
void update(std::span<T> params, std::span<const double> grads, AdamMoments& mo, std::uint64_t t,
            double lr, const AdamHyper& h) {
  if (grads.size() != params.size()) throw ValidationError("adam: gradient shape mismatch");
  if (mo.m.size() != params.size()) {
    if (!mo.m.empty()) throw ValidationError("adam: moment shape mismatch");
    mo.m.assign(params.size(), 0.0);
    mo.v.assign(params.size(), 0.0);
  }
  if (t == 0) throw ValidationError("adam: step count starts at 1");
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    mo.m[i] = h.beta1 * mo.m[i] + (1.0 - h.beta1) * g;
    mo.v[i] = h.beta2 * mo.v[i] + (1.0 - h.beta2) * g * g;
    const double step = lr * (mo.m[i] / c1) / (std::sqrt(mo.v[i] / c2) + h.epsilon);
    if (step != 0.0) params[i] = static_cast<T>(static_cast<double>(params[i]) - step);
  }
}

}  // namespace

AdamState make_adam_state(const PhiModel& model, AdamHyper hyper) {
  AdamState state;
  state.hyper = hyper;
  for (const AffineLayer& layer : model.layers) {
    state.blocks.push_back({std::vector<double>(layer.weight.size()),
                            std::vector<double>(layer.weight.size())});
    state.blocks.push_back(
        {std::vector<double>(layer.bias.size()), std::vector<double>(layer.bias.size())});
  }
  return state;
}

void adam_update(std::span<float> params, std::span<const double> grads, AdamMoments& moments,
                 std::uint64_t t, double lr, const AdamHyper& hyper) {
  update(params, grads, moments, t, lr, hyper);
}

void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 std::uint64_t t, double lr, const AdamHyper& hyper) {
  update(params, grads, moments, t, lr, hyper);
}

void adam_step(PhiModel& model, AdamState& state, const PhiGradients& grads, double lr) {
  if (state.blocks.size() != 2 * PhiModel::kLayers) {
    throw ValidationError("adam: state does not match model layout");
  }
  ++state.step;
  for (std::size_t l = 0; l < PhiModel::kLayers; ++l) {
    AffineLayer& layer = model.layers[l];
    update(std::span<float>(layer.weight), std::span<const double>(grads.layers[l].weight),
           state.blocks[2 * l], state.step, lr, state.hyper);
    update(std::span<float>(layer.bias), std::span<const double>(grads.layers[l].bias),
           state.blocks[2 * l + 1], state.step, lr, state.hyper);
  }
}

}  // namespace lsvd
