#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsvd/phi.hpp"

namespace lsvd {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments for one flat parameter block.
struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

// Moments laid out like PhiModel: per layer, weight block then bias block.
struct AdamState {
  std::uint64_t step = 0;
  AdamHyper hyper;
  std::vector<AdamMoments> blocks;
};

AdamState make_adam_state(const PhiModel& model, AdamHyper hyper = {});

// One bias-corrected Adam update of a flat block at step `t` (1-based):
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
void adam_update(std::span<float> params, std::span<const double> grads, AdamMoments& moments,
                 std::uint64_t t, double lr, const AdamHyper& hyper);
void adam_update(std::span<double> params, std::span<const double> grads, AdamMoments& moments,
                 std::uint64_t t, double lr, const AdamHyper& hyper);

// Increments state.step and updates every parameter of `model`.
void adam_step(PhiModel& model, AdamState& state, const PhiGradients& grads, double lr);

}  // namespace lsvd
