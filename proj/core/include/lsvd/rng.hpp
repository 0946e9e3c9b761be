#pragma once

#include <array>
#include <cstdint>

namespace lsvd {

// SplitMix64 step. Used to expand a 64-bit seed into generator state and to
// derive independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives a child seed from a parent seed and a stream index. Pure function.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

// xoshiro256** 1.0 (Blackman & Vigna). State is filled from the seed with
// four successive SplitMix64 outputs.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t next();

  // Uniform double in [0, 1): top 53 bits of next() scaled by 2^-53.
  double uniform();

 private:
  std::array<std::uint64_t, 4> s_{};
};

// Standard normal sampler over Xoshiro256 using the basic Box-Muller
// transform. Each pair of uniforms (u1, u2) yields two normals,
//   r = sqrt(-2 ln(1 - u1)),  n0 = r cos(2 pi u2),  n1 = r sin(2 pi u2),
// returned in that order.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

  double next();

 private:
  Xoshiro256 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace lsvd
