#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lsvd/latent.hpp"
#include "lsvd/matrix.hpp"
#include "lsvd/trainer.hpp"

namespace lsvd {

// ---------------------------------------------------------------------------
// Attribute-vector distance check.
//
// For each channel, U_hat is built with rho = 1 and the claim
// ||U_hat - U_x|| <= ||U_hat - U_z|| is evaluated. The precondition recorded
// alongside is sigma_max(x channel) <= sigma_max(z channel).

enum class TheoremNorm { Frobenius, Spectral };

struct TheoremChannel {
  std::size_t pair = 0;
  std::size_t channel = 0;
  double frobenius_to_x = 0.0;  // ||U_hat - U_x||_F
  double frobenius_to_z = 0.0;  // ||U_hat - U_z||_F
  double spectral_to_x = 0.0;   // ||U_hat - U_x||_2
  double spectral_to_z = 0.0;   // ||U_hat - U_z||_2
  double sigma_max_x = 0.0;
  double sigma_max_z = 0.0;
  bool assumption_holds = false;
  bool holds = false;  // inequality under the selected norm (non-strict)
};

struct TheoremReport {
  TheoremNorm norm = TheoremNorm::Frobenius;
  std::size_t k = 0;
  // k == N/2, the regime the claim is stated for.
  bool in_regime = false;
  std::vector<TheoremChannel> channels;
  std::size_t holds_count = 0;
  double satisfaction_rate = 0.0;
  double assumption_rate = 0.0;
};

TheoremReport verify_theorem(const LatentTensor& x, const LatentTensor& z, std::size_t k,
                             TheoremNorm norm = TheoremNorm::Frobenius);
// Aggregates over a corpus; channels are listed pair by pair.
TheoremReport verify_theorem(std::span<const LatentPair> corpus, std::size_t k,
                             TheoremNorm norm = TheoremNorm::Frobenius);

// ---------------------------------------------------------------------------
// Geodesic distance between leading singular subspaces over a latent sequence.

enum class GeodesicMode { Consecutive, AgainstFirst };
enum class SubspaceSide { Left, Right };

struct GeodesicPoint {
  std::size_t from = 0;  // index into the input sequence
  std::size_t to = 0;
  std::optional<std::int64_t> from_time_step;
  std::optional<std::int64_t> to_time_step;
  std::vector<double> per_channel;
  double mean = 0.0;      // over channels
  double variance = 0.0;  // population variance over channels
};

struct GeodesicSeries {
  GeodesicMode mode = GeodesicMode::Consecutive;
  SubspaceSide side = SubspaceSide::Left;
  std::size_t p = 4;
  std::vector<GeodesicPoint> points;
  double mean = 0.0;      // over all points and channels
  double variance = 0.0;
};

// Leading p left (columns of U) or right (rows of V) singular vectors of one
// channel, as an H x p or W x p matrix.
Matrix leading_subspace(const Matrix& channel, std::size_t p, SubspaceSide side);

GeodesicSeries geodesic_trajectory(std::span<const LatentTensor> latents, std::size_t p = 4,
                                   GeodesicMode mode = GeodesicMode::Consecutive,
                                   SubspaceSide side = SubspaceSide::Left);

// ---------------------------------------------------------------------------
// Singular values along a sequence.

struct SvTraceStep {
  std::size_t index = 0;
  std::optional<std::int64_t> time_step;
  std::vector<Vector> values;  // per channel, descending
  std::vector<Vector> deltas;  // per channel, values minus previous step; empty at step 0
};

std::vector<SvTraceStep> singular_value_trajectory(std::span<const LatentTensor> latents);

// ---------------------------------------------------------------------------
// Order mobility of singular vectors.

enum class MatchMethod { Greedy, Hungarian };

struct MobilityStep {
  std::size_t from = 0;
  std::size_t to = 0;
  // permutation[i] is the index at step `to` matched to index i at `from`.
  std::vector<std::size_t> permutation;
  // |cosine| of each matched pair, indexed like permutation.
  std::vector<double> cosines;
};

struct ChannelMobility {
  std::size_t channel = 0;
  std::vector<MobilityStep> steps;
  // ranks[t][i]: rank at sequence position t of the vector ranked i at position 0.
  std::vector<std::vector<std::size_t>> ranks;
  // ranks.back()[i] - i
  std::vector<long long> net_shift;
};

struct MobilityTrace {
  MatchMethod method = MatchMethod::Greedy;
  std::vector<ChannelMobility> channels;
};

// Assignment maximizing |U_a^T U_b| entries. Greedy repeatedly takes the
// largest remaining score (ties: lower row, then lower column); Hungarian
// maximizes the total score.
std::vector<std::size_t> match_vectors(const Matrix& scores, MatchMethod method);

MobilityTrace mobility_trace(std::span<const LatentTensor> latents,
                             MatchMethod method = MatchMethod::Greedy);

// ---------------------------------------------------------------------------
// Report output. Every CSV starts with a header row; column order is fixed.

// pair,channel,frobenius_to_x,frobenius_to_z,spectral_to_x,spectral_to_z,sigma_max_x,sigma_max_z,assumption_holds,holds
void write_csv(const TheoremReport& report, std::ostream& out);
// from,to,from_time_step,to_time_step,channel,distance   (channel "mean" rows carry the channel mean)
void write_csv(const GeodesicSeries& series, std::ostream& out);
// index,time_step,channel,rank,value,delta
void write_csv(std::span<const SvTraceStep> trace, std::ostream& out);
// channel,from,to,from_rank,to_rank,cosine
void write_csv(const MobilityTrace& trace, std::ostream& out);

std::string to_json(const TheoremReport& report);
std::string to_json(const GeodesicSeries& series);
std::string to_json(std::span<const SvTraceStep> trace);
std::string to_json(const MobilityTrace& trace);

std::string summary(const TheoremReport& report);
std::string summary(const GeodesicSeries& series);
std::string summary(std::span<const SvTraceStep> trace);
std::string summary(const MobilityTrace& trace);

}  // namespace lsvd
