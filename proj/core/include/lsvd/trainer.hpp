#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lsvd/avi.hpp"
#include "lsvd/edit.hpp"
#include "lsvd/latent.hpp"
#include "lsvd/phi.hpp"

namespace lsvd {

struct PairPaths {
  std::filesystem::path x;
  std::filesystem::path z;
};

struct LatentPair {
  LatentTensor x;
  LatentTensor z;
};

// Samples per pair when none is configured: 5000 for one pair, 500 for more
// than five, and ceil(5000 / pairs) in between.
std::size_t default_samples_per_pair(std::size_t pairs);

struct TrainConfig {
  std::vector<PairPaths> pairs;
  std::optional<std::size_t> samples_per_pair;
  double sigma = 0.05;
  // Training blends with rho = 1 by default.
  AviConfig avi{32, 1.0, {}};
  std::size_t batch = 256;
  double lr = 1e-3;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;

  std::size_t resolved_samples_per_pair() const;
  // Throws ValidationError on out-of-range values.
  void validate() const;
};

// Seed for Phi's initial weights, derived from the run seed.
std::uint64_t init_seed_for(std::uint64_t run_seed);

// Channel-pair training items. Item i decomposes as
// ((pair * samples_per_pair) + sample) * channels + channel. Sample s of
// pair p is (perturb(x, sigma, seed_x), perturb(z, sigma, seed_z)) with seeds
// derived from (run seed, p, s); the whole tensor is perturbed, then split.
class Dataset {
 public:
  Dataset(std::vector<LatentPair> pairs, std::size_t samples_per_pair, double sigma,
          std::uint64_t seed);

  struct Index {
    std::size_t pair;
    std::size_t sample;
    std::size_t channel;
  };

  struct Item {
    Index index;
    Matrix x;
    Matrix z;
  };

  std::size_t size() const { return pairs_.size() * samples_per_pair_ * channels(); }
  std::size_t pair_count() const { return pairs_.size(); }
  std::size_t samples_per_pair() const { return samples_per_pair_; }
  std::size_t channels() const { return shape().channels; }
  const LatentShape& shape() const { return pairs_.front().x.shape(); }
  double sigma() const { return sigma_; }
  const LatentPair& source(std::size_t pair) const { return pairs_.at(pair); }

  Index locate(std::size_t item) const;
  LatentPair sample(std::size_t pair, std::size_t index) const;
  Item item(std::size_t i) const;

 private:
  std::vector<LatentPair> pairs_;
  std::size_t samples_per_pair_;
  double sigma_;
  std::uint64_t seed_;
};

// Loads the configured pairs and builds the dataset.
Dataset make_dataset(const TrainConfig& cfg);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  LossParts parts;  // batch means
  double total = 0.0;
  double wall_ms = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossParts parts;  // item-weighted means over the epoch
  double total = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  double wall_ms = 0.0;
  std::string config_json;
};

struct TrainResult {
  PhiModel model;
  TrainHistory history;
};

// Called after every optimizer step; for progress reporting.
using StepObserver = std::function<void(const StepRecord&)>;

// Optimizes Phi on L_AVI with Adam. Only Phi's parameters receive gradients;
// the blended bases of each item are constants. Throws NumericError if the
// loss becomes non-finite.
TrainResult train(const Dataset& data, const TrainConfig& cfg, const StepObserver& observer = {});
TrainResult train(const TrainConfig& cfg, const StepObserver& observer = {});

// JSON echo of the effective configuration (pairs, resolved N, all knobs).
std::string config_to_json(const TrainConfig& cfg);

// CSV columns: step,epoch,L1,L2,L3,L4,L_total,wall_ms
void write_history_csv(const TrainHistory& history, std::ostream& out);

struct ChannelEval {
  std::size_t channel = 0;
  double pred_to_x = 0.0;     // ||y_pred - x||_F
  double pred_to_z = 0.0;     // ||y_pred - z||_F
  double yhat_to_z = 0.0;     // ||y_hat - z||_F
  double ytilde_to_x = 0.0;   // ||y_tilde - x||_F
  double fidelity_ratio = 0.0;  // pred_to_x / pred_to_z
};

struct EvalReport {
  std::vector<ChannelEval> channels;
  double mean_fidelity_ratio = 0.0;
};

// Runs both AVI stages on every channel with cfg.rho and reports distances.
// The fidelity ratio is 1 when both distances are zero.
EvalReport evaluate(const PhiModel* model, const LatentPair& pair, const AviConfig& cfg,
                    SingularValueSource source = SingularValueSource::Model);

// CSV columns: channel,pred_to_x,pred_to_z,yhat_to_z,ytilde_to_x,fidelity_ratio
void write_eval_csv(const EvalReport& report, std::ostream& out);

}  // namespace lsvd
