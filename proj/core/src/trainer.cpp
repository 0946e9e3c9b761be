#include "lsvd/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "lsvd/adam.hpp"
#include "lsvd/error.hpp"
#include "lsvd/rng.hpp"
#include "lsvd/svd.hpp"
#include "parallel_for.hpp"

namespace lsvd {
namespace {

constexpr std::uint64_t kInitStream = 0x1d;
constexpr std::uint64_t kShuffleStream = 0x5f;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t pair, std::size_t sample, int member) {
  return derive_seed(derive_seed(derive_seed(seed, pair), sample), static_cast<std::uint64_t>(member));
}

struct PreparedItem {
  Matrix x;
  Matrix z;
  const SvdTriple* svd_x = nullptr;
  const SvdTriple* svd_z = nullptr;
  SvdTriple own_x;
  SvdTriple own_z;
};

}  // namespace

std::size_t default_samples_per_pair(std::size_t pairs) {
  if (pairs <= 1) return 5000;
  if (pairs > 5) return 500;
  return (5000 + pairs - 1) / pairs;
}

std::size_t TrainConfig::resolved_samples_per_pair() const {
  return samples_per_pair.value_or(default_samples_per_pair(pairs.size()));
}

void TrainConfig::validate() const {
  if (samples_per_pair && *samples_per_pair == 0) throw ValidationError("N must be positive");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be >= 0");
  if (batch == 0) throw ValidationError("batch size must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be >= 0");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  if (!(avi.rho >= 0.0 && avi.rho <= kMaxRho)) throw ValidationError("rho out of range [0, 1.5]");
  for (double l : {avi.lambdas.l1, avi.lambdas.l2, avi.lambdas.l3, avi.lambdas.l4}) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("loss weights must be >= 0");
  }
}

std::uint64_t init_seed_for(std::uint64_t run_seed) { return derive_seed(run_seed, kInitStream); }

Dataset::Dataset(std::vector<LatentPair> pairs, std::size_t samples_per_pair, double sigma,
                 std::uint64_t seed)
    : pairs_(std::move(pairs)), samples_per_pair_(samples_per_pair), sigma_(sigma), seed_(seed) {
  if (pairs_.empty()) throw ValidationError("dataset needs at least one pair");
  if (samples_per_pair_ == 0) throw ValidationError("samples per pair must be positive");
  if (!(sigma_ >= 0.0)) throw ValidationError("sigma must be >= 0");
  const LatentShape& ref = pairs_.front().x.shape();
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    if (!(pairs_[p].x.shape() == ref) || !(pairs_[p].z.shape() == ref)) {
      throw ValidationError("pair " + std::to_string(p) + " shape mismatch: expected " +
                            to_string(ref) + ", got x " + to_string(pairs_[p].x.shape()) +
                            " and z " + to_string(pairs_[p].z.shape()));
    }
  }
}

Dataset::Index Dataset::locate(std::size_t item) const {
  if (item >= size()) throw ValidationError("dataset index out of range");
  const std::size_t c = channels();
  return {item / (samples_per_pair_ * c), (item / c) % samples_per_pair_, item % c};
}

LatentPair Dataset::sample(std::size_t pair, std::size_t index) const {
  const LatentPair& src = pairs_.at(pair);
  if (sigma_ == 0.0) return src;
  return {perturb(src.x, sigma_, sample_seed(seed_, pair, index, 0)),
          perturb(src.z, sigma_, sample_seed(seed_, pair, index, 1))};
}

Dataset::Item Dataset::item(std::size_t i) const {
  const Index idx = locate(i);
  if (sigma_ == 0.0) {
    const LatentPair& src = pairs_[idx.pair];
    return {idx, src.x.channel(idx.channel), src.z.channel(idx.channel)};
  }
  const LatentPair s = sample(idx.pair, idx.sample);
  return {idx, s.x.channel(idx.channel), s.z.channel(idx.channel)};
}

Dataset make_dataset(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.pairs.empty()) throw ValidationError("no training pairs given");
  std::vector<LatentPair> pairs;
  for (const PairPaths& p : cfg.pairs) pairs.push_back({load_latent(p.x), load_latent(p.z)});
  return Dataset(std::move(pairs), cfg.resolved_samples_per_pair(), cfg.sigma, cfg.seed);
}

TrainResult train(const TrainConfig& cfg, const StepObserver& observer) {
  return train(make_dataset(cfg), cfg, observer);
}

TrainResult train(const Dataset& data, const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  const LatentShape& shape = data.shape();
  if (shape.height != shape.width) {
    throw ValidationError("training requires square channels, got " + to_string(shape));
  }
  const std::size_t n = shape.height;
  cfg.avi.validate(n);

  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();

  TrainResult result{init_model(PhiDims::for_channel(shape.height, shape.width),
                                init_seed_for(cfg.seed)),
                     {}};
  TrainHistory& history = result.history;
  history.config_json = config_to_json(cfg);
  AdamState adam = make_adam_state(result.model);

  // Without perturbation every sample of a pair is the source pair, so one
  // SVD per (pair, channel) serves all items.
  std::vector<SvdTriple> cached_x;
  std::vector<SvdTriple> cached_z;
  if (data.sigma() == 0.0) {
    const std::size_t slots = data.pair_count() * data.channels();
    cached_x.resize(slots);
    cached_z.resize(slots);
    detail::parallel_for(slots, [&](std::size_t s) {
      const LatentPair& src = data.source(s / data.channels());
      cached_x[s] = svd(src.x.channel(s % data.channels()));
      cached_z[s] = svd(src.z.channel(s % data.channels()));
    });
  }

  std::vector<std::size_t> order(data.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Xoshiro256 shuffle(derive_seed(derive_seed(cfg.seed, kShuffleStream), epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[j]);
    }

    EpochRecord epoch_record{epoch, {}, 0.0};
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t count = std::min(cfg.batch, order.size() - start);

      std::vector<PreparedItem> items(count);
      detail::parallel_for(count, [&](std::size_t b) {
        Dataset::Item it = data.item(order[start + b]);
        PreparedItem& p = items[b];
        p.x = std::move(it.x);
        p.z = std::move(it.z);
        if (data.sigma() == 0.0) {
          const std::size_t slot = it.index.pair * data.channels() + it.index.channel;
          p.svd_x = &cached_x[slot];
          p.svd_z = &cached_z[slot];
        } else {
          p.own_x = svd(p.x);
          p.own_z = svd(p.z);
          p.svd_x = &p.own_x;
          p.svd_z = &p.own_z;
        }
      });

      Matrix inputs(count, shape.channel_size());
      for (std::size_t b = 0; b < count; ++b) {
        const auto src = items[b].x.values();
        std::copy(src.begin(), src.end(), inputs.row(b).begin());
      }
      const PhiOutput fwd = phi_forward(result.model, inputs);

      std::vector<AviLossGradient> per_item(count);
      detail::parallel_for(count, [&](std::size_t b) {
        per_item[b] = avi_loss_and_gradient(*items[b].svd_x, *items[b].svd_z, items[b].x,
                                            items[b].z, fwd.S.row(b), fwd.delta_s.row(b), cfg.avi);
      });

      // Mean over the batch; reduction runs in item order.
      const double inv = 1.0 / static_cast<double>(count);
      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      Matrix grad_S(count, n);
      Matrix grad_ds(count, n);
      for (std::size_t b = 0; b < count; ++b) {
        const AviLossGradient& g = per_item[b];
        rec.parts.l1 += g.parts.l1 * inv;
        rec.parts.l2 += g.parts.l2 * inv;
        rec.parts.l3 += g.parts.l3 * inv;
        rec.parts.l4 += g.parts.l4 * inv;
        for (std::size_t i = 0; i < n; ++i) {
          grad_S(b, i) = g.grad_S[i] * inv;
          grad_ds(b, i) = g.grad_delta_s[i] * inv;
        }
      }
      rec.total = loss_total(rec.parts, cfg.avi.lambdas);
      if (!std::isfinite(rec.total) || !grad_S.all_finite() || !grad_ds.all_finite()) {
        throw NumericError("training diverged at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + "): L_AVI = " + fmt(rec.total));
      }

      const PhiGradients grads = phi_backward(result.model, fwd.cache, grad_S, grad_ds);
      adam_step(result.model, adam, grads, cfg.lr);

      rec.wall_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - started).count();
      const double weight = static_cast<double>(count) / static_cast<double>(order.size());
      epoch_record.parts.l1 += rec.parts.l1 * weight;
      epoch_record.parts.l2 += rec.parts.l2 * weight;
      epoch_record.parts.l3 += rec.parts.l3 * weight;
      epoch_record.parts.l4 += rec.parts.l4 * weight;
      history.steps.push_back(rec);
      if (observer) observer(rec);
      ++step;
    }
    epoch_record.total = loss_total(epoch_record.parts, cfg.avi.lambdas);
    history.epochs.push_back(epoch_record);
  }
  history.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - started).count();
  return result;
}

std::string config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const PairPaths& p : cfg.pairs) pairs.push_back({{"x", p.x.string()}, {"z", p.z.string()}});
  j["pairs"] = pairs;
  j["n"] = cfg.resolved_samples_per_pair();
  j["sigma"] = cfg.sigma;
  j["k"] = cfg.avi.k;
  j["rho"] = cfg.avi.rho;
  j["lambda1"] = cfg.avi.lambdas.l1;
  j["lambda2"] = cfg.avi.lambdas.l2;
  j["lambda3"] = cfg.avi.lambdas.l3;
  j["lambda4"] = cfg.avi.lambdas.l4;
  j["batch"] = cfg.batch;
  j["lr"] = cfg.lr;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

void write_history_csv(const TrainHistory& history, std::ostream& out) {
  out << "step,epoch,L1,L2,L3,L4,L_total,wall_ms\n";
  for (const StepRecord& r : history.steps) {
    out << r.step << ',' << r.epoch << ',' << fmt(r.parts.l1) << ',' << fmt(r.parts.l2) << ','
        << fmt(r.parts.l3) << ',' << fmt(r.parts.l4) << ',' << fmt(r.total) << ','
        << fmt(std::round(r.wall_ms * 1000.0) / 1000.0) << '\n';
  }
}

EvalReport evaluate(const PhiModel* model, const LatentPair& pair, const AviConfig& cfg,
                    SingularValueSource source) {
  check_edit_inputs(pair.x, pair.z, source == SingularValueSource::Model ? model : nullptr);
  cfg.validate(pair.x.shape().height);
  const ChannelPredictions pred = predict_singular_values(pair.x, model, source);

  EvalReport report;
  report.channels.resize(pair.x.shape().channels);
  detail::parallel_for(report.channels.size(), [&](std::size_t c) {
    const Matrix x = pair.x.channel(c);
    const Matrix z = pair.z.channel(c);
    const SvdTriple sx = svd(x);
    const SvdTriple sz = svd(z);
    const AviOutput train_out =
        avi_forward(sx, sz, pred.S.row(c), pred.delta_s.row(c), cfg, Stage::Training);
    const AviOutput infer_out =
        avi_forward(sx, sz, pred.S.row(c), pred.delta_s.row(c), cfg, Stage::Inference);
    ChannelEval& e = report.channels[c];
    e.channel = c;
    e.pred_to_x = frobenius_distance(*infer_out.y_pred, x);
    e.pred_to_z = frobenius_distance(*infer_out.y_pred, z);
    e.yhat_to_z = frobenius_distance(*train_out.y_hat, z);
    e.ytilde_to_x = frobenius_distance(*train_out.y_tilde, x);
    if (e.pred_to_z > 0.0) {
      e.fidelity_ratio = e.pred_to_x / e.pred_to_z;
    } else {
      e.fidelity_ratio = e.pred_to_x == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
  });
  double sum = 0.0;
  for (const ChannelEval& e : report.channels) sum += e.fidelity_ratio;
  report.mean_fidelity_ratio = sum / static_cast<double>(report.channels.size());
  return report;
}

void write_eval_csv(const EvalReport& report, std::ostream& out) {
  out << "channel,pred_to_x,pred_to_z,yhat_to_z,ytilde_to_x,fidelity_ratio\n";
  for (const ChannelEval& e : report.channels) {
    out << e.channel << ',' << fmt(e.pred_to_x) << ',' << fmt(e.pred_to_z) << ','
        << fmt(e.yhat_to_z) << ',' << fmt(e.ytilde_to_x) << ',' << fmt(e.fidelity_ratio) << '\n';
  }
}

}  // namespace lsvd
