#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "lsvd/error.hpp"
#include "lsvd/trainer.hpp"
#include "support.hpp"

namespace lsvd {
namespace {

LatentPair small_pair(std::uint32_t n = 8, std::uint32_t channels = 2) {
  return {synth_latent({{channels, n, n}, 1, 0.0, 1.0}), synth_latent({{channels, n, n}, 2, 0.0, 1.0})};
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.samples_per_pair = 16;
  cfg.sigma = 0.0;
  cfg.avi = {4, 1.0, {}};
  cfg.batch = 8;
  cfg.epochs = 2;
  cfg.seed = 3;
  return cfg;
}

TEST(TrainConfig, DefaultsMatchPublishedSettings) {
  const TrainConfig cfg;
  EXPECT_EQ(cfg.avi.k, 32u);
  EXPECT_EQ(cfg.avi.rho, 1.0);
  EXPECT_EQ(cfg.avi.lambdas, (LossWeights{3, 10, 10, 10}));
  EXPECT_EQ(cfg.batch, 256u);
  EXPECT_EQ(cfg.lr, 1e-3);
  EXPECT_EQ(cfg.epochs, 5u);
  EXPECT_EQ(cfg.sigma, 0.05);
}

TEST(TrainConfig, SamplesPerPairDefaults) {
  EXPECT_EQ(default_samples_per_pair(1), 5000u);
  EXPECT_EQ(default_samples_per_pair(2), 2500u);
  EXPECT_EQ(default_samples_per_pair(3), 1667u);
  EXPECT_EQ(default_samples_per_pair(5), 1000u);
  EXPECT_EQ(default_samples_per_pair(6), 500u);
  EXPECT_EQ(default_samples_per_pair(40), 500u);
}

TEST(TrainConfig, ValidationRejectsBadValues) {
  TrainConfig cfg = small_config();
  cfg.batch = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.lr = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.avi.lambdas.l2 = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = small_config();
  cfg.sigma = -0.1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Dataset, ZeroSigmaGivesCopiesOfThePair) {
  const LatentPair p = small_pair();
  const Dataset d({p}, 3, 0.0, 9);
  ASSERT_EQ(d.size(), 3u * 2u);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Dataset::Item it = d.item(i);
    EXPECT_EQ(it.index.sample, i / 2);
    EXPECT_EQ(it.index.channel, i % 2);
    EXPECT_EQ(it.x, p.x.channel(i % 2));
    EXPECT_EQ(it.z, p.z.channel(i % 2));
  }
  EXPECT_EQ(d.sample(0, 2).x, p.x);
}

TEST(Dataset, ItemCountArithmetic) {
  const LatentPair p = small_pair(8, 4);
  EXPECT_EQ(Dataset({p}, 5000, 0.0, 0).size(), 20000u);
  const Dataset two({p, p}, 7, 0.0, 0);
  EXPECT_EQ(two.size(), 56u);
  const Dataset::Index idx = two.locate(((1 * 7) + 5) * 4 + 3);
  EXPECT_EQ(idx.pair, 1u);
  EXPECT_EQ(idx.sample, 5u);
  EXPECT_EQ(idx.channel, 3u);
}

TEST(Dataset, PerturbedSamplesAreSeededAndIndependent) {
  const LatentPair p = small_pair();
  const Dataset a({p}, 4, 0.05, 11), b({p}, 4, 0.05, 11), c({p}, 4, 0.05, 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.item(i).x, b.item(i).x);
    EXPECT_EQ(a.item(i).z, b.item(i).z);
    EXPECT_FALSE(a.item(i).x == c.item(i).x);
  }
  EXPECT_FALSE(a.sample(0, 0).x == a.sample(0, 1).x);
  EXPECT_FALSE(a.sample(0, 0).x == a.sample(0, 0).z);
  // Channels of one sample come from one whole-tensor perturbation.
  const LatentPair s = a.sample(0, 2);
  EXPECT_EQ(a.item(2 * 2 + 1).x, s.x.channel(1));
}

TEST(Dataset, ShapeMismatchRejected) {
  const LatentPair p = small_pair(8), q = small_pair(6);
  EXPECT_THROW(Dataset({p, q}, 2, 0.0, 0), ValidationError);
}

TEST(Train, ZeroLearningRateKeepsInitAndConstantLoss) {
  TrainConfig cfg = small_config();
  cfg.lr = 0.0;
  cfg.batch = 64;  // whole dataset in each step
  const Dataset d({small_pair()}, 16, 0.0, cfg.seed);
  const TrainResult r = train(d, cfg);
  EXPECT_EQ(r.model, init_model(PhiDims::for_channel(8, 8), init_seed_for(cfg.seed)));
  ASSERT_EQ(r.history.steps.size(), 2u);
  EXPECT_NEAR(r.history.steps[0].total, r.history.steps[1].total,
              1e-12 * r.history.steps[0].total);
}

TEST(Train, StepCountAndLossDecomposition) {
  TrainConfig cfg = small_config();
  cfg.batch = 5;  // 32 items: six full batches and a partial one per epoch
  const Dataset d({small_pair()}, 16, 0.0, cfg.seed);
  const TrainResult r = train(d, cfg);
  ASSERT_EQ(r.history.steps.size(), 2u * 7u);
  ASSERT_EQ(r.history.epochs.size(), 2u);
  for (std::size_t i = 0; i < r.history.steps.size(); ++i) {
    const StepRecord& s = r.history.steps[i];
    EXPECT_EQ(s.step, i);
    EXPECT_EQ(s.epoch, i / 7);
    const double recomputed =
        3 * s.parts.l1 + 10 * s.parts.l2 + 10 * s.parts.l3 + 10 * s.parts.l4;
    EXPECT_NEAR(s.total, recomputed, 1e-9 * std::max(1.0, recomputed));
    EXPECT_TRUE(std::isfinite(s.total));
    EXPECT_GE(s.parts.l1, 0.0);
  }
  for (const EpochRecord& e : r.history.epochs) {
    const double recomputed =
        3 * e.parts.l1 + 10 * e.parts.l2 + 10 * e.parts.l3 + 10 * e.parts.l4;
    EXPECT_NEAR(e.total, recomputed, 1e-9 * std::max(1.0, recomputed));
  }
}

TEST(Train, EpochMeanIsItemWeightedMeanOfSteps) {
  TrainConfig cfg = small_config();
  cfg.batch = 5;
  cfg.epochs = 1;
  const Dataset d({small_pair()}, 16, 0.0, cfg.seed);
  const TrainResult r = train(d, cfg);
  double l1 = 0.0;
  for (std::size_t i = 0; i < r.history.steps.size(); ++i) {
    const double count = i + 1 < r.history.steps.size() ? 5.0 : 2.0;
    l1 += r.history.steps[i].parts.l1 * count / 32.0;
  }
  EXPECT_NEAR(r.history.epochs[0].parts.l1, l1, 1e-12 * l1);
}

TEST(Train, ReproducibleForSameConfig) {
  TrainConfig cfg = small_config();
  cfg.sigma = 0.05;
  const Dataset d({small_pair()}, 8, cfg.sigma, cfg.seed);
  const TrainResult a = train(d, cfg), b = train(d, cfg);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.history.steps.size(), b.history.steps.size());
  for (std::size_t i = 0; i < a.history.steps.size(); ++i)
    EXPECT_EQ(a.history.steps[i].total, b.history.steps[i].total);

  cfg.seed = 4;
  EXPECT_FALSE(train(Dataset({small_pair()}, 8, cfg.sigma, cfg.seed), cfg).model == a.model);
}

TEST(Train, SingleLossTermIsDrivenDown) {
  // lambda = (0, 0, 1, 0): S is pulled onto S_z.
  TrainConfig cfg = small_config();
  cfg.avi.lambdas = {0, 0, 1, 0};
  cfg.samples_per_pair = 512;
  cfg.batch = 256;
  cfg.epochs = 5;
  const Dataset d({small_pair(16, 4)}, 512, 0.0, cfg.seed);
  cfg.avi.k = 8;
  const TrainResult r = train(d, cfg);
  const double first = r.history.steps.front().parts.l3;
  const double last = r.history.epochs.back().parts.l3;
  EXPECT_LT(last, first);
  RecordProperty("l3_ratio", std::to_string(last / first));
}

TEST(Train, NonFiniteLossAborts) {
  TrainConfig cfg = small_config();
  cfg.avi.lambdas = {1e308, 1e308, 1e308, 1e308};
  const Dataset d({small_pair()}, 4, 0.0, cfg.seed);
  EXPECT_THROW(train(d, cfg), NumericError);
}

TEST(TrainHistory, CsvLayout) {
  TrainHistory h;
  h.steps.push_back({0, 0, {1, 2, 3, 4}, 73.0, 1.5});
  h.steps.push_back({1, 0, {0.5, 0, 0, 0}, 1.5, 2.25});
  std::ostringstream out;
  write_history_csv(h, out);
  EXPECT_EQ(out.str(),
            "step,epoch,L1,L2,L3,L4,L_total,wall_ms\n"
            "0,0,1,2,3,4,73,1.5\n"
            "1,0,0.5,0,0,0,1.5,2.25\n");
}

TEST(TrainConfig, JsonEchoCarriesResolvedValues) {
  TrainConfig cfg;
  cfg.pairs = {{"a.lat", "b.lat"}};
  const auto j = nlohmann::json::parse(config_to_json(cfg));
  EXPECT_EQ(j["n"], 5000);
  EXPECT_EQ(j["k"], 32);
  EXPECT_EQ(j["batch"], 256);
  EXPECT_EQ(j["lr"], 1e-3);
  EXPECT_EQ(j["epochs"], 5);
  EXPECT_EQ(j["lambda1"], 3.0);
  EXPECT_EQ(j["lambda4"], 10.0);
  EXPECT_EQ(j["pairs"][0]["z"], "b.lat");
}

TEST(Evaluate, IdentityPathReproducesX) {
  const LatentPair p = small_pair(8, 2);
  const EvalReport r = evaluate(nullptr, p, {4, 0.0, {}}, SingularValueSource::IdentityFromX);
  for (const ChannelEval& c : r.channels) {
    EXPECT_LT(c.pred_to_x, 1e-5 * frobenius_norm(p.x.channel(c.channel)));
    EXPECT_LT(c.fidelity_ratio, 1e-5);
  }
}

TEST(Evaluate, DegeneratePairIsSymmetric) {
  const LatentTensor x = synth_latent({{2, 8, 8}, 5, 0.0, 1.0});
  const PhiModel m = init_model(PhiDims::for_channel(8, 8), 1);
  const EvalReport r = evaluate(&m, {x, x}, {4, 1.0, {}});
  for (const ChannelEval& c : r.channels) {
    EXPECT_EQ(c.pred_to_x, c.pred_to_z);
    EXPECT_EQ(c.fidelity_ratio, 1.0);
  }
}

TEST(Evaluate, CsvHeader) {
  EvalReport r;
  r.channels.push_back({0, 1, 2, 3, 4, 0.5});
  std::ostringstream out;
  write_eval_csv(r, out);
  EXPECT_EQ(out.str(), "channel,pred_to_x,pred_to_z,yhat_to_z,ytilde_to_x,fidelity_ratio\n0,1,2,3,4,0.5\n");
}

}  // namespace
}  // namespace lsvd
