#include "fixtures.hpp"

#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"
#include "lily/estimator/adapt.hpp"
#include "lily/estimator/checkpoint.hpp"
#include "lily/estimator/elbo.hpp"
#include "lily/estimator/train.hpp"
#include "lily/estimator/windows.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

namespace lily::estimator {
namespace {

datagen::Dataset small_dataset(int samples, datagen::Regime regime = datagen::Regime::kFixedHetero) {
  datagen::ProcessConfig c;
  c.regime = regime;
  c.n_latent = regime == datagen::Regime::kModular ? 9 : 4;
  c.partition = regime == datagen::Regime::kModular ? datagen::Partition{6, 2, 1} : datagen::Partition{4, 0, 0};
  c.num_segments = regime == datagen::Regime::kModular ? 4 : 1;
  c.samples_per_segment = samples;
  c.scalar_modulation = regime == datagen::Regime::kModular;
  c.seed = 2;
  return datagen::generate(datagen::build_spec(c), 1);
}

TrainConfig quick_train(int epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.patience = epochs;
  t.track_mcc = false;
  return t;
}

TEST(Encode, ZeroWeightsGiveBiasConstantInX) {
  ModelParams p = testing::tiny_params(1);
  const auto& enc = p.layout.encoder;
  for (const auto& layer : enc.layers) {
    std::fill(p.values.data() + layer.w_offset, p.values.data() + layer.w_offset + layer.in * layer.out, 0.0);
    std::fill(p.values.data() + layer.b_offset, p.values.data() + layer.b_offset + layer.out, 0.0);
  }
  const auto& last = enc.layers.back();
  for (int i = 0; i < last.out; ++i) p.values[static_cast<Eigen::Index>(last.b_offset) + i] = 0.1 * (i + 1);
  const Vector theta_obs = Vector::Constant(p.config.theta_obs(), 0.3);
  const Posterior a = encode(Vector::Zero(4), theta_obs, p);
  const Posterior b = encode(Vector::Constant(4, 7.0), theta_obs, p);
  const int n = p.latent_dim();
  for (int i = 0; i < n; ++i) {
    EXPECT_DOUBLE_EQ(a.mu[i], 0.1 * (i + 1));
    EXPECT_DOUBLE_EQ(a.log_var[i], 0.1 * (n + i + 1));
  }
  EXPECT_EQ(a.mu, b.mu);
}

TEST(Encode, Deterministic) {
  const ModelParams p = testing::tiny_params(2);
  const Vector x = Vector::LinSpaced(4, -1, 1);
  const Vector th = Vector::Constant(p.config.theta_obs(), -0.2);
  EXPECT_EQ(encode(x, th, p).mu, encode(x, th, p).mu);
}

TEST(Encode, DimensionMismatchIsRejected) {
  const ModelParams p = testing::tiny_params(3);
  EXPECT_THROW(encode(Vector::Zero(5), Vector::Zero(p.config.theta_obs()), p), InvalidInput);
}

TEST(Reparameterize, ZeroNoiseGivesMean) {
  const Vector mu = Vector::LinSpaced(3, -1, 1);
  EXPECT_EQ(reparameterize(mu, Vector::Constant(3, 0.7), Vector::Zero(3)), mu);
  const Vector z = reparameterize(mu, Vector::Constant(3, kLogVarMin), Vector::Ones(3));
  EXPECT_LT((z - mu).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Reparameterize, MomentsMatchPosterior) {
  Rng rng(4);
  const Vector mu = Vector::Constant(1, 0.5);
  const Vector lv = Vector::Constant(1, std::log(2.0));
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = reparameterize(mu, lv, Vector::Constant(1, rng.normal()))[0];
    s += z;
    s2 += z * z;
  }
  const double mean = s / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s2 / n - mean * mean, 2.0, 0.03);
}

TEST(Prior, IdentityInverseAtZeroIsStandardNormal) {
  ModelConfig c = testing::tiny_config();
  c.partition = {2, 0, 0};
  ModelParams p = init_params(c, 5);
  for (int k = 0; k < 2; ++k) {
    Vector u = Vector::Zero(p.layout.inverse_input_dim(k));
    u[0] = 1.0;
    testing::plant_linear(p.layout.inverse[static_cast<std::size_t>(k)], p.values.data(), u);
  }
  Matrix window = Matrix::Random(3, 2);
  window.row(2).setZero();
  const PriorTerms t = prior_logp(window, Vector(0), p);
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(t.log_density[k], -0.5 * std::log(2 * std::numbers::pi), 1e-14);
}

TEST(Prior, PlantedLinearGaussianIsExact) { EXPECT_LT(testing::planted_prior_gap(200, 6), 1e-10); }

TEST(Prior, DoublingTheInverseAtItsRootAddsLogTwo) {
  ModelConfig c = testing::tiny_config();
  c.partition = {1, 0, 0};
  ModelParams p = init_params(c, 7);
  Vector u = Vector::Zero(p.layout.inverse_input_dim(0));
  u[0] = 1.0;
  u[1] = -0.4;
  testing::plant_linear(p.layout.inverse[0], p.values.data(), u);
  Matrix window(3, 1);
  window << 0.3, 0.5, 0.2;  // z_now = 0.4 * z_{t-1}: eps = 0
  const double before = prior_logp(window, Vector(0), p).log_density[0];
  const auto& out = p.layout.inverse[0].layers.back();
  for (int i = 0; i < out.in; ++i) p.values[static_cast<Eigen::Index>(out.w_offset) + i] *= 2.0;
  const double after = prior_logp(window, Vector(0), p).log_density[0];
  EXPECT_NEAR(after - before, std::log(2.0), 1e-12);
}

TEST(Prior, CurrentStepJacobianIsDiagonal) {
  const ModelParams p = testing::tiny_params(8);
  Rng rng(9);
  const Vector theta = p.theta(1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix window(3, p.latent_dim());
    for (Eigen::Index i = 0; i < window.size(); ++i) window.data()[i] = rng.normal();
    const PriorTerms base = prior_logp(window, theta, p);
    for (int j = 0; j < p.latent_dim(); ++j) {
      Matrix moved = window;
      moved(2, j) += 0.7;
      const PriorTerms t = prior_logp(moved, theta, p);
      for (int k = 0; k < p.latent_dim(); ++k)
        if (k != j) EXPECT_EQ(t.epsilon[k], base.epsilon[k]);
    }
  }
}

TEST(Prior, WrongWindowShapeIsRejected) {
  const ModelParams p = testing::tiny_params(10);
  EXPECT_THROW(prior_logp(Matrix::Zero(2, p.latent_dim()), p.theta(0), p), InvalidInput);
}

TEST(Elbo, EmptyBatchIsRejected) {
  const ModelParams p = testing::tiny_params(11);
  WindowBatch b;
  b.length = 3;
  EXPECT_THROW(elbo(b, p, {}), InvalidInput);
}

TEST(Elbo, TotalCombinesTerms) {
  const ModelParams p = testing::tiny_params(12);
  const WindowBatch b = testing::random_batch(p, 7, 1);
  const ElboWeights w{0.3, 0.05};
  const ElboBreakdown e = elbo(b, p, w);
  EXPECT_NEAR(e.total, e.recon - w.beta * e.kld_current - w.gamma * e.kld_lagged, 1e-12);
  EXPECT_LE(e.recon, 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
  const ModelParams p = testing::tiny_params(13);
  const WindowBatch b = testing::random_batch(p, 6, 2);
  const auto check = testing::check_gradient(p, b, {0.5, 0.2}, 200, 1e-5, 3);
  EXPECT_EQ(check.checked, 200);
  EXPECT_LT(check.max_rel_error, 1e-4);
}

TEST(Gradient, ThetaOverrideGradientMatchesCentralDifferences) {
  const ModelParams p = testing::tiny_params(14);
  WindowBatch b = testing::random_batch(p, 5, 4);
  Vector theta = Vector::LinSpaced(p.config.theta_dim(), -0.5, 0.5);
  const ElboWeights w{0.5, 0.2};
  const Vector g = grad_elbo_theta(b, p, w, theta).theta_grad;
  ASSERT_EQ(g.size(), theta.size());
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector up = theta, down = theta;
    up[i] += h;
    down[i] -= h;
    const double fd = (elbo(b, p, w, &up).total - elbo(b, p, w, &down).total) / (2 * h);
    EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Windows, SplitKeepsSegmentsApart) {
  const auto ds = small_dataset(200, datagen::Regime::kModular);
  const WindowSplit s = split_windows(ds, 2, 0.1);
  for (const auto& w : s.train) {
    EXPECT_EQ(ds.segments[static_cast<std::size_t>(w.start)], w.segment);
    EXPECT_EQ(ds.segments[static_cast<std::size_t>(w.start + 2)], w.segment);
    EXPECT_LT(w.start + 2 - ds.segment_begin(w.segment), 180);
  }
  for (const auto& w : s.val) EXPECT_GE(w.start - ds.segment_begin(w.segment), 180);
  EXPECT_EQ(s.val_rows.size(), 4u * 20u);
}

TEST(Train, OneEpochSmoke) {
  const auto ds = small_dataset(256);
  const TrainResult r = train(ds, quick_train(1));
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_TRUE(r.params.values.allFinite());
  EXPECT_FALSE(r.diverged);
}

TEST(Train, InvalidConfigIsRejected) {
  TrainConfig t = quick_train(3);
  t.patience = 4;
  EXPECT_THROW(validate(t), InvalidInput);
  t = quick_train(3);
  t.lr = 0.0;
  EXPECT_THROW(validate(t), InvalidInput);
  t = quick_train(3);
  t.val_fraction = 1.0;
  EXPECT_THROW(validate(t), InvalidInput);
}

TEST(Train, ImprovesOnInitialisationAndIsDeterministic) {
  const auto ds = small_dataset(600);
  const TrainConfig cfg = quick_train(4);
  const TrainResult a = train(ds, cfg);
  const TrainResult b = train(ds, cfg);
  EXPECT_EQ(a.params.values, b.params.values);
  ModelParams init = init_params(a.params.config, 99);
  init.x_mean = a.params.x_mean;
  init.x_scale = a.params.x_scale;
  EXPECT_GT(validation_elbo(ds, a.params, cfg.weights(), cfg.val_fraction, 5),
            validation_elbo(ds, init, cfg.weights(), cfg.val_fraction, 5));
}

TEST(Train, PaddedLatentDimension) {
  const auto ds = small_dataset(256);
  TrainConfig cfg = quick_train(1);
  cfg.latent_dim = 6;
  const TrainResult r = train(ds, cfg);
  EXPECT_EQ(r.params.latent_dim(), 6);
  EXPECT_EQ(r.params.config.partition.fixed, 6);
}

TEST(Checkpoint, RoundTrip) {
  const ModelParams p = testing::tiny_params(15);
  TrainConfig cfg = quick_train(2);
  cfg.beta = 0.01;
  const std::vector<EpochRecord> history{{1, -1.5, -1.25, 0.5}, {2, -1.0, -0.75, std::nan("")}};
  const auto dir = std::filesystem::temp_directory_path() / "lily_test_ckpt";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, p, cfg, history);
  const Checkpoint c = load_checkpoint(dir);
  EXPECT_EQ(c.params.values, p.values);
  EXPECT_EQ(c.params.x_mean, p.x_mean);
  EXPECT_EQ(c.params.x_scale, p.x_scale);
  EXPECT_EQ(c.params.config.partition, p.config.partition);
  EXPECT_EQ(c.cfg.beta, 0.01);
  ASSERT_EQ(c.history.size(), 2u);
  EXPECT_EQ(c.history[0].val_elbo, -1.25);
  EXPECT_TRUE(std::isnan(c.history[1].mcc));
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, MissingDirectoryIsLoadError) {
  EXPECT_THROW(load_checkpoint(std::filesystem::temp_directory_path() / "lily_no_such_ckpt"), LoadError);
}

TEST(Checkpoint, TrainConfigJsonRoundTrip) {
  TrainConfig t;
  t.beta = 0.125;
  t.gamma = 0.0;
  t.latent_dim = 12;
  t.seed = 77;
  const TrainConfig back = train_config_from_json(train_config_to_json(t));
  EXPECT_EQ(back.beta, 0.125);
  EXPECT_EQ(back.gamma, 0.0);
  EXPECT_EQ(back.latent_dim, 12);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_THROW(train_config_from_json("{\"lr\": -1}"), InvalidInput);
  EXPECT_THROW(train_config_from_json("{not json"), InvalidInput);
}

TEST(CorrectShift, LeavesEverythingButThetaUntouched) {
  const auto ds = small_dataset(120, datagen::Regime::kModular);
  TrainConfig cfg = quick_train(1);
  const TrainResult r = train(ds, cfg);
  const Vector before = r.params.values;
  AdaptConfig ac;
  ac.max_steps = 30;
  const AdaptResult a = correct_shift(r.params, ds.observations.topRows(16), ac);
  EXPECT_EQ(std::memcmp(before.data(), r.params.values.data(), sizeof(double) * static_cast<std::size_t>(before.size())),
            0);
  EXPECT_EQ(a.theta.size(), r.params.config.theta_dim());
  EXPECT_TRUE(a.theta.allFinite());
  EXPECT_GT(a.steps, 0);
}

TEST(CorrectShift, RaisesTheElboOfTheNewSegment) {
  const auto ds = small_dataset(120, datagen::Regime::kModular);
  const TrainResult r = train(ds, quick_train(2));
  AdaptConfig ac;
  ac.max_steps = 200;
  ac.noise_draws = 4;
  const Matrix rows = ds.observations.middleRows(ds.segment_begin(3), 16);
  const AdaptResult a = correct_shift(r.params, rows, ac);
  AdaptConfig none = ac;
  none.max_steps = 0;
  EXPECT_GE(a.elbo, correct_shift(r.params, rows, none).elbo);
}

TEST(CorrectShift, TooFewRowsIsRejected) {
  const ModelParams p = testing::tiny_params(16);
  EXPECT_THROW(correct_shift(p, Matrix::Zero(2, 4), AdaptConfig{}), InvalidInput);
}

}  // namespace
}  // namespace lily::estimator
