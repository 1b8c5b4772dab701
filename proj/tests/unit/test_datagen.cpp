#include "lily/datagen/dataset_io.hpp"
#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"
#include "lily/io.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>
#include <Eigen/QR>

#include <cmath>
#include <filesystem>

namespace lily::datagen {
namespace {

ProcessConfig fixed_config(int samples, std::uint64_t seed = 3) {
  ProcessConfig c;
  c.regime = Regime::kFixedHetero;
  c.partition = {8, 0, 0};
  c.samples_per_segment = samples;
  c.seed = seed;
  return c;
}

// Stacked history (z_{t-1}, ..., z_{t-L}) of the first `dyn` columns.
Vector history_at(const Matrix& z, Eigen::Index t, int dyn, int lag) {
  Vector h(dyn * lag);
  for (int tau = 0; tau < lag; ++tau) h.segment(tau * dyn, dyn) = z.row(t - 1 - tau).head(dyn).transpose();
  return h;
}

double leaky_inverse(double y, double slope) { return y >= 0.0 ? y : y / slope; }

TEST(Datagen, FixedHeteroShapes) {
  const auto ds = generate(build_spec(fixed_config(5000)), 1);
  EXPECT_EQ(ds.latents.rows(), 5000);
  EXPECT_EQ(ds.latents.cols(), 8);
  EXPECT_EQ(ds.observations.rows(), 5000);
  EXPECT_EQ(ds.noise.cols(), 8);
  EXPECT_EQ(ds.segments.size(), 5000u);
  EXPECT_TRUE(ds.latents.allFinite());
}

TEST(Datagen, ZeroNoiseFollowsTransitionExactly) {
  ProcessConfig c = fixed_config(300);
  c.noise_sigma = 0.0;
  const auto spec = build_spec(c);
  const auto ds = generate(spec, 1);
  for (Eigen::Index t = c.lag; t < ds.size(); ++t) {
    const Vector q = spec.fixed.eval(history_at(ds.latents, t, 8, c.lag));
    ASSERT_LT((ds.latents.row(t).transpose() - q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Datagen, ResidualTimesBHasNoiseScale) {
  const ProcessConfig c = fixed_config(50000);
  const auto spec = build_spec(c);
  const auto ds = generate(spec, 2);
  const int n = 8;
  double sum = 0.0, sum2 = 0.0;
  long count = 0;
  for (Eigen::Index t = c.lag; t < ds.size(); ++t) {
    const Vector h = history_at(ds.latents, t, n, c.lag);
    const Vector q = spec.fixed.eval(h);
    for (int k = 0; k < n; ++k) {
      const double lag_mean = (h[k] + h[n + k]) / 2.0;
      const double b = 1.0 / (1.0 + std::abs(lag_mean));
      const double r = (ds.latents(t, k) - q[k]) * b;
      ASSERT_NEAR(r, ds.noise(t, k), 1e-9);
      sum += r;
      sum2 += r * r;
      ++count;
    }
  }
  const double mean = sum / count;
  const double sd = std::sqrt(sum2 / count - mean * mean);
  EXPECT_NEAR(sd, 0.1, 0.005);
}

TEST(Datagen, ChangingDynamicsNeedsTwoSegments) {
  ProcessConfig c;
  c.regime = Regime::kChangingDyn;
  c.partition = {0, 8, 0};
  c.num_segments = 1;
  EXPECT_THROW(build_spec(c), InvalidSpec);
}

TEST(Datagen, NegativeSigmaIsRejected) {
  ProcessConfig c = fixed_config(100);
  c.noise_sigma = -0.1;
  EXPECT_THROW(build_spec(c), InvalidSpec);
}

TEST(Datagen, PaperScaleChangingCount) {
  ProcessConfig c;
  c.regime = Regime::kChangingDyn;
  c.partition = {0, 8, 0};
  c.num_segments = 20;
  c.samples_per_segment = 7500;
  const auto spec = build_spec(c);
  EXPECT_EQ(static_cast<long>(spec.config.num_segments) * spec.config.samples_per_segment, 150000);
  EXPECT_EQ(spec.segments.size(), 20u);
}

TEST(Datagen, IdenticalKernelsGiveIdenticalTrajectories) {
  ProcessConfig c;
  c.regime = Regime::kChangingDyn;
  c.partition = {0, 8, 0};
  c.num_segments = 2;
  c.samples_per_segment = 400;
  const auto spec = build_spec(c);
  const auto a = simulate_segment(spec, spec.segments[0], 0, 5, 400);
  const auto b = simulate_segment(spec, spec.segments[0], 0, 5, 400);
  EXPECT_EQ(a.latents, b.latents);
}

TEST(Datagen, KernelSignsRecoveredByLinearizedRegression) {
  ProcessConfig c;
  c.regime = Regime::kChangingDyn;
  c.partition = {0, 8, 0};
  c.num_segments = 3;
  c.samples_per_segment = 4000;
  const auto spec = build_spec(c);
  const auto ds = generate(spec, 4);
  const Matrix& w2 = spec.changing.w2;
  const Matrix w2_inv = w2.inverse();
  const double slope = spec.changing.slope;
  for (int s = 0; s < c.num_segments; ++s) {
    const Eigen::Index begin = ds.segment_begin(s);
    const Eigen::Index rows = c.samples_per_segment - c.lag;
    Matrix h(rows, spec.history_dim());
    Matrix a(rows, w2.cols());
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index t = begin + c.lag + i;
      h.row(i) = history_at(ds.latents, t, 8, c.lag).transpose();
      // the changing block's noise is additive and recorded
      const Vector pre = w2_inv * (ds.latents.row(t) - ds.noise.row(t)).transpose();
      for (Eigen::Index j = 0; j < pre.size(); ++j) a(i, j) = leaky_inverse(pre[j], slope);
    }
    // hidden pre-activations = W1 h: least squares per hidden unit
    const Matrix w1_hat = h.colPivHouseholderQr().solve(a).transpose();
    const Matrix& w1 = spec.segments[static_cast<std::size_t>(s)].dyn_kernel;
    int agree = 0;
    for (Eigen::Index i = 0; i < w1.rows(); ++i)
      for (Eigen::Index j = 0; j < w1.cols(); ++j) agree += (w1(i, j) > 0) == (w1_hat(i, j) > 0);
    EXPECT_GE(agree, static_cast<int>(0.9 * w1.size())) << "segment " << s;
  }
}

TEST(Datagen, ModularDefaultIsNineDimensional) {
  ProcessConfig c;
  c.regime = Regime::kModular;
  c.n_latent = 9;
  c.partition = default_partition(Regime::kModular, 9);
  c.num_segments = 4;
  c.samples_per_segment = 500;
  const auto ds = generate(build_spec(c), 1);
  EXPECT_EQ(ds.n_latent(), 9);
  EXPECT_EQ(ds.obs_dim(), 9);
}

TEST(Datagen, GlobalComponentMeanMatchesRecord) {
  ProcessConfig c;
  c.regime = Regime::kModular;
  c.n_latent = 9;
  c.partition = {6, 2, 1};
  c.num_segments = 6;
  c.samples_per_segment = 3000;
  const auto ds = generate(build_spec(c), 8);
  for (int s = 0; s < c.num_segments; ++s) {
    const auto& change = ds.spec.segments[static_cast<std::size_t>(s)];
    EXPECT_GE(change.obs_mean, -1.0);
    EXPECT_LE(change.obs_mean, 1.0);
    EXPECT_GE(change.obs_var, 0.01);
    EXPECT_LE(change.obs_var, 1.0);
    const double mean = ds.latents.col(8).segment(ds.segment_begin(s), c.samples_per_segment).mean();
    EXPECT_LT(std::abs(mean - change.obs_mean), 3.0 * std::sqrt(change.obs_var / c.samples_per_segment));
  }
}

TEST(Datagen, DegenerateModularPartitionEqualsFixed) {
  ProcessConfig m = fixed_config(800, 12);
  m.regime = Regime::kModular;
  const auto a = generate(build_spec(m), 3);
  const auto b = generate(build_spec(fixed_config(800, 12)), 3);
  EXPECT_EQ(a.latents, b.latents);
  EXPECT_EQ(a.observations, b.observations);
}

TEST(Datagen, LinearGnRejectsBetaThree) {
  ProcessConfig c = fixed_config(100);
  c.regime = Regime::kLinearGn;
  c.gn_beta = 3.0;
  EXPECT_THROW(build_spec(c), InvalidSpec);
  c.gn_beta = 2.0;
  EXPECT_THROW(build_spec(c), InvalidSpec);
}

// Quadrature oracle for the generalized-normal sampler: E|e|^2 under
// p(e) proportional to exp(-lambda |e|^beta).
TEST(Datagen, GeneralizedNormalMomentsMatchQuadrature) {
  const double lambda = 1.5, beta = 4.0;
  double z = 0.0, m2 = 0.0;
  const double step = 1e-4;
  for (double e = -6.0; e <= 6.0; e += step) {
    const double w = std::exp(-lambda * std::pow(std::abs(e), beta));
    z += w;
    m2 += e * e * w;
  }
  const double expected = m2 / z;
  Rng rng(10);
  const int n = 200000;
  double s2 = 0.0, s1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = sample_generalized_normal(rng, lambda, beta);
    s1 += e;
    s2 += e * e;
  }
  EXPECT_NEAR(s2 / n, expected, 0.01 * expected);
  EXPECT_LT(std::abs(s1 / n), 0.01);
}

TEST(Datagen, MixingIsInvertibleAndConditioned) {
  Rng rng(4);
  const auto g = MixingFunction::random(8, rng);
  for (const auto& w : g.weights()) EXPECT_LE(condition_number(w), MixingFunction::kMaxCondition);
  for (int i = 0; i < 50; ++i) {
    Vector z(8);
    for (int k = 0; k < 8; ++k) z[k] = rng.normal();
    EXPECT_LT((g.invert(g.apply(z)) - z).norm(), 1e-9);
  }
}

TEST(Datagen, DatasetRoundTrip) {
  ProcessConfig c;
  c.regime = Regime::kModular;
  c.n_latent = 9;
  c.partition = {6, 2, 1};
  c.num_segments = 3;
  c.samples_per_segment = 200;
  const auto ds = generate(build_spec(c), 6);
  const auto dir = std::filesystem::temp_directory_path() / "lily_test_dataset";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir);
  const auto back = load_dataset(dir);
  EXPECT_EQ(back.observations, ds.observations);
  EXPECT_EQ(back.latents, ds.latents);
  EXPECT_EQ(back.noise, ds.noise);
  EXPECT_EQ(back.segments, ds.segments);
  EXPECT_EQ(back.spec.config.partition, c.partition);
  std::filesystem::remove_all(dir);
}

TEST(Datagen, LoadRejectsNewerFormat) {
  const auto ds = generate(build_spec(fixed_config(50)), 1);
  const auto dir = std::filesystem::temp_directory_path() / "lily_test_dataset_v";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir);
  {
    std::string meta = io::read_text(dir / "meta.json");
    const auto pos = meta.find("\"format_version\": 1");
    ASSERT_NE(pos, std::string::npos);
    meta.replace(pos, 19, "\"format_version\": 9");
    io::write_text(dir / "meta.json", meta);
  }
  try {
    load_dataset(dir);
    FAIL() << "expected LoadError";
  } catch (const LoadError& e) {
    EXPECT_EQ(e.kind(), LoadError::Kind::kUnsupportedVersion);
  }
  std::filesystem::remove_all(dir);
}

TEST(Datagen, GaussianAlternativeRejectsNonOrthogonal) {
  const Matrix z = Matrix::Zero(10, 2);
  Matrix u(2, 2);
  u << 1, 1, 0, 1;
  EXPECT_THROW(gaussian_alternative(z, Vector::Ones(2), u, Vector::Ones(2)), InvalidInput);
}

}  // namespace
}  // namespace lily::datagen
