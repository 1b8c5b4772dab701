#include "lily/estimator/train.hpp"

#include "lily/error.hpp"
#include "lily/estimator/windows.hpp"
#include "lily/metrics/mcc.hpp"
#include "lily/numerics/rng.hpp"

#include <algorithm>
#include <cmath>

namespace lily::estimator {
namespace {

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kValStream = 3;
constexpr std::size_t kEvalChunk = 512;

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0)) throw InvalidInput("lr must be positive");
  if (c.batch < 1) throw InvalidInput("batch must be positive");
  if (c.max_epochs < 1) throw InvalidInput("max_epochs must be positive");
  if (c.patience < 1 || c.patience > c.max_epochs) throw InvalidInput("patience must lie in [1, max_epochs]");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw InvalidInput("val_fraction must lie in (0, 1)");
  if (c.beta < 0.0 || c.gamma < 0.0 || c.weight_decay < 0.0) throw InvalidInput("weights must be non-negative");
  if (c.lag < 1) throw InvalidInput("lag must be at least 1");
  if (c.latent_dim < 0 || c.theta_dyn_dim < 0 || c.theta_obs_dim < 0) throw InvalidInput("dimensions must be non-negative");
}

AdamW::AdamW(Eigen::Index size, double lr, double weight_decay)
    : lr_(lr), wd_(weight_decay), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void AdamW::step(Vector& params, const Vector& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params *= 1.0 - lr_ * wd_;
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

ModelConfig model_config_for(const datagen::Dataset& ds, const TrainConfig& cfg) {
  ModelConfig m;
  m.obs_dim = ds.obs_dim();
  m.lag = cfg.lag;
  m.partition = ds.spec.config.partition;
  const int n = m.partition.total();
  if (cfg.latent_dim > 0) {
    if (cfg.latent_dim < n) throw InvalidInput("latent_dim is smaller than the dataset's partition");
    m.partition.fixed += cfg.latent_dim - n;
  }
  m.theta_dyn_dim = cfg.theta_dyn_dim;
  m.theta_obs_dim = cfg.theta_obs_dim;
  m.num_segments = ds.num_segments();
  return m;
}

double validation_elbo(const datagen::Dataset& ds, const ModelParams& params, const ElboWeights& weights,
                       double val_fraction, std::uint64_t seed) {
  const WindowSplit split = split_windows(ds, params.config.lag, val_fraction);
  Rng rng = Rng(seed).derive({kValStream});
  double sum = 0.0;
  for (std::size_t i = 0; i < split.val.size(); i += kEvalChunk) {
    const std::size_t len = std::min(kEvalChunk, split.val.size() - i);
    const WindowBatch b = make_batch(ds.observations, std::span(split.val).subspan(i, len), params.config.lag,
                                     params.latent_dim(), rng);
    sum += elbo(b, params, weights).total * static_cast<double>(len);
  }
  return sum / static_cast<double>(split.val.size());
}

double validation_mcc(const datagen::Dataset& ds, const ModelParams& params, double val_fraction) {
  if (ds.latents.rows() != ds.observations.rows() || ds.latents.cols() == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const WindowSplit split = split_windows(ds, params.config.lag, val_fraction);
  Matrix x(static_cast<Eigen::Index>(split.val_rows.size()), ds.obs_dim());
  Matrix z(x.rows(), ds.n_latent());
  std::vector<int> seg(split.val_rows.size());
  for (std::size_t i = 0; i < split.val_rows.size(); ++i) {
    const Eigen::Index r = split.val_rows[i];
    x.row(static_cast<Eigen::Index>(i)) = ds.observations.row(r);
    z.row(static_cast<Eigen::Index>(i)) = ds.latents.row(r);
    seg[i] = ds.segments[static_cast<std::size_t>(r)];
  }
  const Matrix est = encode_means(x, seg, params);
  return metrics::mcc(z, est).mcc;
}

TrainResult train(const datagen::Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  validate(cfg);
  if (ds.num_segments() < 1 || ds.observations.rows() == 0) throw InvalidInput("dataset has no samples");
  const ModelConfig mc = model_config_for(ds, cfg);
  const WindowSplit split = split_windows(ds, cfg.lag, cfg.val_fraction);
  const Rng root(cfg.seed);

  TrainResult result;
  ModelParams params = init_params(mc, root.derive({kInitStream}).next_u64());
  {
    Matrix train_x(static_cast<Eigen::Index>(split.train_rows.size()), ds.obs_dim());
    for (std::size_t i = 0; i < split.train_rows.size(); ++i) {
      train_x.row(static_cast<Eigen::Index>(i)) = ds.observations.row(split.train_rows[i]);
    }
    params.x_mean = train_x.colwise().mean().transpose();
    params.x_scale = ((train_x.rowwise() - params.x_mean.transpose()).colwise().squaredNorm() /
                      static_cast<double>(train_x.rows()))
                         .cwiseSqrt()
                         .transpose();
    for (Eigen::Index j = 0; j < params.x_scale.size(); ++j) {
      if (!(params.x_scale[j] > 1e-12)) params.x_scale[j] = 1.0;
    }
  }
  const ElboWeights weights = cfg.weights();
  AdamW opt(params.values.size(), cfg.lr, cfg.weight_decay);
  std::vector<WindowRef> order = split.train;

  result.params = params;
  double best = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle = root.derive({kShuffleStream, static_cast<std::uint64_t>(epoch)});
    Rng noise = root.derive({kNoiseStream, static_cast<std::uint64_t>(epoch)});
    shuffle.shuffle(std::span(order));
    EpochRecord rec;
    rec.epoch = epoch;
    try {
      double sum = 0.0;
      for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(cfg.batch)) {
        const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch), order.size() - i);
        const WindowBatch b = make_batch(ds.observations, std::span(order).subspan(i, len), cfg.lag,
                                         mc.latent_dim(), noise);
        ElboGradient g = grad_elbo(b, params, weights);
        sum += g.value.total * static_cast<double>(len);
        g.grad = -g.grad;
        opt.step(params.values, g.grad);
        if (!params.values.allFinite()) throw NumericDomain("parameters became non-finite");
      }
      rec.train_elbo = sum / static_cast<double>(order.size());
      rec.val_elbo = validation_elbo(ds, params, weights, cfg.val_fraction, cfg.seed);
      if (!std::isfinite(rec.val_elbo)) throw NumericDomain("validation ELBO is not finite");
    } catch (const NumericDomain& e) {
      result.diverged = true;
      result.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      return result;
    }
    if (cfg.track_mcc) rec.mcc = validation_mcc(ds, params, cfg.val_fraction);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_elbo > best) {
      best = rec.val_elbo;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace lily::estimator
