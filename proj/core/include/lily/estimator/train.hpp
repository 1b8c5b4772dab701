#pragma once

#include "lily/datagen/dataset.hpp"
#include "lily/estimator/elbo.hpp"
#include "lily/estimator/model.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lily::estimator {

struct TrainConfig {
  double beta = 2e-3;
  double gamma = 2e-3;
  double lr = 0.002;
  double weight_decay = 1e-4;
  int batch = 64;
  int max_epochs = 50;
  int patience = 5;
  int lag = 2;
  int latent_dim = 0;  // 0: the dataset's latent dimension; larger values pad the fixed block
  int theta_dyn_dim = 2;
  int theta_obs_dim = 2;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  bool track_mcc = true;  // validation MCC per epoch when the dataset has latents

  ElboWeights weights() const { return {beta, gamma}; }
};

/// Throws InvalidInput: lr <= 0, batch < 1, patience > max_epochs,
/// val_fraction outside (0, 1), negative weights.
void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_elbo = 0.0;
  double val_elbo = 0.0;
  double mcc = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  ModelParams params;  // best validation ELBO
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  bool diverged = false;
  std::string message;  // reason when diverged
};

/// Model architecture implied by a dataset and training config.
ModelConfig model_config_for(const datagen::Dataset& ds, const TrainConfig& cfg);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// AdamW (decoupled weight decay) on minus the ELBO, shuffled mini-batches
/// of train windows, early stopping on the validation ELBO. A non-finite
/// loss stops training with diverged = true and the best parameters so far.
TrainResult train(const datagen::Dataset& ds, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Mean validation ELBO of `params` under `weights`, with noise drawn from
/// `seed` (the same draws on every call).
double validation_elbo(const datagen::Dataset& ds, const ModelParams& params, const ElboWeights& weights,
                       double val_fraction, std::uint64_t seed);

/// Validation-split MCC (pearson) of posterior means against the true
/// latents; NaN if the dataset carries no latents.
double validation_mcc(const datagen::Dataset& ds, const ModelParams& params, double val_fraction);

/// AdamW state over a flat parameter vector.
class AdamW {
 public:
  AdamW(Eigen::Index size, double lr, double weight_decay);
  /// One descent step on `params` along `grad` (gradient of a loss).
  void step(Vector& params, const Vector& grad);

 private:
  double lr_, wd_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  Vector m_, v_;
};

}  // namespace lily::estimator
