#pragma once

#include "lily/estimator/elbo.hpp"
#include "lily/estimator/model.hpp"

#include <cstdint>

namespace lily::estimator {

struct AdaptConfig {
  ElboWeights weights;
  double lr = 0.002;
  int max_steps = 2000;
  int patience = 50;          // steps without improvement before stopping
  double grad_tol = 1e-6;     // stop when |d elbo / d theta| falls below
  int noise_draws = 8;        // fixed noise replicas per window
  std::uint64_t seed = 0;
};

struct AdaptResult {
  Vector theta;  // (theta_dyn, theta_obs)
  double elbo = 0.0;
  int steps = 0;
};

/// Few-shot shift correction: starting from a zero theta, ascends the ELBO
/// of the windows of `observations` (consecutive rows of one unseen segment)
/// with respect to theta only, using Adam and a fixed set of noise draws.
/// `params` is never modified. Throws InvalidInput if fewer than L + 1 rows
/// are given.
AdaptResult correct_shift(const ModelParams& params, const Matrix& observations, const AdaptConfig& cfg);

}  // namespace lily::estimator
