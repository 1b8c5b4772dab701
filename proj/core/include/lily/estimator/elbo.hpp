#pragma once

#include "lily/estimator/model.hpp"

#include <vector>

namespace lily::estimator {

/// Lower bound to floor |d eps_hat / d z_hat| before its log.
inline constexpr double kJacobianFloor = 1e-8;
inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct ElboWeights {
  double beta = 2e-3;   // current-step KLD
  double gamma = 2e-3;  // lagged-step KLD
};

/// Batch means; total = recon - beta * kld_current - gamma * kld_lagged.
struct ElboBreakdown {
  double total = 0.0;
  double recon = 0.0;        // minus squared error, summed over dims, averaged over time
  double kld_current = 0.0;  // summed over components at the current step
  double kld_lagged = 0.0;   // summed over components and the L lagged steps
};

/// `windows` windows of `length` = L + 1 consecutive steps. Row
/// w * length + tau of x and noise belongs to window w, tau = 0 the oldest
/// lag and tau = L the current step. Each window lies inside one segment.
struct WindowBatch {
  int windows = 0;
  int length = 0;
  Matrix x;                   // raw observations, (windows * length) x obs_dim
  std::vector<int> segments;  // per window
  Matrix noise;               // standard normal draws, (windows * length) x n
};

struct Posterior {
  Vector mu;
  Vector log_var;  // clamped to [-10, 10]
};

/// q(z_t | x_t, theta_obs). theta_obs has length config.theta_obs().
Posterior encode(const Vector& x_t, const Vector& theta_obs, const ModelParams& params);

/// Posterior means for rows of x; theta_obs taken from each row's segment
/// embedding, or from `theta` (full (theta_dyn, theta_obs)) when given.
Matrix encode_means(const Matrix& x, const std::vector<int>& segments, const ModelParams& params,
                    const Vector* theta = nullptr);

/// mu + exp(log_var / 2) * noise.
Vector reparameterize(const Vector& mu, const Vector& log_var, const Vector& noise);

struct PriorTerms {
  Vector log_density;  // per component
  Vector epsilon;      // eps_hat per component
  Vector jacobian;     // d eps_hat_k / d z_hat_k
  int floored = 0;     // components whose |jacobian| hit the floor
};

/// Per-component log p(z_{k,t} | history, theta) for one window, rows
/// 0..L-1 the lags (oldest first) and row L the current step. theta is the
/// full (theta_dyn, theta_obs) vector.
PriorTerms prior_logp(const Matrix& z_window, const Vector& theta, const ModelParams& params);

/// Single-sample Monte Carlo ELBO with the noise draws of the batch. With
/// `theta`, every window uses it in place of its embedding row.
ElboBreakdown elbo(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                   const Vector* theta = nullptr);

struct ElboGradient {
  ElboBreakdown value;
  Vector grad;        // d total / d params.values
  Vector theta_grad;  // d total / d theta when a theta override is used
  int floored = 0;
};

/// Exact gradient of elbo(...) with the batch's fixed noise. Throws
/// NumericDomain naming the first non-finite parameter path.
ElboGradient grad_elbo(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                       const Vector* theta = nullptr);

/// Gradient with respect to the theta override only (grad is left empty).
ElboGradient grad_elbo_theta(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                             const Vector& theta);

}  // namespace lily::estimator
