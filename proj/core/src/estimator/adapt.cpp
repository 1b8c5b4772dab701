#include "lily/estimator/adapt.hpp"

#include "lily/error.hpp"
#include "lily/estimator/windows.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lily::estimator {

AdaptResult correct_shift(const ModelParams& params, const Matrix& observations, const AdaptConfig& cfg) {
  const int lag = params.config.lag;
  if (observations.rows() < lag + 1) throw InvalidInput("adaptation needs at least lag + 1 samples");
  if (cfg.noise_draws < 1 || cfg.max_steps < 0 || !(cfg.lr > 0.0)) throw InvalidInput("invalid adaptation config");
  const int d = params.config.theta_dim();
  AdaptResult out;
  out.theta = Vector::Zero(d);
  std::vector<WindowRef> windows;
  for (int r = 0; r < cfg.noise_draws; ++r) {
    for (const auto& w : windows_in(0, 0, observations.rows(), lag)) windows.push_back(w);
  }
  Rng rng = Rng(cfg.seed).derive({0});
  const WindowBatch batch = make_batch(observations, windows, lag, params.latent_dim(), rng);
  if (d == 0) {
    out.elbo = elbo(batch, params, cfg.weights, &out.theta).total;
    return out;
  }

  // Adam ascent on theta alone
  Vector theta = out.theta, m = Vector::Zero(d), v = Vector::Zero(d);
  double best = -std::numeric_limits<double>::infinity();
  int since_best = 0;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const ElboGradient g = grad_elbo_theta(batch, params, cfg.weights, theta);
    out.steps = step;
    if (g.value.total > best + 1e-9) {
      best = g.value.total;
      out.theta = theta;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
    if (g.theta_grad.norm() < cfg.grad_tol) break;
    m = b1 * m + (1.0 - b1) * g.theta_grad;
    v = b2 * v + (1.0 - b2) * g.theta_grad.cwiseProduct(g.theta_grad);
    const double c1 = 1.0 - std::pow(b1, step);
    const double c2 = 1.0 - std::pow(b2, step);
    theta.array() += cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
  out.elbo = best;
  return out;
}

}  // namespace lily::estimator
