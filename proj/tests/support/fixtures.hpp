#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include "lily/estimator/elbo.hpp"
#include "lily/estimator/model.hpp"
#include "lily/numerics/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace lily::testing {

/// Small architecture with every block present, cheap enough for finite
/// differences.
inline estimator::ModelConfig tiny_config() {
  estimator::ModelConfig c;
  c.obs_dim = 4;
  c.lag = 2;
  c.partition = {2, 1, 1};
  c.num_segments = 3;
  c.encoder_hidden = 6;
  c.decoder_hidden = 6;
  c.prior_hidden = 5;
  return c;
}

inline estimator::ModelParams tiny_params(std::uint64_t seed) {
  estimator::ModelParams p = estimator::init_params(tiny_config(), seed);
  Rng rng(seed + 100);
  const auto& c = p.config;
  for (int s = 0; s < c.num_segments; ++s)
    for (int j = 0; j < c.theta_dim(); ++j) p.theta_row(s)[j] = 0.5 * rng.normal();
  for (int j = 0; j < c.obs_dim; ++j) {
    p.x_mean[j] = 0.1 * rng.normal();
    p.x_scale[j] = rng.uniform(0.5, 2.0);
  }
  return p;
}

inline estimator::WindowBatch random_batch(const estimator::ModelParams& p, int windows, std::uint64_t seed) {
  Rng rng(seed);
  estimator::WindowBatch b;
  b.windows = windows;
  b.length = p.config.lag + 1;
  const Eigen::Index rows = static_cast<Eigen::Index>(windows) * b.length;
  b.x.resize(rows, p.config.obs_dim);
  b.noise.resize(rows, p.latent_dim());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < b.x.cols(); ++j) b.x(i, j) = rng.normal();
    for (Eigen::Index j = 0; j < b.noise.cols(); ++j) b.noise(i, j) = rng.normal();
  }
  for (int w = 0; w < windows; ++w) b.segments.push_back(w % p.config.num_segments);
  return b;
}

struct GradientCheck {
  double max_rel_error = 0.0;
  int checked = 0;
};

/// Central differences of the ELBO at `count` random parameter indices
/// against grad_elbo. The relative error is |g - fd| / max(|g|, |fd|, floor).
inline GradientCheck check_gradient(const estimator::ModelParams& p, const estimator::WindowBatch& batch,
                                    const estimator::ElboWeights& weights, int count, double h, std::uint64_t seed,
                                    double floor = 1e-6) {
  const Vector g = estimator::grad_elbo(batch, p, weights).grad;
  Rng rng(seed);
  GradientCheck out;
  estimator::ModelParams q = p;
  for (int i = 0; i < count; ++i) {
    const auto idx = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(p.values.size())));
    const double x0 = q.values[idx];
    q.values[idx] = x0 + h;
    const double up = estimator::elbo(batch, q, weights).total;
    q.values[idx] = x0 - h;
    const double down = estimator::elbo(batch, q, weights).total;
    q.values[idx] = x0;
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(g[idx] - fd) / std::max({std::abs(g[idx]), std::abs(fd), floor});
    out.max_rel_error = std::max(out.max_rel_error, rel);
    ++out.checked;
  }
  return out;
}

/// Writes a two-hidden-layer SoftLeaky network that computes the linear map
/// input -> u . input exactly: a(x) - a(-x) = 1.2 x for the SoftLeaky a, so
/// mirrored unit pairs pass a linear signal through each hidden layer.
inline void plant_linear(const estimator::Mlp& mlp, double* values, const Vector& u) {
  for (const auto& layer : mlp.layers) {
    std::fill(values + layer.w_offset, values + layer.w_offset + static_cast<std::size_t>(layer.in) * layer.out, 0.0);
    std::fill(values + layer.b_offset, values + layer.b_offset + layer.out, 0.0);
  }
  const auto& first = mlp.layers[0];
  for (int c = 0; c < first.in; ++c) {
    values[first.w_offset + c] = u[c];
    values[first.w_offset + static_cast<std::size_t>(first.in) + c] = -u[c];
  }
  constexpr double kPair = 1.0 / 1.2;
  for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    const std::size_t in = static_cast<std::size_t>(layer.in);
    values[layer.w_offset + 0] = kPair;
    values[layer.w_offset + 1] = -kPair;
    if (layer.out > 1) {
      values[layer.w_offset + in + 0] = -kPair;
      values[layer.w_offset + in + 1] = kPair;
    }
  }
}

/// Closed-form log N(z; mean, sigma^2).
inline double gaussian_logpdf(double z, double mean, double sigma) {
  const double e = (z - mean) / sigma;
  return -0.5 * std::log(2 * std::numbers::pi) - 0.5 * e * e - std::log(sigma);
}

/// Fixed-only model whose inverse networks are planted linear-Gaussian maps
/// eps_k = (z_k - a_k . history) / sigma_k. Returns the worst |log p gap|
/// over `points` random windows.
inline double planted_prior_gap(int points, std::uint64_t seed) {
  estimator::ModelConfig c;
  c.obs_dim = 3;
  c.lag = 2;
  c.partition = {3, 0, 0};
  c.encoder_hidden = 4;
  c.decoder_hidden = 4;
  estimator::ModelParams p = estimator::init_params(c, seed);
  const int n = 3;
  const int hd = c.history_dim();
  Rng rng(seed + 1);
  std::vector<Vector> a(n);
  Vector sigma(n);
  for (int k = 0; k < n; ++k) {
    a[static_cast<std::size_t>(k)] = Vector(hd);
    for (int l = 0; l < hd; ++l) a[static_cast<std::size_t>(k)][l] = 0.5 * rng.normal();
    sigma[k] = rng.uniform(0.2, 2.0);
    Vector u(1 + hd);
    u[0] = 1.0 / sigma[k];
    u.tail(hd) = -a[static_cast<std::size_t>(k)] / sigma[k];
    plant_linear(p.layout.inverse[static_cast<std::size_t>(k)], p.values.data(), u);
  }
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    Matrix window(c.lag + 1, n);
    for (Eigen::Index r = 0; r < window.rows(); ++r)
      for (int k = 0; k < n; ++k) window(r, k) = rng.normal();
    Vector history(hd);
    for (int tau = 1; tau <= c.lag; ++tau) history.segment((tau - 1) * n, n) = window.row(c.lag - tau).transpose();
    const estimator::PriorTerms t = estimator::prior_logp(window, Vector(0), p);
    for (int k = 0; k < n; ++k) {
      const double expected = gaussian_logpdf(window(c.lag, k), a[static_cast<std::size_t>(k)].dot(history), sigma[k]);
      worst = std::max(worst, std::abs(t.log_density[k] - expected));
    }
  }
  return worst;
}

}  // namespace lily::testing
