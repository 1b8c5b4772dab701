#include "lily/estimator/elbo.hpp"

#include "lily/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lily::estimator {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Observations of the given rows, standardized, one column per row.
Batch standardize(const Matrix& x, const ModelParams& p) {
  if (x.cols() != p.config.obs_dim) throw InvalidInput("observation width does not match the model");
  require_finite(x, "observations");
  Batch out = x.transpose();
  out.colwise() -= p.x_mean;
  out.array().colwise() /= p.x_scale.array();
  return out;
}

// Stacks `top` over the theta_obs part of `thetas` (columns per window, each
// repeated `repeat` times).
Batch with_theta_obs(const Batch& top, const Batch& thetas, int repeat, const ModelConfig& c) {
  const int to = c.theta_obs();
  if (to == 0) return top;
  Batch out(top.rows() + to, top.cols());
  out.topRows(top.rows()) = top;
  for (Eigen::Index j = 0; j < top.cols(); ++j) {
    out.col(j).tail(to) = thetas.col(j / repeat).segment(c.theta_dyn(), to);
  }
  return out;
}

// Theta per window (theta_dim x windows).
Batch window_thetas(const std::vector<int>& segments, const ModelParams& p, const Vector* theta) {
  const int d = p.config.theta_dim();
  Batch out(d, static_cast<Eigen::Index>(segments.size()));
  if (theta != nullptr && theta->size() != d) throw InvalidInput("theta length does not match the model");
  for (std::size_t w = 0; w < segments.size(); ++w) {
    out.col(static_cast<Eigen::Index>(w)) = theta != nullptr ? *theta : p.theta(segments[w]);
  }
  return out;
}

// Input of component k's inverse network for every window.
Batch inverse_input(int k, const Batch& z_now, const Batch& history, const Batch& thetas, const ModelParams& p) {
  const auto& c = p.config;
  const BlockKind kind = p.layout.kinds[static_cast<std::size_t>(k)];
  const Eigen::Index b = z_now.cols();
  Batch u(p.layout.inverse_input_dim(k), b);
  u.row(0) = z_now.row(k);
  Eigen::Index r = 1;
  if (kind != BlockKind::kObs) {
    u.middleRows(r, history.rows()) = history;
    r += history.rows();
  }
  if (kind == BlockKind::kChanging && c.theta_dyn() > 0) u.middleRows(r, c.theta_dyn()) = thetas.topRows(c.theta_dyn());
  if (kind == BlockKind::kObs && c.theta_obs() > 0) {
    u.middleRows(r, c.theta_obs()) = thetas.middleRows(c.theta_dyn(), c.theta_obs());
  }
  return u;
}

struct PriorPass {
  std::vector<TangentCache> caches;
  Batch eps;  // n x windows
  Batch jac;  // n x windows
  Batch logp;
  int floored = 0;
};

PriorPass prior_forward(const Batch& z_now, const Batch& history, const Batch& thetas, const ModelParams& p) {
  const int n = p.latent_dim();
  const Eigen::Index b = z_now.cols();
  PriorPass pass;
  pass.caches.resize(static_cast<std::size_t>(n));
  pass.eps.resize(n, b);
  pass.jac.resize(n, b);
  pass.logp.resize(n, b);
  Eigen::RowVectorXd value, tangent;
  for (int k = 0; k < n; ++k) {
    const Batch u = inverse_input(k, z_now, history, thetas, p);
    mlp_forward_tangent(p.layout.inverse[static_cast<std::size_t>(k)], p.values.data(), u, 0, value, tangent,
                        pass.caches[static_cast<std::size_t>(k)]);
    pass.eps.row(k) = value;
    pass.jac.row(k) = tangent;
    for (Eigen::Index j = 0; j < b; ++j) {
      double a = std::abs(tangent[j]);
      if (a < kJacobianFloor) {
        a = kJacobianFloor;
        ++pass.floored;
      }
      pass.logp(k, j) = -kHalfLog2Pi - 0.5 * value[j] * value[j] + std::log(a);
    }
  }
  return pass;
}

struct Evaluation {
  ElboBreakdown value;
  Vector grad;
  Vector theta_grad;
  int floored = 0;
};

enum class Mode { kValue, kAll, kThetaOnly };

Evaluation evaluate(const WindowBatch& batch, const ModelParams& p, const ElboWeights& wts, const Vector* theta,
                    Mode mode) {
  const auto& c = p.config;
  const int n = p.latent_dim();
  const int T = batch.length;
  const int L = c.lag;
  const int B = batch.windows;
  if (B <= 0) throw InvalidInput("empty batch");
  if (T != L + 1) throw InvalidInput("window length must be lag + 1");
  const Eigen::Index N = static_cast<Eigen::Index>(B) * T;
  if (batch.x.rows() != N || batch.noise.rows() != N || batch.noise.cols() != n ||
      static_cast<int>(batch.segments.size()) != B) {
    throw InvalidInput("window batch arrays have inconsistent shapes");
  }
  const double* w = p.values.data();

  const Batch xs = standardize(batch.x, p);
  const Batch thetas = window_thetas(batch.segments, p, theta);

  MlpCache enc_cache, dec_cache;
  const Batch enc = mlp_forward(p.layout.encoder, w, with_theta_obs(xs, thetas, T, c), &enc_cache);
  const Batch mu = enc.topRows(n);
  const Batch lv_raw = enc.bottomRows(n);
  const Batch lv = lv_raw.cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  const Batch sd = (0.5 * lv.array()).exp().matrix();
  const Batch eps = batch.noise.transpose();
  const Batch z = mu + (sd.array() * eps.array()).matrix();

  const Batch xhat = mlp_forward(p.layout.decoder, w, with_theta_obs(z, thetas, T, c), &dec_cache);
  const Batch diff = xhat - xs;

  Batch z_now(n, B), history(static_cast<Eigen::Index>(n) * L, B);
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * T;
    z_now.col(b) = z.col(base + L);
    for (int tau = 1; tau <= L; ++tau) history.col(b).segment((tau - 1) * n, n) = z.col(base + L - tau);
  }
  PriorPass prior = prior_forward(z_now, history, thetas, p);

  double recon = 0.0, kld_cur = 0.0, kld_lag = 0.0;
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * T;
    recon -= diff.middleCols(base, T).squaredNorm() / T;
    for (int tau = 0; tau < L; ++tau) {
      const Eigen::Index j = base + tau;
      for (int k = 0; k < n; ++k) {
        kld_lag += -0.5 * lv(k, j) - 0.5 * eps(k, j) * eps(k, j) + 0.5 * z(k, j) * z(k, j);
      }
    }
    for (int k = 0; k < n; ++k) {
      const Eigen::Index j = base + L;
      const double logq = -kHalfLog2Pi - 0.5 * lv(k, j) - 0.5 * eps(k, j) * eps(k, j);
      kld_cur += logq - prior.logp(k, b);
    }
  }
  Evaluation out;
  out.floored = prior.floored;
  out.value.recon = recon / B;
  out.value.kld_current = kld_cur / B;
  out.value.kld_lagged = kld_lag / B;
  out.value.total = out.value.recon - wts.beta * out.value.kld_current - wts.gamma * out.value.kld_lagged;
  if (!std::isfinite(out.value.total)) throw NumericDomain("ELBO is not finite");
  if (mode == Mode::kValue) return out;

  const double cb = 1.0 / B;
  double* g = nullptr;
  if (mode == Mode::kAll) {
    out.grad = Vector::Zero(p.values.size());
    g = out.grad.data();
  }
  Batch g_theta = Batch::Zero(c.theta_dim(), B);
  const int td = c.theta_dyn();
  const int to = c.theta_obs();

  // With theta fixed into the prior nets only, z does not depend on theta and
  // the encoder/decoder passes can be skipped.
  const bool networks = mode == Mode::kAll || to > 0;

  // reconstruction
  Batch gz = Batch::Zero(n, N);
  Batch glv = Batch::Zero(n, N);
  Batch g_dec_in;
  if (networks) {
    g_dec_in = mlp_backward(p.layout.decoder, w, dec_cache, (-2.0 * cb / T) * diff, g);
    gz = g_dec_in.topRows(n);
  }
  if (networks && to > 0) {
    for (Eigen::Index j = 0; j < N; ++j) g_theta.col(j / T).segment(td, to) += g_dec_in.col(j).tail(to);
  }

  // KLD terms
  for (int b = 0; b < B; ++b) {
    const Eigen::Index base = static_cast<Eigen::Index>(b) * T;
    for (int tau = 0; tau < L; ++tau) {
      gz.col(base + tau) -= wts.gamma * cb * z.col(base + tau);
      glv.col(base + tau).array() += 0.5 * wts.gamma * cb;
    }
    glv.col(base + L).array() += 0.5 * wts.beta * cb;
  }
  for (int k = 0; k < n; ++k) {
    Eigen::RowVectorXd g_eps(B), g_jac(B);
    for (int b = 0; b < B; ++b) {
      g_eps[b] = -wts.beta * cb * prior.eps(k, b);
      const double j = prior.jac(k, b);
      g_jac[b] = std::abs(j) < kJacobianFloor ? 0.0 : wts.beta * cb / j;
    }
    const Batch gu = mlp_backward_tangent(p.layout.inverse[static_cast<std::size_t>(k)], w,
                                          prior.caches[static_cast<std::size_t>(k)], g_eps, g_jac, g);
    const BlockKind kind = p.layout.kinds[static_cast<std::size_t>(k)];
    for (int b = 0; b < B; ++b) {
      const Eigen::Index base = static_cast<Eigen::Index>(b) * T;
      gz(k, base + L) += gu(0, b);
      Eigen::Index r = 1;
      if (kind != BlockKind::kObs) {
        for (int tau = 1; tau <= L; ++tau) gz.col(base + L - tau) += gu.col(b).segment(r + (tau - 1) * n, n);
        r += static_cast<Eigen::Index>(n) * L;
      }
      if (kind == BlockKind::kChanging && td > 0) g_theta.col(b).head(td) += gu.col(b).segment(r, td);
      if (kind == BlockKind::kObs && to > 0) g_theta.col(b).segment(td, to) += gu.col(b).segment(r, to);
    }
  }

  if (networks) {
    // reparameterization and clamp
    glv.array() += gz.array() * eps.array() * sd.array() * 0.5;
    for (Eigen::Index j = 0; j < N; ++j) {
      for (int k = 0; k < n; ++k) {
        if (lv_raw(k, j) <= kLogVarMin || lv_raw(k, j) >= kLogVarMax) glv(k, j) = 0.0;
      }
    }
    Batch g_enc(2 * n, N);
    g_enc.topRows(n) = gz;
    g_enc.bottomRows(n) = glv;
    const Batch g_enc_in = mlp_backward(p.layout.encoder, w, enc_cache, g_enc, g);
    if (to > 0) {
      for (Eigen::Index j = 0; j < N; ++j) g_theta.col(j / T).segment(td, to) += g_enc_in.col(j).tail(to);
    }
  }

  if (theta != nullptr) {
    out.theta_grad = g_theta.rowwise().sum();
  } else if (g != nullptr && c.theta_dim() > 0) {
    for (int b = 0; b < B; ++b) {
      const std::size_t off =
          p.layout.embedding_offset + static_cast<std::size_t>(batch.segments[static_cast<std::size_t>(b)]) * c.theta_dim();
      for (int i = 0; i < c.theta_dim(); ++i) g[off + static_cast<std::size_t>(i)] += g_theta(i, b);
    }
  }
  for (Eigen::Index i = 0; g != nullptr && i < out.grad.size(); ++i) {
    if (!std::isfinite(out.grad[i])) {
      throw NumericDomain("non-finite gradient at " + parameter_path(p.layout, static_cast<std::size_t>(i)));
    }
  }
  if (theta != nullptr && !out.theta_grad.allFinite()) throw NumericDomain("non-finite gradient at theta");
  return out;
}

}  // namespace

Posterior encode(const Vector& x_t, const Vector& theta_obs, const ModelParams& p) {
  if (x_t.size() != p.config.obs_dim) throw InvalidInput("x_t length does not match obs_dim");
  if (theta_obs.size() != p.config.theta_obs()) throw InvalidInput("theta_obs length does not match the model");
  const Batch xs = standardize(x_t.transpose(), p);
  Batch in(xs.rows() + theta_obs.size(), 1);
  in.topRows(xs.rows()) = xs;
  in.bottomRows(theta_obs.size()) = theta_obs;
  const Batch out = mlp_forward(p.layout.encoder, p.values.data(), in);
  const int n = p.latent_dim();
  Posterior post;
  post.mu = out.col(0).head(n);
  post.log_var = out.col(0).tail(n).cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  return post;
}

Matrix encode_means(const Matrix& x, const std::vector<int>& segments, const ModelParams& p, const Vector* theta) {
  if (static_cast<Eigen::Index>(segments.size()) != x.rows()) throw InvalidInput("one segment index per row required");
  const Batch xs = standardize(x, p);
  const Batch thetas = window_thetas(segments, p, theta);
  const Batch out = mlp_forward(p.layout.encoder, p.values.data(), with_theta_obs(xs, thetas, 1, p.config));
  return out.topRows(p.latent_dim()).transpose();
}

Vector reparameterize(const Vector& mu, const Vector& log_var, const Vector& noise) {
  if (mu.size() != log_var.size() || mu.size() != noise.size()) throw InvalidInput("reparameterize length mismatch");
  return mu.array() + (0.5 * log_var.array()).exp() * noise.array();
}

PriorTerms prior_logp(const Matrix& z_window, const Vector& theta, const ModelParams& p) {
  const int n = p.latent_dim();
  const int L = p.config.lag;
  if (z_window.rows() != L + 1 || z_window.cols() != n) throw InvalidInput("z window must be (L + 1) x n");
  if (theta.size() != p.config.theta_dim()) throw InvalidInput("theta length does not match the model");
  require_finite(z_window, "z window");
  Batch z_now = z_window.row(L).transpose();
  Batch history(static_cast<Eigen::Index>(n) * L, 1);
  for (int tau = 1; tau <= L; ++tau) history.col(0).segment((tau - 1) * n, n) = z_window.row(L - tau).transpose();
  const Batch thetas = theta;
  const PriorPass pass = prior_forward(z_now, history, thetas, p);
  PriorTerms out;
  out.log_density = pass.logp.col(0);
  out.epsilon = pass.eps.col(0);
  out.jacobian = pass.jac.col(0);
  out.floored = pass.floored;
  return out;
}

ElboBreakdown elbo(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                   const Vector* theta) {
  return evaluate(batch, params, weights, theta, Mode::kValue).value;
}

ElboGradient grad_elbo(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                       const Vector* theta) {
  Evaluation e = evaluate(batch, params, weights, theta, Mode::kAll);
  ElboGradient out;
  out.value = e.value;
  out.grad = std::move(e.grad);
  out.theta_grad = std::move(e.theta_grad);
  out.floored = e.floored;
  return out;
}

}  // namespace lily::estimator

namespace lily::estimator {

ElboGradient grad_elbo_theta(const WindowBatch& batch, const ModelParams& params, const ElboWeights& weights,
                             const Vector& theta) {
  Evaluation e = evaluate(batch, params, weights, &theta, Mode::kThetaOnly);
  ElboGradient out;
  out.value = e.value;
  out.theta_grad = std::move(e.theta_grad);
  out.floored = e.floored;
  return out;
}

}  // namespace lily::estimator
