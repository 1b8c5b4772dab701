#include "lily/datagen/process.hpp"

#include "lily/datagen/streams.hpp"
#include "lily/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace lily::datagen {
namespace {

double leaky(double a, double slope) { return a >= 0.0 ? a : slope * a; }

// Multiplies the history columns of lag tau (1-based) by gamma^(tau + offset).
// If z_t = q(z_{t-1}, ..., z_{t-L}) is positively homogeneous then
// y_t = gamma^t z_t solves y_t = gamma q(y_{t-1}, gamma y_{t-2}, ...), so this
// rescaling multiplies the growth factor by exactly gamma.
void scale_lags(Matrix& m, int dyn, int lag, double gamma, int offset) {
  for (int tau = 1; tau <= lag; ++tau) m.middleCols((tau - 1) * dyn, dyn) *= std::pow(gamma, tau + offset);
}

// Spectral radius of the companion matrix of z_t = A (z_{t-1}, ..., z_{t-L}).
double companion_spectral_radius(const Matrix& a, int lag) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n * lag, n * lag);
  companion.topRows(n) = a;
  if (lag > 1) companion.bottomLeftCorner(n * (lag - 1), n * (lag - 1)).setIdentity();
  return Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues().cwiseAbs().maxCoeff();
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

constexpr int kGrowthStarts = 8;
constexpr int kGrowthSteps = 300;
constexpr int kGrowthWarmup = 100;
// Share of the growth budget left to the fixed block alone when a changing
// block is stacked on top of it.
constexpr double kFixedShare = 0.8;

// Largest transient amplification |h_t| / |h_0| of the noiseless map we
// accept. Strongly non-normal maps turn small noise into rare huge excursions
// even when they contract asymptotically, so such draws are redrawn.
constexpr double kMaxTransient = 4.0;
constexpr int kMaxRedraws = 64;

struct Growth {
  double rate = 0.0;  // exp of the top Lyapunov exponent
  double peak = 0.0;  // max over starts and steps of |h_t| / |h_0|
};

// Growth of the noiseless dynamic map, estimated by normalized iteration
// from fixed random starts. `changing` may be null, in which case the
// changing outputs are held at zero.
Growth growth_factor(const TransitionNet* fixed, const TransitionNet* changing, int fixed_dim, int changing_dim,
                     int lag, Rng rng) {
  const int dyn = fixed_dim + changing_dim;
  Growth best;
  for (int s = 0; s < kGrowthStarts; ++s) {
    Vector h(dyn * lag);
    for (Eigen::Index i = 0; i < h.size(); ++i) h[i] = rng.normal();
    h.normalize();
    double log_growth = 0.0;
    double log_total = 0.0;
    for (int t = 0; t < kGrowthSteps; ++t) {
      Vector z = Vector::Zero(dyn);
      if (fixed_dim > 0) z.head(fixed_dim) = fixed->eval(h);
      if (changing_dim > 0 && changing != nullptr) z.tail(changing_dim) = changing->eval(h);
      for (int tau = lag - 1; tau > 0; --tau) h.segment(tau * dyn, dyn) = h.segment((tau - 1) * dyn, dyn);
      h.head(dyn) = z;
      const double norm = h.norm();
      if (!(norm > 0.0)) return {};
      h /= norm;
      log_total += std::log(norm);
      best.peak = std::max(best.peak, std::exp(log_total));
      if (t >= kGrowthWarmup) log_growth += std::log(norm);
    }
    best.rate = std::max(best.rate, std::exp(log_growth / (kGrowthSteps - kGrowthWarmup)));
  }
  return best;
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::kFixedHetero: return "fixed_hetero";
    case Regime::kChangingDyn: return "changing_dyn";
    case Regime::kModular: return "modular";
    case Regime::kLinearGn: return "linear_gn";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  if (name == "fixed_hetero") return Regime::kFixedHetero;
  if (name == "changing_dyn") return Regime::kChangingDyn;
  if (name == "modular") return Regime::kModular;
  if (name == "linear_gn") return Regime::kLinearGn;
  throw InvalidSpec("unknown regime '" + std::string(name) + "'");
}

std::string_view to_string(NoiseCoupling coupling) {
  return coupling == NoiseCoupling::kHistory ? "history" : "none";
}

NoiseCoupling coupling_from_string(std::string_view name) {
  if (name == "history") return NoiseCoupling::kHistory;
  if (name == "none") return NoiseCoupling::kNone;
  throw InvalidSpec("unknown noise coupling '" + std::string(name) + "'");
}

Vector TransitionNet::eval(const Vector& history) const {
  Vector hidden = (w1 * history).unaryExpr([this](double a) { return leaky(a, slope); });
  return w2 * hidden;
}

Matrix TransitionNet::jacobian(const Vector& history) const {
  const Vector pre = w1 * history;
  Matrix scaled = w1;
  for (Eigen::Index i = 0; i < pre.size(); ++i) scaled.row(i) *= pre[i] >= 0.0 ? 1.0 : slope;
  return w2 * scaled;
}

TransitionNet LatentProcessSpec::changing_for(const SegmentChange& change) const {
  TransitionNet net = changing;
  net.w1 = change.dyn_kernel;
  return net;
}

Partition default_partition(Regime regime, int n_latent) {
  switch (regime) {
    case Regime::kChangingDyn: return {0, n_latent, 0};
    case Regime::kModular: return {6, 2, 1};
    default: return {n_latent, 0, 0};
  }
}

void validate(const ProcessConfig& c) {
  if (c.n_latent <= 0) throw InvalidSpec("n_latent must be positive");
  if (c.lag < 1) throw InvalidSpec("lag must be at least 1");
  const Partition& p = c.partition;
  if (p.fixed < 0 || p.changing < 0 || p.obs < 0) throw InvalidSpec("partition entries must be non-negative");
  if (p.total() != c.n_latent) throw InvalidSpec("partition must sum to n_latent");
  if (c.noise_sigma < 0.0 || !std::isfinite(c.noise_sigma)) throw InvalidSpec("noise_sigma must be non-negative");
  if (c.num_segments < 1) throw InvalidSpec("num_segments must be at least 1");
  if (c.samples_per_segment < 1) throw InvalidSpec("samples_per_segment must be at least 1");
  if (c.burn_in < 0) throw InvalidSpec("burn_in must be non-negative");
  if (!(c.transition_gain > 0.0)) throw InvalidSpec("transition_gain must be positive");
  switch (c.regime) {
    case Regime::kFixedHetero:
      if (p.fixed != c.n_latent) throw InvalidSpec("fixed_hetero requires partition (n, 0, 0)");
      break;
    case Regime::kChangingDyn:
      if (p.changing != c.n_latent) throw InvalidSpec("changing_dyn requires partition (0, n, 0)");
      if (c.num_segments < 2) throw InvalidSpec("changing dynamics need at least two segments");
      break;
    case Regime::kModular:
      if ((p.changing > 0 || p.obs > 0) && c.num_segments < 2) {
        throw InvalidSpec("modular shifts with changing or observation blocks need at least two segments");
      }
      break;
    case Regime::kLinearGn:
      if (p.fixed != c.n_latent) throw InvalidSpec("linear_gn requires partition (n, 0, 0)");
      if (!(c.gn_lambda > 0.0)) throw InvalidSpec("generalized normal lambda must be positive");
      if (!(c.gn_beta > 2.0) || c.gn_beta == 3.0) throw InvalidSpec("generalized normal beta must satisfy beta > 2, beta != 3");
      break;
  }
}

void validate(const LatentProcessSpec& spec) {
  validate(spec.config);
  if (spec.config.regime == Regime::kLinearGn) {
    const Matrix& a = spec.linear_a;
    if (a.rows() != spec.config.n_latent || a.cols() != spec.history_dim()) {
      throw InvalidSpec("linear transition matrix must be n x (n * lag)");
    }
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if ((a.row(r).array() == 0.0).all()) {
        throw InvalidSpec("linear transition row " + std::to_string(r) + " has no nonzero entry");
      }
    }
  }
  for (const SegmentChange& s : spec.segments) {
    if (!(s.obs_var > 0.0)) throw InvalidSpec("per-segment observation variance must be positive");
  }
  if (spec.mixing.dim() != spec.config.n_latent) throw InvalidSpec("mixing dimension must equal n_latent");
}

// Rescales a segment kernel so the joint dynamic map reaches the configured
// growth. Exact for a changing block alone; bisection on a uniform factor
// when a fixed block shares the history. Returns the calibrated growth.
Growth calibrate_kernel(const LatentProcessSpec& spec, Matrix& kernel) {
  const ProcessConfig& c = spec.config;
  const Partition& p = c.partition;
  const Rng probe = Rng(c.seed).derive({streams::kGainProbe});
  TransitionNet net = spec.changing;
  auto growth_at = [&](double scale) {
    net.w1 = kernel * scale;
    return growth_factor(&spec.fixed, &net, p.fixed, p.changing, c.lag, probe).rate;
  };
  auto final_growth = [&] {
    net.w1 = kernel;
    return growth_factor(&spec.fixed, &net, p.fixed, p.changing, c.lag, probe);
  };
  const double unit = growth_at(1.0);
  if (!(unit > 0.0)) return {};
  if (p.fixed == 0) {
    scale_lags(kernel, p.changing, c.lag, c.transition_gain / unit, 0);
    return final_growth();
  }
  double lo = 0.0;
  double hi = 1.0;
  while (growth_at(hi) < c.transition_gain) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return {};
  }
  for (int it = 0; it < 40 && hi - lo > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (growth_at(mid) < c.transition_gain ? lo : hi) = mid;
  }
  kernel *= 0.5 * (lo + hi);
  return final_growth();
}

SegmentChange draw_segment_change(const LatentProcessSpec& spec, int index) {
  const ProcessConfig& c = spec.config;
  Rng rng = Rng(c.seed).derive({streams::kSegmentChange, static_cast<std::uint64_t>(index)});
  const Eigen::Index hidden = spec.changing.w2.cols();
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    SegmentChange change;
    if (c.scalar_modulation) {
      const double s = rng.uniform(-1.0, 1.0);
      change.modulation = s;
      change.obs_mean = s;
      change.obs_var = 0.01 + 0.99 * 0.5 * (s + 1.0);
      if (c.partition.changing > 0) change.dyn_kernel = spec.kernel_base + s * spec.kernel_direction;
    } else {
      if (c.partition.changing > 0) change.dyn_kernel = uniform_matrix(hidden, spec.history_dim(), -1.0, 1.0, rng);
      change.obs_mean = rng.uniform(-1.0, 1.0);
      change.obs_var = rng.uniform(0.01, 1.0);
    }
    if (c.partition.changing == 0) return change;
    const Growth g = calibrate_kernel(spec, change.dyn_kernel);
    if (g.rate > 0.0 && g.peak <= kMaxTransient) return change;
  }
  throw InvalidSpec("no well-conditioned changing kernel found for segment " + std::to_string(index) +
                    "; lower transition_gain or change the seed");
}

LatentProcessSpec build_spec(const ProcessConfig& config) {
  validate(config);
  LatentProcessSpec spec;
  spec.config = config;
  const Partition& p = config.partition;
  const int hist = spec.history_dim();
  const double gain = config.transition_gain;
  const Rng root(config.seed);

  if (p.fixed > 0 && config.regime != Regime::kLinearGn) {
    Rng rng = root.derive({streams::kFixedNet});
    const int hidden = spec.dynamic_dim();
    const double target = p.changing > 0 ? kFixedShare * gain : gain;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRedraws) {
        throw InvalidSpec("no well-conditioned fixed transition found; lower transition_gain or change the seed");
      }
      spec.fixed.w1 = uniform_matrix(hidden, hist, -1.0, 1.0, rng);
      spec.fixed.w2 = uniform_matrix(p.fixed, hidden, -1.0, 1.0, rng);
      const Rng probe = root.derive({streams::kGainProbe});
      const double growth = growth_factor(&spec.fixed, nullptr, p.fixed, p.changing, config.lag, probe).rate;
      if (!(growth > 0.0)) continue;
      const double gamma = target / growth;
      spec.fixed.w2 *= gamma;
      scale_lags(spec.fixed.w1, spec.dynamic_dim(), config.lag, gamma, -1);
      if (growth_factor(&spec.fixed, nullptr, p.fixed, p.changing, config.lag, probe).peak <= kMaxTransient) break;
    }
  }
  if (p.changing > 0) {
    Rng rng = root.derive({streams::kChangingNet});
    const int hidden = spec.dynamic_dim();
    spec.changing.w2 = uniform_matrix(p.changing, hidden, -1.0, 1.0, rng);
    if (config.scalar_modulation) {
      spec.kernel_base = uniform_matrix(hidden, hist, -0.5, 0.5, rng);
      spec.kernel_direction = uniform_matrix(hidden, hist, -0.5, 0.5, rng);
    }
  }
  if (config.regime == Regime::kLinearGn) {
    Rng rng = root.derive({streams::kLinearA});
    spec.linear_a.resize(config.n_latent, hist);
    for (Eigen::Index i = 0; i < spec.linear_a.rows(); ++i)
      for (Eigen::Index j = 0; j < spec.linear_a.cols(); ++j) spec.linear_a(i, j) = rng.normal();
    scale_lags(spec.linear_a, config.n_latent, config.lag,
               gain / companion_spectral_radius(spec.linear_a, config.lag), 0);
  }

  spec.segments.reserve(config.num_segments);
  for (int k = 0; k < config.num_segments; ++k) spec.segments.push_back(draw_segment_change(spec, k));

  Rng mixing_rng = root.derive({streams::kMixing});
  spec.mixing = MixingFunction::random(config.n_latent, mixing_rng);
  validate(spec);
  return spec;
}

}  // namespace lily::datagen
