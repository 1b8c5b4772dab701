#include "lily/auditor/density.hpp"

#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace lily::auditor {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr int kSupportSamples = 256;
constexpr int kMaxSupportSegments = 20;
constexpr int kQuadratureIntervals = 20000;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

// Current values of columns [col, col + width) and stacked dynamic histories
// from short stationary runs of every segment (up to kMaxSupportSegments).
std::pair<Matrix, Matrix> simulate_support(const datagen::LatentProcessSpec& spec, std::uint64_t seed, int col,
                                           int width, bool with_history) {
  const int dyn = spec.dynamic_dim();
  const int lag = spec.config.lag;
  const int segments = std::min(spec.config.num_segments, kMaxSupportSegments);
  const int rows_per = kSupportSamples - lag;
  Matrix z(static_cast<Eigen::Index>(segments) * rows_per, width);
  Matrix hist(z.rows(), with_history ? dyn * lag : 0);
  for (int s = 0; s < segments; ++s) {
    const datagen::SegmentTrajectory traj =
        datagen::simulate_segment(spec, spec.segments[s], s, seed, kSupportSamples);
    for (int t = lag; t < kSupportSamples; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(s) * rows_per + (t - lag);
      z.row(r) = traj.latents.row(t).segment(col, width);
      if (with_history) {
        for (int tau = 0; tau < lag; ++tau) hist.row(r).segment(tau * dyn, dyn) = traj.latents.row(t - 1 - tau).head(dyn);
      }
    }
  }
  return {std::move(z), std::move(hist)};
}

HistoryMap net_map(const datagen::TransitionNet& net) {
  return {[net](const Vector& h) { return net.eval(h); }, [net](const Vector& h) { return net.jacobian(h); }};
}

}  // namespace

Matrix HistoryMap::jacobian_at(const Vector& history) const {
  if (jacobian) return jacobian(history);
  const Vector base = value(history);
  Matrix jac(base.size(), history.size());
  Vector x = history;
  for (Eigen::Index i = 0; i < history.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(history[i]));
    x[i] = history[i] + h;
    const Vector up = value(x);
    x[i] = history[i] - h;
    const Vector down = value(x);
    x[i] = history[i];
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

std::string_view to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::kGaussianAdditive: return "gaussian_additive";
    case DensityKind::kHeteroskedastic: return "heteroskedastic";
    case DensityKind::kGeneralizedNormalLinear: return "generalized_normal_linear";
    case DensityKind::kIidMarginal: return "iid_marginal";
    case DensityKind::kCustom: return "custom";
  }
  return "unknown";
}

DensityFamily gaussian_additive(HistoryMap q, Vector sigma, int history_dim) {
  DensityFamily f;
  f.kind = DensityKind::kGaussianAdditive;
  f.n = static_cast<int>(sigma.size());
  f.history_dim = history_dim;
  f.q = std::move(q);
  f.sigma = std::move(sigma);
  validate(f);
  return f;
}

DensityFamily heteroskedastic(HistoryMap q, HistoryMap b, int n, int history_dim) {
  DensityFamily f;
  f.kind = DensityKind::kHeteroskedastic;
  f.n = n;
  f.history_dim = history_dim;
  f.q = std::move(q);
  f.b = std::move(b);
  validate(f);
  return f;
}

DensityFamily generalized_normal_linear(Matrix a, double lambda, double beta) {
  DensityFamily f;
  f.kind = DensityKind::kGeneralizedNormalLinear;
  f.n = static_cast<int>(a.rows());
  f.history_dim = static_cast<int>(a.cols());
  f.a = std::move(a);
  f.lambda = lambda;
  f.beta = beta;
  validate(f);
  return f;
}

DensityFamily iid_marginal(Vector mean, Vector var) {
  DensityFamily f;
  f.kind = DensityKind::kIidMarginal;
  f.n = static_cast<int>(mean.size());
  f.mean = std::move(mean);
  f.var = std::move(var);
  validate(f);
  return f;
}

DensityFamily custom_density(int n, int history_dim, std::function<double(int, double, const Vector&)> log_density) {
  DensityFamily f;
  f.kind = DensityKind::kCustom;
  f.n = n;
  f.history_dim = history_dim;
  f.custom = std::move(log_density);
  validate(f);
  return f;
}

void validate(const DensityFamily& f) {
  require(f.n > 0, "density family needs at least one component");
  require(f.history_dim >= 0, "history_dim must be non-negative");
  switch (f.kind) {
    case DensityKind::kGaussianAdditive:
      require(static_cast<bool>(f.q.value), "gaussian_additive needs a mean map");
      require(f.sigma.size() == f.n && (f.sigma.array() > 0.0).all(), "gaussian_additive needs n positive sigmas");
      break;
    case DensityKind::kHeteroskedastic:
      require(f.q.value && f.b.value, "heteroskedastic needs mean and scale maps");
      break;
    case DensityKind::kGeneralizedNormalLinear:
      require(f.a.rows() == f.n && f.a.cols() == f.history_dim, "generalized normal needs an n x history_dim matrix");
      require(f.lambda > 0.0, "generalized normal lambda must be positive");
      require(f.beta > 0.0, "generalized normal beta must be positive");
      break;
    case DensityKind::kIidMarginal:
      require(f.history_dim == 0, "iid_marginal has no history");
      require(f.mean.size() == f.n && f.var.size() == f.n, "iid_marginal needs n means and variances");
      require((f.var.array() > 0.0).all(), "iid_marginal variances must be positive");
      break;
    case DensityKind::kCustom:
      require(static_cast<bool>(f.custom), "custom density needs a log-density function");
      break;
  }
  if (f.support_z.size() > 0) {
    require(f.support_z.cols() == f.n, "support_z must have n columns");
    require(f.support_history.rows() == f.support_z.rows() && f.support_history.cols() == f.history_dim,
            "support_history must match support_z rows and history_dim");
  }
}

double log_density(const DensityFamily& f, int k, double z, const Vector& history) {
  if (k < 0 || k >= f.n) throw InvalidInput("component index out of range");
  if (history.size() != f.history_dim) throw InvalidInput("history length does not match the family");
  double eta = 0.0;
  switch (f.kind) {
    case DensityKind::kGaussianAdditive: {
      const double s = f.sigma[k];
      const double r = (z - f.q.value(history)[k]) / s;
      eta = -kHalfLog2Pi - std::log(s) - 0.5 * r * r;
      break;
    }
    case DensityKind::kHeteroskedastic: {
      const double b = f.b.value(history)[k];
      if (!(b > 0.0)) throw NumericDomain("heteroskedastic scale b must be positive");
      const double r = b * (z - f.q.value(history)[k]);
      eta = -kHalfLog2Pi + std::log(b) - 0.5 * r * r;
      break;
    }
    case DensityKind::kGeneralizedNormalLinear: {
      const double e = z - f.a.row(k).dot(history);
      eta = std::log(f.beta) + std::log(f.lambda) / f.beta - std::numbers::ln2 - std::lgamma(1.0 / f.beta) -
            f.lambda * std::pow(std::abs(e), f.beta);
      break;
    }
    case DensityKind::kIidMarginal: {
      const double r = z - f.mean[k];
      eta = -kHalfLog2Pi - 0.5 * std::log(f.var[k]) - 0.5 * r * r / f.var[k];
      break;
    }
    case DensityKind::kCustom: eta = f.custom(k, z, history); break;
  }
  if (!std::isfinite(eta)) throw NumericDomain("log-density is not finite at the evaluation point");
  return eta;
}

double normalization_integral(const DensityFamily& f, int k, const Vector& history, double center) {
  const int n = kQuadratureIntervals;
  const double dt = 2.0 / n;
  double sum = 0.0;
  for (int i = 1; i < n; ++i) {
    const double t = -1.0 + i * dt;
    const double denom = 1.0 - t * t;
    const double z = center + t / denom;
    double density = 0.0;
    try {
      density = std::exp(log_density(f, k, z, history));
    } catch (const NumericDomain&) {
      density = 0.0;  // far tails can underflow to log(0)
    }
    const double integrand = density * (1.0 + t * t) / (denom * denom);
    sum += (i % 2 == 1 ? 4.0 : 2.0) * integrand;
  }
  return sum * dt / 3.0;
}

DensityFamily fixed_block_family(const datagen::LatentProcessSpec& spec, std::uint64_t seed) {
  const datagen::ProcessConfig& c = spec.config;
  const int nf = c.partition.fixed;
  if (nf == 0) throw InvalidInput("spec has no fixed-dynamics block");
  const int hist = spec.history_dim();
  DensityFamily f;
  if (c.regime == datagen::Regime::kLinearGn) {
    f = generalized_normal_linear(spec.linear_a, c.gn_lambda, c.gn_beta);
  } else {
    if (!(c.noise_sigma > 0.0)) throw NumericDomain("noise_sigma = 0 makes the transition density degenerate");
    if (c.coupling == datagen::NoiseCoupling::kNone) {
      f = gaussian_additive(net_map(spec.fixed), Vector::Constant(nf, c.noise_sigma), hist);
    } else {
      const int dyn = spec.dynamic_dim();
      const int lag = c.lag;
      const double sigma = c.noise_sigma;
      auto lag_mean = [dyn, lag](const Vector& h, int k) {
        double m = 0.0;
        for (int tau = 0; tau < lag; ++tau) m += h[tau * dyn + k];
        return m / lag;
      };
      HistoryMap b;
      b.value = [=](const Vector& h) {
        Vector out(nf);
        for (int k = 0; k < nf; ++k) out[k] = 1.0 / (sigma * (1.0 + std::abs(lag_mean(h, k))));
        return out;
      };
      b.jacobian = [=](const Vector& h) {
        Matrix jac = Matrix::Zero(nf, h.size());
        for (int k = 0; k < nf; ++k) {
          const double m = lag_mean(h, k);
          const double bk = 1.0 / (sigma * (1.0 + std::abs(m)));
          const double sign = m > 0.0 ? 1.0 : (m < 0.0 ? -1.0 : 0.0);
          for (int tau = 0; tau < lag; ++tau) jac(k, tau * dyn + k) = -sigma * bk * bk * sign / lag;
        }
        return jac;
      };
      f = heteroskedastic(net_map(spec.fixed), std::move(b), nf, hist);
    }
  }
  std::tie(f.support_z, f.support_history) = simulate_support(spec, seed, 0, nf, true);
  validate(f);
  return f;
}

std::vector<DensityFamily> changing_block_families(const datagen::LatentProcessSpec& spec, std::uint64_t seed) {
  const datagen::ProcessConfig& c = spec.config;
  const int nc = c.partition.changing;
  if (nc == 0) throw InvalidInput("spec has no changing-dynamics block");
  if (!(c.noise_sigma > 0.0)) throw NumericDomain("noise_sigma = 0 makes the transition density degenerate");
  auto [z, hist] = simulate_support(spec, seed, c.partition.fixed, nc, true);
  std::vector<DensityFamily> out;
  for (const datagen::SegmentChange& change : spec.segments) {
    DensityFamily f = gaussian_additive(net_map(spec.changing_for(change)), Vector::Constant(nc, c.noise_sigma),
                                        spec.history_dim());
    f.support_z = z;
    f.support_history = hist;
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<DensityFamily> observation_families(const datagen::LatentProcessSpec& spec, std::uint64_t seed) {
  const int no = spec.config.partition.obs;
  if (no == 0) throw InvalidInput("spec has no observation-change block");
  auto [z, hist] = simulate_support(spec, seed, spec.dynamic_dim(), no, false);
  std::vector<DensityFamily> out;
  for (const datagen::SegmentChange& change : spec.segments) {
    DensityFamily f = iid_marginal(Vector::Constant(no, change.obs_mean), Vector::Constant(no, change.obs_var));
    f.support_z = z;
    f.support_history = hist;
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace lily::auditor
