#include "lily/datagen/generators.hpp"

#include "lily/datagen/streams.hpp"
#include "lily/error.hpp"

#include <cmath>
#include <string>

namespace lily::datagen {
namespace {

constexpr double kDivergenceBound = 1e6;

void require_regime(const LatentProcessSpec& spec, Regime regime, const char* op) {
  if (spec.config.regime != regime) {
    throw InvalidSpec(std::string(op) + ": spec regime is " + std::string(to_string(spec.config.regime)));
  }
}

Dataset assemble(const LatentProcessSpec& spec, std::uint64_t seed) {
  validate(spec);
  const ProcessConfig& c = spec.config;
  const Eigen::Index per = c.samples_per_segment;
  const Eigen::Index total = per * c.num_segments;

  Dataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.latents.resize(total, c.n_latent);
  ds.noise.resize(total, c.n_latent);
  ds.segments.resize(static_cast<std::size_t>(total));
  for (int k = 0; k < c.num_segments; ++k) {
    SegmentTrajectory traj = simulate_segment(spec, spec.segments[k], k, seed, c.samples_per_segment);
    ds.latents.middleRows(k * per, per) = traj.latents;
    ds.noise.middleRows(k * per, per) = traj.noise;
    for (Eigen::Index t = 0; t < per; ++t) ds.segments[static_cast<std::size_t>(k * per + t)] = k;
  }
  ds.observations = mix(ds.latents, spec.mixing);
  return ds;
}

}  // namespace

SegmentTrajectory simulate_segment(const LatentProcessSpec& spec, const SegmentChange& change, int segment,
                                   std::uint64_t seed, int samples) {
  const ProcessConfig& c = spec.config;
  const Partition& p = c.partition;
  const int dyn = p.dynamic();
  const int lag = c.lag;
  const auto seg = static_cast<std::uint64_t>(segment);

  const Rng root(seed);
  Rng init_rng = root.derive({streams::kInitialState, seg});
  Rng fixed_rng = root.derive({streams::kFixedNoise, seg});
  Rng changing_rng = root.derive({streams::kChangingNoise, seg});
  Rng obs_rng = root.derive({streams::kObsNoise, seg});
  Rng linear_rng = root.derive({streams::kLinearNoise, seg});

  const TransitionNet changing_net = p.changing > 0 ? spec.changing_for(change) : TransitionNet{};

  // history.segment(tau * dyn, dyn) holds z_{t-1-tau}
  Vector history(dyn * lag);
  for (Eigen::Index i = 0; i < history.size(); ++i) history[i] = init_rng.normal();

  SegmentTrajectory out;
  out.latents.resize(samples, c.n_latent);
  out.noise.resize(samples, c.n_latent);
  Vector z(c.n_latent), eps(c.n_latent);
  const double obs_sd = std::sqrt(change.obs_var);

  for (int t = 0; t < c.burn_in + samples; ++t) {
    if (p.fixed > 0) {
      if (c.regime == Regime::kLinearGn) {
        const Vector mean = spec.linear_a * history;
        for (int k = 0; k < p.fixed; ++k) {
          eps[k] = sample_generalized_normal(linear_rng, c.gn_lambda, c.gn_beta);
          z[k] = mean[k] + eps[k];
        }
      } else {
        const Vector q = spec.fixed.eval(history);
        for (int k = 0; k < p.fixed; ++k) {
          eps[k] = c.noise_sigma * fixed_rng.normal();
          double scale = 1.0;  // 1 / b_k
          if (c.coupling == NoiseCoupling::kHistory) {
            double lag_mean = 0.0;
            for (int tau = 0; tau < lag; ++tau) lag_mean += history[tau * dyn + k];
            scale = 1.0 + std::abs(lag_mean / lag);
          }
          z[k] = q[k] + eps[k] * scale;
        }
      }
    }
    if (p.changing > 0) {
      const Vector q = changing_net.eval(history);
      for (int c_idx = 0; c_idx < p.changing; ++c_idx) {
        const int k = p.fixed + c_idx;
        eps[k] = c.noise_sigma * changing_rng.normal();
        z[k] = q[c_idx] + eps[k];
      }
    }
    for (int o = 0; o < p.obs; ++o) {
      const int k = dyn + o;
      eps[k] = obs_rng.normal();
      z[k] = change.obs_mean + obs_sd * eps[k];
    }

    if (!z.allFinite() || z.cwiseAbs().maxCoeff() > kDivergenceBound) {
      throw NumericDomain("simulate_segment: trajectory diverged in segment " + std::to_string(segment));
    }
    if (t >= c.burn_in) {
      out.latents.row(t - c.burn_in) = z.transpose();
      out.noise.row(t - c.burn_in) = eps.transpose();
    }
    if (dyn > 0) {
      for (int tau = lag - 1; tau > 0; --tau) history.segment(tau * dyn, dyn) = history.segment((tau - 1) * dyn, dyn);
      history.head(dyn) = z.head(dyn);
    }
  }
  return out;
}

Dataset gen_fixed_hetero(const LatentProcessSpec& spec, std::uint64_t seed) {
  require_regime(spec, Regime::kFixedHetero, "gen_fixed_hetero");
  return assemble(spec, seed);
}

Dataset gen_changing_dyn(const LatentProcessSpec& spec, std::uint64_t seed) {
  require_regime(spec, Regime::kChangingDyn, "gen_changing_dyn");
  return assemble(spec, seed);
}

Dataset gen_modular(const LatentProcessSpec& spec, std::uint64_t seed) {
  require_regime(spec, Regime::kModular, "gen_modular");
  return assemble(spec, seed);
}

Dataset gen_linear_gn(const LatentProcessSpec& spec, std::uint64_t seed) {
  require_regime(spec, Regime::kLinearGn, "gen_linear_gn");
  return assemble(spec, seed);
}

Dataset generate(const LatentProcessSpec& spec, std::uint64_t seed) {
  switch (spec.config.regime) {
    case Regime::kFixedHetero: return gen_fixed_hetero(spec, seed);
    case Regime::kChangingDyn: return gen_changing_dyn(spec, seed);
    case Regime::kModular: return gen_modular(spec, seed);
    case Regime::kLinearGn: return gen_linear_gn(spec, seed);
  }
  throw InvalidSpec("generate: unknown regime");
}

Matrix mix(const Matrix& z_sequence, const MixingFunction& mixing) { return mixing.apply_rows(z_sequence); }

double sample_generalized_normal(Rng& rng, double lambda, double beta) {
  const double g = rng.gamma(1.0 / beta);
  return rng.sign() * std::pow(g / lambda, 1.0 / beta);
}

Matrix gaussian_alternative(const Matrix& z_sequence, const Vector& d1, const Matrix& u, const Vector& d2) {
  const Eigen::Index n = z_sequence.cols();
  if (d1.size() != n || d2.size() != n || u.rows() != n || u.cols() != n) {
    throw InvalidInput("gaussian_alternative: dimension mismatch");
  }
  if ((d1.array() == 0.0).any()) throw InvalidInput("gaussian_alternative: D1 must be nonsingular");
  const Matrix gram = u.transpose() * u;
  if ((gram - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidInput("gaussian_alternative: U must be orthogonal");
  }
  const Matrix transform = d1.asDiagonal() * u * d2.asDiagonal();
  return z_sequence * transform.transpose();
}

}  // namespace lily::datagen
