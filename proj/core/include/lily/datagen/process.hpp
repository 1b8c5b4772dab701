#pragma once

#include "lily/datagen/mixing.hpp"
#include "lily/numerics/matrix.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lily::datagen {

enum class Regime { kFixedHetero, kChangingDyn, kModular, kLinearGn };

std::string_view to_string(Regime regime);
/// Accepts "fixed_hetero", "changing_dyn", "modular", "linear_gn".
Regime regime_from_string(std::string_view name);

/// How the fixed-dynamics noise scale couples to the history.
/// kHistory: z_k = q_k + eps_k * (1 + |mean_tau z_{k,t-tau}|), i.e.
///   b_k = 1 / (1 + |lag-mean of component k|).
/// kNone: b_k = 1, the Gaussian additive (unidentifiable) control.
enum class NoiseCoupling { kHistory, kNone };

std::string_view to_string(NoiseCoupling coupling);
NoiseCoupling coupling_from_string(std::string_view name);

struct Partition {
  int fixed = 0;
  int changing = 0;
  int obs = 0;

  int total() const { return fixed + changing + obs; }
  int dynamic() const { return fixed + changing; }
  bool operator==(const Partition&) const = default;
};

/// Scalar knobs of a latent process. Everything random about the process
/// (transition weights, change parameters, mixing) is drawn from `seed`.
struct ProcessConfig {
  Regime regime = Regime::kFixedHetero;
  int n_latent = 8;
  int lag = 2;
  Partition partition{8, 0, 0};
  double noise_sigma = 0.1;
  NoiseCoupling coupling = NoiseCoupling::kHistory;
  double gn_lambda = 1.0;
  double gn_beta = 4.0;
  int num_segments = 1;
  int samples_per_segment = 20000;
  int burn_in = 100;
  /// Asymptotic per-step growth factor of the noiseless transition map
  /// (its top Lyapunov exponent, exponentiated). Values below 1 give a
  /// stationary process; for linear_gn this is the companion spectral radius.
  double transition_gain = 0.95;
  /// Tie every per-segment change parameter to one scalar s_k ~ U[-1, 1].
  bool scalar_modulation = false;
  std::uint64_t seed = 0;
};

/// Two-layer leaky-rectifier transition q(h) = W2 a(W1 h) over the stacked
/// history h = (z_{t-1}, ..., z_{t-L}) of the dynamic (fixed + changing)
/// components.
struct TransitionNet {
  Matrix w1;  // hidden x history_dim
  Matrix w2;  // outputs x hidden
  double slope = 0.2;

  int outputs() const { return static_cast<int>(w2.rows()); }
  int history_dim() const { return static_cast<int>(w1.cols()); }
  Vector eval(const Vector& history) const;
  /// d q / d history, outputs x history_dim.
  Matrix jacobian(const Vector& history) const;
};

/// Ground-truth change parameters of one segment.
struct SegmentChange {
  Matrix dyn_kernel;  // first-layer kernel of the changing block; empty if none
  double obs_mean = 0.0;
  double obs_var = 1.0;
  double modulation = 0.0;  // s_k under scalar modulation, else 0
};

struct LatentProcessSpec {
  ProcessConfig config;
  TransitionNet fixed;          // rows = partition.fixed
  TransitionNet changing;       // w2 shared; w1 replaced by each segment's kernel
  Matrix linear_a;              // linear_gn only: n x (n * lag)
  Matrix kernel_base;           // scalar modulation: kernel = base + s_k * direction
  Matrix kernel_direction;
  std::vector<SegmentChange> segments;
  MixingFunction mixing;

  int dynamic_dim() const { return config.partition.dynamic(); }
  int history_dim() const { return dynamic_dim() * config.lag; }
  /// Transition of the changing block under `change`.
  TransitionNet changing_for(const SegmentChange& change) const;
};

/// Partition implied by the regime when the config leaves it inconsistent
/// with n_latent (fixed/linear: (n,0,0), changing: (0,n,0)).
Partition default_partition(Regime regime, int n_latent);

/// Checks config invariants; throws InvalidSpec.
void validate(const ProcessConfig& config);
/// Checks config and drawn parameters (e.g. nonzero rows of A).
void validate(const LatentProcessSpec& spec);

/// Draws all process parameters from config.seed and validates.
LatentProcessSpec build_spec(const ProcessConfig& config);

/// Change parameters for segment `index`. The changing kernel is rescaled so
/// the segment's dynamic map has growth factor config.transition_gain; deterministic in (spec seed,
/// index), so indices past num_segments give fresh held-out segments.
SegmentChange draw_segment_change(const LatentProcessSpec& spec, int index);

}  // namespace lily::datagen
