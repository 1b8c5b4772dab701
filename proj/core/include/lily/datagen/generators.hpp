#pragma once

#include "lily/datagen/dataset.hpp"
#include "lily/datagen/mixing.hpp"
#include "lily/datagen/process.hpp"

#include <cstdint>

namespace lily::datagen {

/// Latents and noise of one segment trajectory (burn-in already dropped).
struct SegmentTrajectory {
  Matrix latents;
  Matrix noise;
};

/// Simulates one segment of `spec` under `change`, drawing from the
/// sub-streams of (seed, segment). Initial L states are i.i.d. standard
/// normal; the first burn_in steps are discarded.
SegmentTrajectory simulate_segment(const LatentProcessSpec& spec, const SegmentChange& change, int segment,
                                   std::uint64_t seed, int samples);

/// Heterogeneous-noise fixed dynamics:
/// z_{k,t} = q_k(history) + eps_{k,t} / b_k(history), eps ~ N(0, sigma^2).
Dataset gen_fixed_hetero(const LatentProcessSpec& spec, std::uint64_t seed);
/// Gaussian additive dynamics whose first-layer kernel changes per segment.
Dataset gen_changing_dyn(const LatentProcessSpec& spec, std::uint64_t seed);
/// Fixed, changing and global-observation blocks side by side.
Dataset gen_modular(const LatentProcessSpec& spec, std::uint64_t seed);
/// Linear transition with generalized-normal innovations.
Dataset gen_linear_gn(const LatentProcessSpec& spec, std::uint64_t seed);
/// Dispatches on spec.config.regime.
Dataset generate(const LatentProcessSpec& spec, std::uint64_t seed);

/// x_t = g(z_t) row by row.
Matrix mix(const Matrix& z_sequence, const MixingFunction& mixing);

/// Exact sampler for p(e) proportional to exp(-lambda |e|^beta):
/// e = sign * (G / lambda)^(1/beta), G ~ Gamma(1/beta, 1).
double sample_generalized_normal(Rng& rng, double lambda, double beta);

/// Spurious solution of the Gaussian additive case: z_hat_t = D1 U D2 z_t.
/// d1 and d2 are diagonals; U must be orthogonal within 1e-10 and D1
/// nonsingular, else InvalidInput.
Matrix gaussian_alternative(const Matrix& z_sequence, const Vector& d1, const Matrix& u, const Vector& d2);

}  // namespace lily::datagen
