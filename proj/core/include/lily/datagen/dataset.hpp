#pragma once

#include "lily/datagen/process.hpp"
#include "lily/numerics/matrix.hpp"

#include <cstdint>
#include <vector>

namespace lily::datagen {

/// Multi-segment time series. Rows of every array are time steps; each
/// segment occupies samples_per_segment consecutive rows forming one
/// trajectory.
struct Dataset {
  Matrix observations;                // (N, obs_dim)
  Matrix latents;                     // (N, n_latent)
  Matrix noise;                       // (N, n_latent)
  std::vector<std::int32_t> segments;  // (N,)
  LatentProcessSpec spec;
  std::uint64_t seed = 0;             // noise stream seed used for generation

  Eigen::Index size() const { return latents.rows(); }
  int num_segments() const { return spec.config.num_segments; }
  int samples_per_segment() const { return spec.config.samples_per_segment; }
  int obs_dim() const { return static_cast<int>(observations.cols()); }
  int n_latent() const { return static_cast<int>(latents.cols()); }
  /// First row of segment k.
  Eigen::Index segment_begin(int k) const { return static_cast<Eigen::Index>(k) * samples_per_segment(); }
};

}  // namespace lily::datagen
