#pragma once

#include "lily/datagen/process.hpp"
#include "lily/estimator/mlp.hpp"
#include "lily/numerics/matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lily::estimator {

/// Architecture of the sequential VAE. Theta blocks exist only when the
/// matching latent block does: theta_dyn() is 0 without changing
/// components, theta_obs() is 0 without observation components.
struct ModelConfig {
  int obs_dim = 0;
  int lag = 2;
  datagen::Partition partition{8, 0, 0};
  int theta_dyn_dim = 2;
  int theta_obs_dim = 2;
  int num_segments = 1;
  int encoder_hidden = 128;
  int encoder_layers = 3;
  int decoder_hidden = 128;
  int decoder_layers = 2;
  int prior_hidden = 64;
  int prior_layers = 2;

  int latent_dim() const { return partition.total(); }
  int theta_dyn() const { return partition.changing > 0 ? theta_dyn_dim : 0; }
  int theta_obs() const { return partition.obs > 0 ? theta_obs_dim : 0; }
  int theta_dim() const { return theta_dyn() + theta_obs(); }
  int history_dim() const { return latent_dim() * lag; }
};

/// Throws InvalidInput on non-positive sizes or an empty partition.
void validate(const ModelConfig& config);

enum class BlockKind { kFixed, kChanging, kObs };

/// Named slice of the flat parameter vector, row-major rows x cols.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

/// Where everything lives in the flat parameter vector.
struct ModelLayout {
  Mlp encoder;   // (x, theta_obs) -> (mu, log_var)
  Mlp decoder;   // (z, theta_obs) -> x
  std::vector<Mlp> inverse;         // one per latent component
  std::vector<BlockKind> kinds;     // block of each component
  std::size_t embedding_offset = 0; // num_segments x theta_dim, (theta_dyn, theta_obs)
  std::size_t size = 0;
  std::vector<ParamBlock> blocks;   // manifest, in offset order

  /// Input width of component k's inverse network.
  int inverse_input_dim(int k) const { return inverse[static_cast<std::size_t>(k)].input_dim(); }
};

ModelLayout make_layout(const ModelConfig& config);

/// Parameter path containing flat index i, e.g. "decoder.1.weight[3,17]".
std::string parameter_path(const ModelLayout& layout, std::size_t i);

/// Model state. `values` holds every trainable number (networks and
/// embeddings); x_mean / x_scale standardize observations and are fixed from
/// the training data.
struct ModelParams {
  ModelConfig config;
  ModelLayout layout;
  Vector values;
  Vector x_mean;
  Vector x_scale;

  int latent_dim() const { return config.latent_dim(); }
  /// Row of the embedding table, (theta_dyn, theta_obs).
  Vector theta(int segment) const;
  Eigen::Map<Vector> theta_row(int segment);
};

/// Fresh parameters: fan-in uniform networks, zero embeddings, identity
/// standardization.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Throws InvalidInput if any weight is non-finite or the shapes disagree.
void validate(const ModelParams& params);

}  // namespace lily::estimator
