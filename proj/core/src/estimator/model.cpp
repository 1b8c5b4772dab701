#include "lily/estimator/model.hpp"

#include "lily/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lily::estimator {
namespace {

std::vector<int> widths(int in, int hidden, int layers, int out) {
  std::vector<int> w{in};
  for (int i = 0; i < layers; ++i) w.push_back(hidden);
  w.push_back(out);
  return w;
}

void add_blocks(std::vector<ParamBlock>& blocks, const std::string& prefix, const Mlp& mlp) {
  for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
    const auto& l = mlp.layers[i];
    blocks.push_back({prefix + "." + std::to_string(i) + ".weight", l.w_offset, l.out, l.in});
    blocks.push_back({prefix + "." + std::to_string(i) + ".bias", l.b_offset, l.out, 1});
  }
}

const char* kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::kFixed: return "fixed";
    case BlockKind::kChanging: return "changing";
    case BlockKind::kObs: return "obs";
  }
  return "?";
}

}  // namespace

void validate(const ModelConfig& c) {
  if (c.obs_dim <= 0) throw InvalidInput("model obs_dim must be positive");
  if (c.lag < 1) throw InvalidInput("model lag must be at least 1");
  if (c.partition.fixed < 0 || c.partition.changing < 0 || c.partition.obs < 0 || c.latent_dim() <= 0) {
    throw InvalidInput("model partition must be non-negative with a positive total");
  }
  if (c.theta_dyn_dim < 0 || c.theta_obs_dim < 0) throw InvalidInput("theta dimensions must be non-negative");
  if (c.num_segments < 1) throw InvalidInput("model needs at least one segment");
  if (c.encoder_hidden < 1 || c.encoder_layers < 1 || c.decoder_hidden < 1 || c.decoder_layers < 1 ||
      c.prior_hidden < 1 || c.prior_layers < 1) {
    throw InvalidInput("network sizes must be positive");
  }
}

ModelLayout make_layout(const ModelConfig& c) {
  validate(c);
  ModelLayout layout;
  const int n = c.latent_dim();
  std::size_t offset = 0;
  layout.encoder = make_mlp(widths(c.obs_dim + c.theta_obs(), c.encoder_hidden, c.encoder_layers, 2 * n),
                            Activation::kLeakyRelu, offset);
  layout.decoder = make_mlp(widths(n + c.theta_obs(), c.decoder_hidden, c.decoder_layers, c.obs_dim),
                            Activation::kLeakyRelu, offset);
  add_blocks(layout.blocks, "encoder", layout.encoder);
  add_blocks(layout.blocks, "decoder", layout.decoder);
  for (int k = 0; k < n; ++k) {
    BlockKind kind = BlockKind::kFixed;
    if (k >= c.partition.fixed) kind = BlockKind::kChanging;
    if (k >= c.partition.dynamic()) kind = BlockKind::kObs;
    int in = 1;
    if (kind != BlockKind::kObs) in += c.history_dim();
    if (kind == BlockKind::kChanging) in += c.theta_dyn();
    if (kind == BlockKind::kObs) in += c.theta_obs();
    layout.inverse.push_back(
        make_mlp(widths(in, c.prior_hidden, c.prior_layers, 1), Activation::kSoftLeaky, offset));
    layout.kinds.push_back(kind);
    add_blocks(layout.blocks, std::string("inverse_") + kind_name(kind) + "." + std::to_string(k),
               layout.inverse.back());
  }
  layout.embedding_offset = offset;
  if (c.theta_dim() > 0) {
    layout.blocks.push_back({"embeddings", offset, c.num_segments, c.theta_dim()});
    offset += static_cast<std::size_t>(c.num_segments) * c.theta_dim();
  }
  layout.size = offset;
  return layout;
}

std::string parameter_path(const ModelLayout& layout, std::size_t i) {
  for (const auto& b : layout.blocks) {
    if (i >= b.offset && i < b.offset + b.size()) {
      const std::size_t local = i - b.offset;
      return b.name + "[" + std::to_string(local / b.cols) + "," + std::to_string(local % b.cols) + "]";
    }
  }
  return "?[" + std::to_string(i) + "]";
}

Vector ModelParams::theta(int segment) const {
  const int d = config.theta_dim();
  if (segment < 0 || segment >= config.num_segments) throw InvalidInput("segment index outside the embedding table");
  return values.segment(static_cast<Eigen::Index>(layout.embedding_offset) + static_cast<Eigen::Index>(segment) * d, d);
}

Eigen::Map<Vector> ModelParams::theta_row(int segment) {
  const int d = config.theta_dim();
  if (segment < 0 || segment >= config.num_segments) throw InvalidInput("segment index outside the embedding table");
  return {values.data() + layout.embedding_offset + static_cast<std::size_t>(segment) * d, d};
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p;
  p.config = config;
  p.layout = make_layout(config);
  p.values = Vector::Zero(static_cast<Eigen::Index>(p.layout.size));
  Rng rng(seed);
  init_mlp(p.layout.encoder, p.values.data(), rng);
  init_mlp(p.layout.decoder, p.values.data(), rng);
  for (const auto& mlp : p.layout.inverse) init_mlp(mlp, p.values.data(), rng);
  p.x_mean = Vector::Zero(config.obs_dim);
  p.x_scale = Vector::Ones(config.obs_dim);
  return p;
}

void validate(const ModelParams& p) {
  validate(p.config);
  if (p.values.size() != static_cast<Eigen::Index>(p.layout.size)) {
    throw InvalidInput("parameter vector does not match the layout");
  }
  if (p.x_mean.size() != p.config.obs_dim || p.x_scale.size() != p.config.obs_dim) {
    throw InvalidInput("standardization vectors do not match obs_dim");
  }
  if (!(p.x_scale.array() > 0.0).all()) throw InvalidInput("standardization scales must be positive");
  for (Eigen::Index i = 0; i < p.values.size(); ++i) {
    if (!std::isfinite(p.values[i])) {
      throw InvalidInput("non-finite parameter " + parameter_path(p.layout, static_cast<std::size_t>(i)));
    }
  }
  if (!p.x_mean.allFinite()) throw InvalidInput("non-finite standardization mean");
}

}  // namespace lily::estimator
