#pragma once

#include "lily/numerics/matrix.hpp"
#include "lily/numerics/rng.hpp"

#include <cstddef>
#include <vector>

namespace lily::estimator {

/// Column-major activations: one column per sample.
using Batch = Eigen::MatrixXd;

/// kLeakyRelu: max(a, 0.2 a). kSoftLeaky: 0.2 a + 0.8 softplus(a), a smooth
/// strictly increasing variant used where second derivatives are needed.
enum class Activation { kLeakyRelu, kSoftLeaky };

inline constexpr double kLeakySlope = 0.2;

/// One dense layer a = W h + b; W is stored row-major (out x in) at
/// w_offset of the flat parameter vector, b at b_offset.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::size_t w_offset = 0;
  std::size_t b_offset = 0;
};

/// Dense layers with `activation` after every layer but the last.
struct Mlp {
  std::vector<DenseLayer> layers;
  Activation activation = Activation::kLeakyRelu;

  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }
  std::size_t num_params() const;
};

/// Lays out an MLP with the given widths (input, hidden..., output) starting
/// at `offset`; advances offset past its parameters.
Mlp make_mlp(const std::vector<int>& widths, Activation activation, std::size_t& offset);

/// Fan-in scaled uniform weights (bound sqrt(6 / ((1 + 0.2^2) fan_in))), zero
/// biases.
void init_mlp(const Mlp& mlp, double* params, Rng& rng);

struct MlpCache {
  std::vector<Batch> inputs;  // input of each layer
  std::vector<Batch> pre;     // pre-activation of each layer
};

Batch mlp_forward(const Mlp& mlp, const double* params, const Batch& input, MlpCache* cache = nullptr);

/// Accumulates dL/dparams into grad_params (same layout; nullptr skips it) and
/// returns dL/dinput.
Batch mlp_backward(const Mlp& mlp, const double* params, const MlpCache& cache, const Batch& grad_out,
                   double* grad_params);

/// Forward pass that also carries the directional derivative along input
/// coordinate `tangent_index` (forward-mode tangent). Output has a single
/// row; `tangent` receives d out / d input[tangent_index] per sample.
struct TangentCache {
  MlpCache value;
  std::vector<Batch> tangent_in;   // tangent of each layer's input
  std::vector<Batch> tangent_pre;  // tangent of each pre-activation
  int tangent_index = 0;
};

void mlp_forward_tangent(const Mlp& mlp, const double* params, const Batch& input, int tangent_index,
                         Eigen::RowVectorXd& value, Eigen::RowVectorXd& tangent, TangentCache& cache);

/// Backward pass through both the value and the tangent paths. Accumulates
/// into grad_params and returns dL/dinput.
Batch mlp_backward_tangent(const Mlp& mlp, const double* params, const TangentCache& cache,
                           const Eigen::RowVectorXd& grad_value, const Eigen::RowVectorXd& grad_tangent,
                           double* grad_params);

double activate(Activation act, double a);
double activate_d1(Activation act, double a);
double activate_d2(Activation act, double a);

}  // namespace lily::estimator
