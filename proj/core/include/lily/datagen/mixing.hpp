#pragma once

#include "lily/numerics/matrix.hpp"
#include "lily/numerics/rng.hpp"

#include <array>

namespace lily::datagen {

/// Invertible three-layer leaky-rectifier MLP g mapping latents to
/// observations: x = W3 a(W2 a(W1 z + b1) + b2) + b3.
class MixingFunction {
 public:
  static constexpr double kDefaultSlope = 0.2;
  static constexpr double kMaxCondition = 100.0;

  MixingFunction() = default;
  /// Validates: square nonsingular layers of equal size with condition number
  /// at most `max_condition`, slope in (0, 1].
  MixingFunction(std::array<Matrix, 3> weights, std::array<Vector, 3> biases, double slope,
                 double max_condition = kMaxCondition);

  /// Random layers, each redrawn until its condition number is at most
  /// kMaxCondition.
  static MixingFunction random(int dim, Rng& rng, double slope = kDefaultSlope);
  static MixingFunction identity(int dim);

  int dim() const { return static_cast<int>(weights_[0].rows()); }
  double slope() const { return slope_; }
  const std::array<Matrix, 3>& weights() const { return weights_; }
  const std::array<Vector, 3>& biases() const { return biases_; }

  Vector apply(const Vector& z) const;
  /// Row-wise application to an (N, dim) latent matrix.
  Matrix apply_rows(const Matrix& z) const;
  /// Exact layer-by-layer inverse.
  Vector invert(const Vector& x) const;

 private:
  std::array<Matrix, 3> weights_;
  std::array<Vector, 3> biases_;
  double slope_ = kDefaultSlope;
};

double condition_number(const Matrix& m);

}  // namespace lily::datagen
