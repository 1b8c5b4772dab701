#include "lily/datagen/mixing.hpp"

#include "lily/error.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace lily::datagen {
namespace {

double leaky(double a, double slope) { return a >= 0.0 ? a : slope * a; }
double leaky_inverse(double y, double slope) { return y >= 0.0 ? y : y / slope; }

}  // namespace

double condition_number(const Matrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  if (smallest <= 0.0) return std::numeric_limits<double>::infinity();
  return sv[0] / smallest;
}

MixingFunction::MixingFunction(std::array<Matrix, 3> weights, std::array<Vector, 3> biases, double slope,
                               double max_condition)
    : weights_(std::move(weights)), biases_(std::move(biases)), slope_(slope) {
  if (!(slope_ > 0.0 && slope_ <= 1.0)) throw InvalidInput("MixingFunction: slope must lie in (0, 1]");
  const Eigen::Index n = weights_[0].rows();
  for (int l = 0; l < 3; ++l) {
    if (weights_[l].rows() != n || weights_[l].cols() != n || biases_[l].size() != n) {
      throw InvalidInput("MixingFunction: layers must be square and of equal size");
    }
    require_finite(weights_[l], "MixingFunction weights");
    const double cond = condition_number(weights_[l]);
    if (!(cond <= max_condition)) throw InvalidInput("MixingFunction: layer condition number above bound");
  }
}

MixingFunction MixingFunction::random(int dim, Rng& rng, double slope) {
  if (dim <= 0) throw InvalidInput("MixingFunction::random: dim must be positive");
  std::array<Matrix, 3> w;
  std::array<Vector, 3> b;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (int l = 0; l < 3; ++l) {
    do {
      w[l].resize(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) w[l](i, j) = scale * rng.normal();
    } while (condition_number(w[l]) > kMaxCondition);
    b[l].resize(dim);
    for (int i = 0; i < dim; ++i) b[l][i] = rng.uniform(-0.1, 0.1);
  }
  return MixingFunction(std::move(w), std::move(b), slope);
}

MixingFunction MixingFunction::identity(int dim) {
  std::array<Matrix, 3> w{Matrix::Identity(dim, dim), Matrix::Identity(dim, dim), Matrix::Identity(dim, dim)};
  std::array<Vector, 3> b{Vector::Zero(dim), Vector::Zero(dim), Vector::Zero(dim)};
  return MixingFunction(std::move(w), std::move(b), 1.0);
}

Vector MixingFunction::apply(const Vector& z) const {
  if (z.size() != dim()) throw InvalidInput("MixingFunction::apply: dimension mismatch");
  Vector h = z;
  for (int l = 0; l < 3; ++l) {
    h = weights_[l] * h + biases_[l];
    if (l < 2) h = h.unaryExpr([this](double a) { return leaky(a, slope_); });
  }
  return h;
}

Matrix MixingFunction::apply_rows(const Matrix& z) const {
  if (z.cols() != dim()) throw InvalidInput("MixingFunction::apply_rows: dimension mismatch");
  Matrix h = z;
  for (int l = 0; l < 3; ++l) {
    Matrix next = h * weights_[l].transpose();
    next.rowwise() += biases_[l].transpose();
    if (l < 2) next = next.unaryExpr([this](double a) { return leaky(a, slope_); });
    h = std::move(next);
  }
  return h;
}

Vector MixingFunction::invert(const Vector& x) const {
  if (x.size() != dim()) throw InvalidInput("MixingFunction::invert: dimension mismatch");
  Vector h = x;
  for (int l = 2; l >= 0; --l) {
    if (l < 2) h = h.unaryExpr([this](double y) { return leaky_inverse(y, slope_); });
    const Vector rhs = h - biases_[l];
    h = weights_[l].partialPivLu().solve(rhs);
  }
  return h;
}

}  // namespace lily::datagen
