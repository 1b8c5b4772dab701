#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace lily {

/// Dense row-major matrix of 64-bit reals. Rows are observations or
/// function vectors, columns are features or evaluation points.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

[[noreturn]] void throw_non_finite(std::string_view what);

/// Throws InvalidInput naming `what` if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, std::string_view what) {
  if (!m.allFinite()) throw_non_finite(what);
}

}  // namespace lily
