#pragma once

#include "lily/numerics/matrix.hpp"

#include <vector>

namespace lily {

/// Default relative tolerance for the identifiability audits.
inline constexpr double kAuditRankTolerance = 1e-6;

struct RankReport {
  std::vector<double> singular_values;  // non-negative, descending
  int numeric_rank = 0;
  double ratio = 0.0;  // smallest / largest singular value (0 if largest is 0)
};

/// Numeric rank: number of singular values strictly above
/// `rel_tol * sigma_max`. Throws InvalidInput on an empty or non-finite
/// matrix or a tolerance outside (0, 1).
RankReport rank_with_tolerance(const Eigen::Ref<const Matrix>& m, double rel_tol = kAuditRankTolerance);

}  // namespace lily
