#pragma once

#include "lily/numerics/matrix.hpp"

#include <vector>

namespace lily {

/// Exact linear sum assignment (shortest augmenting path with potentials,
/// O(n^3)). Returns `perm` with row i assigned to column perm[i], minimizing
/// sum_i cost(i, perm[i]). Throws InvalidInput for non-square or non-finite
/// costs.
std::vector<int> solve_assignment(const Eigen::Ref<const Matrix>& cost);

/// Total cost of an assignment produced by solve_assignment.
double assignment_cost(const Eigen::Ref<const Matrix>& cost, const std::vector<int>& perm);

}  // namespace lily
