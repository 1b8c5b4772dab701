#include "lily/numerics/assignment.hpp"

#include "lily/error.hpp"

#include <limits>

namespace lily {

std::vector<int> solve_assignment(const Eigen::Ref<const Matrix>& cost) {
  if (cost.rows() != cost.cols()) throw InvalidInput("solve_assignment: cost matrix must be square");
  require_finite(cost, "solve_assignment");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual source of each augmenting path.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0), way(n + 1, 0);

  for (int row = 1; row <= n; ++row) {
    match_col[0] = row;
    int col0 = 0;
    std::vector<double> min_slack(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const int i0 = match_col[col0];
      double delta = kInf;
      int col1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = col0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          col1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const int col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<int> perm(n);
  for (int j = 1; j <= n; ++j) perm[match_col[j] - 1] = j - 1;
  return perm;
}

double assignment_cost(const Eigen::Ref<const Matrix>& cost, const std::vector<int>& perm) {
  if (static_cast<Eigen::Index>(perm.size()) != cost.rows()) throw InvalidInput("assignment_cost: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < perm.size(); ++i) total += cost(static_cast<Eigen::Index>(i), perm[i]);
  return total;
}

}  // namespace lily
