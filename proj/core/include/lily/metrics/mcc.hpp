#pragma once

#include "lily/numerics/matrix.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace lily::metrics {

enum class CorrelationMethod { kPearson, kSpearman };

std::string_view to_string(CorrelationMethod method);
/// "pearson" or "spearman"; InvalidInput otherwise.
CorrelationMethod method_from_string(std::string_view name);

/// corr_matrix(i, j) = |corr(true_i, est_j)|, n_true x n_est. True
/// component i is matched with estimated component assignment[i]; mcc is the
/// mean of the matched entries.
struct MccReport {
  double mcc = 0.0;
  CorrelationMethod method = CorrelationMethod::kPearson;
  std::vector<int> assignment;
  Matrix corr_matrix;
  /// A column with zero variance; its correlations are reported as 0.
  bool zero_variance = false;
};

/// Requires N >= 3 rows, finite entries and n_est >= n_true. Extra estimated
/// components are allowed: the square problem is padded with zero rows and
/// only the true rows are scored.
MccReport mcc(const Matrix& z_true, const Matrix& z_est, CorrelationMethod method = CorrelationMethod::kPearson);

/// Absolute correlation matrix between the columns of a and b.
Matrix abs_correlation(const Matrix& a, const Matrix& b, CorrelationMethod method, bool* zero_variance = nullptr);

/// Average ranks (ties share the mean rank), 1-based.
Vector ranks(const Eigen::Ref<const Vector>& values);

std::string report_to_json(const MccReport& report);

}  // namespace lily::metrics
