#include "lily/numerics/rank.hpp"

#include "lily/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace lily {

void throw_non_finite(std::string_view what) { throw InvalidInput(std::string(what) + ": non-finite entry"); }

RankReport rank_with_tolerance(const Eigen::Ref<const Matrix>& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidInput("rank_with_tolerance: empty matrix");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidInput("rank_with_tolerance: rel_tol must lie in (0, 1)");
  require_finite(m, "rank_with_tolerance");

  // Singular values only; tall orientation keeps the bidiagonalization small
  // for the wide (2n x many points) audit matrices.
  Eigen::MatrixXd dense = m.rows() < m.cols() ? Eigen::MatrixXd(m.transpose()) : Eigen::MatrixXd(m);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(dense);
  const Eigen::VectorXd& sv = svd.singularValues();

  RankReport report;
  report.singular_values.assign(sv.data(), sv.data() + sv.size());
  std::sort(report.singular_values.begin(), report.singular_values.end(), std::greater<>());
  const double largest = report.singular_values.front();
  const double threshold = rel_tol * largest;
  report.numeric_rank = static_cast<int>(std::count_if(report.singular_values.begin(), report.singular_values.end(),
                                                       [&](double s) { return s > threshold; }));
  report.ratio = largest > 0.0 ? report.singular_values.back() / largest : 0.0;
  return report;
}

}  // namespace lily
