#include "lily/metrics/mcc.hpp"

#include "lily/error.hpp"
#include "lily/numerics/assignment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lily::metrics {

std::string_view to_string(CorrelationMethod method) {
  return method == CorrelationMethod::kPearson ? "pearson" : "spearman";
}

CorrelationMethod method_from_string(std::string_view name) {
  if (name == "pearson") return CorrelationMethod::kPearson;
  if (name == "spearman") return CorrelationMethod::kSpearman;
  throw InvalidInput("unknown correlation method: " + std::string(name));
}

Vector ranks(const Eigen::Ref<const Vector>& values) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  Vector r(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && values[order[static_cast<std::size_t>(j + 1)]] == values[order[static_cast<std::size_t>(i)]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) r[order[static_cast<std::size_t>(t)]] = mean_rank;
    i = j + 1;
  }
  return r;
}

namespace {

// Centered, unit-norm columns; zero columns stay zero.
Matrix normalized_columns(const Matrix& m, CorrelationMethod method, bool& zero_variance) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Vector c = method == CorrelationMethod::kSpearman ? ranks(m.col(j)) : Vector(m.col(j));
    c.array() -= c.mean();
    const double norm = c.norm();
    const double scale = std::max(1.0, m.col(j).cwiseAbs().maxCoeff());
    if (!(norm > 1e-12 * scale * std::sqrt(static_cast<double>(m.rows())))) {
      zero_variance = true;
      out.col(j).setZero();
    } else {
      out.col(j) = c / norm;
    }
  }
  return out;
}

}  // namespace

Matrix abs_correlation(const Matrix& a, const Matrix& b, CorrelationMethod method, bool* zero_variance) {
  if (a.rows() != b.rows()) throw InvalidInput("correlation inputs need the same number of rows");
  bool zv = false;
  const Matrix na = normalized_columns(a, method, zv);
  const Matrix nb = normalized_columns(b, method, zv);
  if (zero_variance != nullptr) *zero_variance = zv;
  Matrix c = (na.transpose() * nb).cwiseAbs();
  return c.cwiseMin(1.0);
}

MccReport mcc(const Matrix& z_true, const Matrix& z_est, CorrelationMethod method) {
  if (z_true.rows() < 3) throw InvalidInput("mcc needs at least 3 samples");
  if (z_true.rows() != z_est.rows()) throw InvalidInput("mcc inputs need the same number of samples");
  if (z_true.cols() < 1 || z_est.cols() < z_true.cols()) {
    throw InvalidInput("estimated dimension must be at least the true dimension");
  }
  require_finite(z_true, "z_true");
  require_finite(z_est, "z_est");
  MccReport r;
  r.method = method;
  r.corr_matrix = abs_correlation(z_true, z_est, method, &r.zero_variance);
  const Eigen::Index n = z_est.cols();
  Matrix cost = Matrix::Ones(n, n);
  cost.topRows(z_true.cols()) -= r.corr_matrix;
  const std::vector<int> perm = solve_assignment(cost);
  r.assignment.assign(perm.begin(), perm.begin() + z_true.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < z_true.cols(); ++i) sum += r.corr_matrix(i, r.assignment[static_cast<std::size_t>(i)]);
  r.mcc = sum / static_cast<double>(z_true.cols());
  return r;
}

std::string report_to_json(const MccReport& r) {
  nlohmann::json corr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.corr_matrix.rows(); ++i) {
    std::vector<double> row(r.corr_matrix.row(i).data(), r.corr_matrix.row(i).data() + r.corr_matrix.cols());
    corr.push_back(row);
  }
  nlohmann::json j{{"mcc", r.mcc},
                   {"method", std::string(to_string(r.method))},
                   {"assignment", r.assignment},
                   {"corr_matrix", corr},
                   {"zero_variance", r.zero_variance}};
  return j.dump(2);
}

}  // namespace lily::metrics
