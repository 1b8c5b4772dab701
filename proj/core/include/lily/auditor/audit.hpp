#pragma once

#include "lily/auditor/density.hpp"
#include "lily/numerics/rank.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace lily::auditor {

/// T1 fixed dynamics, T2 changing dynamics, T3 observation changes,
/// C1 heterogeneous noise, C2 linear generalized normal, C3 modular shift.
enum class Theorem { kT1, kT2, kT3, kC1, kC2, kC3 };
enum class Verdict { kIdentifiable, kUnidentifiable, kInconclusive };

std::string_view to_string(Theorem theorem);
std::string_view to_string(Verdict verdict);
Theorem theorem_from_string(std::string_view name);
Verdict verdict_from_string(std::string_view name);

/// Outcome of one rank audit.
///
/// For T1, T2, C1 and C2 each sampled z_t gets its own 2n-row matrix whose
/// columns are the function vectors evaluated over a grid of 8n histories;
/// `stacked_matrix` and `rank_report` are those of the point with the lowest
/// rank. For T3 there is no history, so the columns run over the sampled z_t
/// values and the report holds that single matrix.
///
/// verdict: identifiable iff every point reaches rank 2n; unidentifiable if a
/// row is exactly zero at every point, or the deficiency shows up again with
/// seeds seed + 1 and seed + 2; inconclusive otherwise.
struct ConditionReport {
  Theorem theorem = Theorem::kT1;
  Matrix stacked_matrix;
  RankReport rank_report;
  Verdict verdict = Verdict::kInconclusive;
  Matrix eval_points;  // sampled z_t, one per row
  std::vector<int> zero_rows;
  int num_points = 0;
  std::uint64_t seed = 0;
  bool vacuous = false;  // zero-width block of a modular audit
};

/// Theorem 1 on one single-context family. Throws InvalidInput if
/// num_points = 0.
ConditionReport audit_fixed(const DensityFamily& family, int num_points, std::uint64_t seed);
/// Theorem 2 on m >= 2 contexts of the same shape.
ConditionReport audit_changing(const std::vector<DensityFamily>& families, int num_points, std::uint64_t seed);
/// Theorem 3 on m >= 2 history-free contexts.
ConditionReport audit_observation(const std::vector<DensityFamily>& families, int num_points, std::uint64_t seed);

struct ModularAudit {
  std::vector<ConditionReport> blocks;  // T1, T2, T3 in that order
  Verdict overall = Verdict::kInconclusive;
};

/// Theorem 1 / 2 / 3 on the fixed / changing / observation blocks of
/// `spec`. A zero-width block gives a vacuous identifiable report.
ModularAudit audit_modular(const datagen::LatentProcessSpec& spec, int num_points, std::uint64_t seed);

/// Corollary 1 vectors b_k db_k/dh and b_k db_k/dh (z_k - q_k) - b_k^2 dq_k/dh,
/// at standard normal points. Throws NumericDomain if b <= 0 at a sampled
/// point.
ConditionReport audit_corollary1(const HistoryMap& q, const HistoryMap& b, int n, int history_dim, int num_points,
                                 std::uint64_t seed);
/// Same on a heteroskedastic family, using its evaluation support.
ConditionReport audit_corollary1(const DensityFamily& heteroskedastic_family, int num_points, std::uint64_t seed);

/// Corollary 2 vectors lambda beta (beta-1) |e_k|^(beta-2) c_k and
/// lambda beta (beta-1)(beta-2) sgn(e_k) |e_k|^(beta-3) c_k, c_k the k-th row
/// of A. beta = 2 is accepted as the Gaussian check. Throws InvalidInput on a
/// zero row of A, beta < 2, beta = 3 or lambda <= 0.
ConditionReport audit_corollary2(const Matrix& a, double lambda, double beta, int num_points, std::uint64_t seed);

/// Number of history draws per evaluation point.
int grid_size(int n);

}  // namespace lily::auditor
