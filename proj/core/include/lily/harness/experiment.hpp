#pragma once

#include "lily/harness/config.hpp"
#include "lily/metrics/mcc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lily::harness {

struct StageFailure {
  std::string stage;  // generate, audit, train, evaluate, adapt
  std::uint64_t seed = 0;
  std::string message;
};

struct AdaptOutcome {
  Matrix theta_hat;           // held-out segments x theta_dim
  Vector truth;               // per segment scalar modulation (or obs mean)
  Vector projection;          // theta_hat on its first principal direction
  double correlation = 0.0;   // |corr(projection, truth)|
  std::vector<int> steps;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = false;
  double mcc = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  int best_epoch = 0;
  bool diverged = false;
  std::vector<estimator::EpochRecord> history;
  metrics::MccReport report;
  Matrix val_true;  // validation latents
  Matrix val_est;   // posterior means, columns reordered to match val_true
  bool adapted = false;
  AdaptOutcome adapt;
};

struct ExperimentReport {
  std::string name;
  std::string regime;
  std::vector<SeedResult> seeds;  // config order
  double mcc_mean = 0.0;
  double mcc_std = 0.0;  // population standard deviation over successful seeds
  double adapt_corr_mean = 0.0;
  std::vector<std::string> audit_json;  // one report per audited theorem
  std::vector<StageFailure> failures;
  double wall_seconds = 0.0;
};

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// |Pearson correlation| between the first principal component of the rows
/// of theta_hat and truth.
double principal_correlation(const Matrix& theta_hat, const Vector& truth, Vector* projection = nullptr);

/// generate -> audit (optional) -> train per seed -> MCC -> adapt (optional).
/// Writes data/, audit.json, seed_<s>/ checkpoints, report.json and the plot
/// CSVs under cfg.outputs. Seeds run as parallel jobs capped by
/// LILY_THREADS (default 1); results are assembled in seed order. A stage
/// failure is recorded and the remaining seeds still run.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Deterministic given config and seeds, except for "wall_seconds" which is
/// left out when include_timing is false.
std::string report_to_json(const ExperimentReport& report, bool include_timing = true);

}  // namespace lily::harness
