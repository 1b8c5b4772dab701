#include "lily/harness/experiment.hpp"

#include "lily/auditor/audit.hpp"
#include "lily/auditor/density.hpp"
#include "lily/auditor/report_io.hpp"
#include "lily/datagen/dataset_io.hpp"
#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"
#include "lily/estimator/adapt.hpp"
#include "lily/estimator/checkpoint.hpp"
#include "lily/estimator/elbo.hpp"
#include "lily/estimator/windows.hpp"
#include "lily/harness/plots.hpp"
#include "lily/io.hpp"

#include <Eigen/SVD>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace lily::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int thread_cap() {
  const char* env = std::getenv("LILY_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n > 0 ? n : 1;
}

struct SeedJob {
  SeedResult result;
  std::vector<StageFailure> failures;
};

std::vector<std::string> run_audit(const datagen::LatentProcessSpec& spec, int points, std::uint64_t seed) {
  using datagen::Regime;
  switch (spec.config.regime) {
    case Regime::kFixedHetero:
      return {auditor::report_to_json(auditor::audit_fixed(auditor::fixed_block_family(spec, seed), points, seed))};
    case Regime::kChangingDyn:
      return {auditor::report_to_json(
          auditor::audit_changing(auditor::changing_block_families(spec, seed), points, seed))};
    case Regime::kModular:
      return {auditor::modular_to_json(auditor::audit_modular(spec, points, seed))};
    case Regime::kLinearGn:
      return {auditor::report_to_json(
          auditor::audit_corollary2(spec.linear_a, spec.config.gn_lambda, spec.config.gn_beta, points, seed))};
  }
  return {};
}

estimator::TrainResult train_seed(const datagen::Dataset& ds, const ExperimentConfig& cfg, std::uint64_t seed,
                                  double& beta, double& gamma) {
  estimator::TrainConfig tc = cfg.train;
  tc.seed = seed;
  if (cfg.beta_grid.empty()) {
    beta = tc.beta;
    gamma = tc.gamma;
    return estimator::train(ds, tc);
  }
  // Candidates are ranked at the configured weights: each pair's own ELBO
  // would favour the smallest weights.
  estimator::TrainResult best;
  double best_elbo = -std::numeric_limits<double>::infinity();
  for (double b : cfg.beta_grid) {
    for (double g : cfg.gamma_grid) {
      tc.beta = b;
      tc.gamma = g;
      estimator::TrainResult r = estimator::train(ds, tc);
      const double v =
          estimator::validation_elbo(ds, r.params, cfg.train.weights(), cfg.train.val_fraction, seed);
      if (!r.diverged && v > best_elbo) {
        best_elbo = v;
        best = std::move(r);
        beta = b;
        gamma = g;
      }
    }
  }
  if (!std::isfinite(best_elbo)) throw NumericDomain("every grid candidate diverged");
  return best;
}

void evaluate(const datagen::Dataset& ds, const estimator::ModelParams& params, double val_fraction,
              SeedResult& out) {
  const estimator::WindowSplit split = estimator::split_windows(ds, params.config.lag, val_fraction);
  const auto rows = static_cast<Eigen::Index>(split.val_rows.size());
  Matrix x(rows, ds.obs_dim());
  out.val_true.resize(rows, ds.n_latent());
  std::vector<int> seg(split.val_rows.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index r = split.val_rows[static_cast<std::size_t>(i)];
    x.row(i) = ds.observations.row(r);
    out.val_true.row(i) = ds.latents.row(r);
    seg[static_cast<std::size_t>(i)] = ds.segments[static_cast<std::size_t>(r)];
  }
  const Matrix est = estimator::encode_means(x, seg, params);
  out.report = metrics::mcc(out.val_true, est);
  out.mcc = out.report.mcc;
  out.val_est.resize(rows, ds.n_latent());
  for (int k = 0; k < ds.n_latent(); ++k) out.val_est.col(k) = est.col(out.report.assignment[static_cast<std::size_t>(k)]);
}

void adapt_seed(const datagen::LatentProcessSpec& spec, const ExperimentConfig& cfg,
                const estimator::ModelParams& params, SeedResult& out) {
  const int h = cfg.adapt.held_out_segments;
  AdaptOutcome& a = out.adapt;
  a.theta_hat.resize(h, params.config.theta_dim());
  a.truth.resize(h);
  a.steps.assign(static_cast<std::size_t>(h), 0);
  estimator::AdaptConfig ac;
  ac.weights = {out.beta, out.gamma};
  ac.max_steps = cfg.adapt.max_steps;
  for (int i = 0; i < h; ++i) {
    const int index = spec.config.num_segments + i;
    const datagen::SegmentChange change = datagen::draw_segment_change(spec, index);
    const datagen::SegmentTrajectory traj =
        datagen::simulate_segment(spec, change, index, cfg.data_seed, cfg.adapt.samples);
    const Matrix x = datagen::mix(traj.latents, spec.mixing);
    ac.seed = out.seed * 1000003ULL + static_cast<std::uint64_t>(i);
    const estimator::AdaptResult r = estimator::correct_shift(params, x, ac);
    a.theta_hat.row(i) = r.theta.transpose();
    a.truth[i] = spec.config.scalar_modulation ? change.modulation : change.obs_mean;
    a.steps[static_cast<std::size_t>(i)] = r.steps;
  }
  a.correlation = principal_correlation(a.theta_hat, a.truth, &a.projection);
  out.adapted = true;
}

SeedJob run_seed(const datagen::Dataset& ds, const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out) {
  SeedJob job;
  SeedResult& r = job.result;
  r.seed = seed;
  const auto fail = [&](const char* stage, const std::exception& e) {
    job.failures.push_back({stage, seed, e.what()});
  };
  estimator::TrainResult tr;
  try {
    tr = train_seed(ds, cfg, seed, r.beta, r.gamma);
    r.best_epoch = tr.best_epoch;
    r.diverged = tr.diverged;
    r.history = tr.history;
    estimator::TrainConfig saved = cfg.train;
    saved.seed = seed;
    saved.beta = r.beta;
    saved.gamma = r.gamma;
    estimator::save_checkpoint(out / ("seed_" + std::to_string(seed)), tr.params, saved, tr.history);
    if (tr.diverged) throw NumericDomain(tr.message);
  } catch (const std::exception& e) {
    fail("train", e);
    return job;
  }
  try {
    evaluate(ds, tr.params, cfg.train.val_fraction, r);
    r.ok = true;
  } catch (const std::exception& e) {
    fail("evaluate", e);
    return job;
  }
  if (cfg.adapt.enabled) {
    try {
      adapt_seed(ds.spec, cfg, tr.params, r);
    } catch (const std::exception& e) {
      fail("adapt", e);
    }
  }
  return job;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

}  // namespace

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

double principal_correlation(const Matrix& theta_hat, const Vector& truth, Vector* projection) {
  if (theta_hat.rows() != truth.size() || theta_hat.rows() < 2) {
    throw InvalidInput("principal_correlation needs matching rows, at least two");
  }
  const Matrix centered = theta_hat.rowwise() - theta_hat.colwise().mean();
  Vector proj = Vector::Zero(theta_hat.rows());
  if (centered.cols() > 0 && centered.norm() > 0.0) {
    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    proj = centered * svd.matrixV().col(0);
  }
  if (projection != nullptr) *projection = proj;
  const Vector t = truth.array() - truth.mean();
  const Vector p = proj.array() - proj.mean();
  const double denom = std::sqrt(t.squaredNorm() * p.squaredNorm());
  if (!(denom > 0.0)) return 0.0;
  return std::abs(t.dot(p)) / denom;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = cfg.name;
  report.regime = std::string(datagen::to_string(cfg.data.regime));
  const fs::path out = cfg.outputs;
  fs::create_directories(out);

  const auto finish = [&]() {
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    io::write_text(out / "report.json", report_to_json(report) + "\n");
    emit_plots(report, out);
    return report;
  };

  datagen::Dataset ds;
  try {
    ds = datagen::generate(datagen::build_spec(cfg.data), cfg.data_seed);
    datagen::save_dataset(ds, out / "data");
  } catch (const std::exception& e) {
    report.failures.push_back({"generate", 0, e.what()});
    return finish();
  }

  if (cfg.audit) {
    try {
      report.audit_json = run_audit(ds.spec, cfg.audit_points, cfg.data_seed);
      json all = json::array();
      for (const auto& a : report.audit_json) all.push_back(json::parse(a));
      io::write_text(out / "audit.json", all.dump(2) + "\n");
    } catch (const std::exception& e) {
      report.failures.push_back({"audit", 0, e.what()});
    }
  }

  std::vector<SeedJob> jobs(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) jobs[i] = run_seed(ds, cfg, cfg.seeds[i], out);
  };
  const int threads = std::min<int>(thread_cap(), static_cast<int>(jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<double> mccs;
  std::vector<double> corrs;
  for (auto& job : jobs) {
    if (job.result.ok) mccs.push_back(job.result.mcc);
    if (job.result.adapted) corrs.push_back(job.result.adapt.correlation);
    for (auto& f : job.failures) report.failures.push_back(std::move(f));
    report.seeds.push_back(std::move(job.result));
  }
  std::tie(report.mcc_mean, report.mcc_std) = mean_std(mccs);
  report.adapt_corr_mean = mean_std(corrs).first;
  return finish();
}

std::string report_to_json(const ExperimentReport& r, bool include_timing) {
  // NaN is not valid JSON; absent values are written as null.
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json seeds = json::array();
  for (const SeedResult& s : r.seeds) {
    json e{{"seed", s.seed},
           {"ok", s.ok},
           {"mcc", num(s.mcc)},
           {"beta", s.beta},
           {"gamma", s.gamma},
           {"best_epoch", s.best_epoch},
           {"epochs_run", s.history.size()},
           {"diverged", s.diverged},
           {"assignment", s.report.assignment}};
    json curve = json::array();
    for (const auto& h : s.history) curve.push_back({{"epoch", h.epoch}, {"train_elbo", num(h.train_elbo)},
                                                      {"val_elbo", num(h.val_elbo)}, {"mcc", num(h.mcc)}});
    e["elbo_curve"] = curve;
    if (s.adapted) {
      e["adapt"] = {{"correlation", num(s.adapt.correlation)},
                    {"theta_hat", matrix_json(s.adapt.theta_hat)},
                    {"truth", std::vector<double>(s.adapt.truth.begin(), s.adapt.truth.end())},
                    {"steps", s.adapt.steps}};
    }
    seeds.push_back(e);
  }
  json audits = json::array();
  for (const auto& a : r.audit_json) audits.push_back(json::parse(a));
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"stage", f.stage}, {"seed", f.seed}, {"message", f.message}});
  json j{{"name", r.name},
         {"regime", r.regime},
         {"seeds", seeds},
         {"mcc_mean", num(r.mcc_mean)},
         {"mcc_std", num(r.mcc_std)},
         {"adapt_corr_mean", num(r.adapt_corr_mean)},
         {"audits", audits},
         {"failures", failures}};
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j.dump(2);
}

}  // namespace lily::harness
