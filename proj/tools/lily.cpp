// lily: generate, audit, train, adapt, eval and experiment subcommands.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include "lily/auditor/audit.hpp"
#include "lily/auditor/density.hpp"
#include "lily/auditor/report_io.hpp"
#include "lily/datagen/dataset_io.hpp"
#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"
#include "lily/estimator/adapt.hpp"
#include "lily/estimator/checkpoint.hpp"
#include "lily/estimator/elbo.hpp"
#include "lily/harness/config.hpp"
#include "lily/harness/experiment.hpp"
#include "lily/io.hpp"
#include "lily/metrics/mcc.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kUsage = 1;
constexpr int kFailure = 2;

// A spec file may be a bare process config or an experiment config with a
// "data" section.
lily::datagen::ProcessConfig read_process_config(const fs::path& path, std::uint64_t* data_seed) {
  const std::string text = lily::io::read_text(path);
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw lily::InvalidInput(path.string() + ": not valid JSON");
  if (j.is_object() && j.contains("data")) {
    const auto cfg = lily::harness::experiment_config_from_json(text);
    if (data_seed != nullptr) *data_seed = cfg.data_seed;
    return cfg.data;
  }
  return lily::datagen::config_from_json(text);
}

lily::estimator::TrainConfig read_train_config(const fs::path& path) {
  const std::string text = lily::io::read_text(path);
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw lily::InvalidInput(path.string() + ": not valid JSON");
  if (j.is_object() && j.contains("train")) return lily::estimator::train_config_from_json(j.at("train").dump());
  return lily::estimator::train_config_from_json(text);
}

void write_json_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  lily::io::write_text(path, text + "\n");
}

struct Options {
  fs::path config, out, data, spec, model;
  std::string theorem = "T1";
  std::string method = "pearson";
  std::optional<std::uint64_t> seed;
  int points = 6;
  int samples = 16;
  int segment = 0;
  bool paper_scale = false;
};

int cmd_generate(const Options& o) {
  std::uint64_t data_seed = 0;
  lily::datagen::ProcessConfig pc = read_process_config(o.config, &data_seed);
  if (o.seed) data_seed = *o.seed;
  const auto ds = lily::datagen::generate(lily::datagen::build_spec(pc), data_seed);
  lily::datagen::save_dataset(ds, o.out);
  spdlog::info("wrote {} rows ({} segments) to {}", ds.size(), ds.num_segments(), o.out.string());
  return 0;
}

int cmd_audit(const Options& o) {
  using lily::auditor::Theorem;
  lily::datagen::LatentProcessSpec spec;
  if (!o.data.empty()) {
    spec = lily::datagen::load_dataset(o.data).spec;
  } else {
    spec = lily::datagen::build_spec(read_process_config(o.spec, nullptr));
  }
  const std::uint64_t seed = o.seed.value_or(0);
  const Theorem theorem = lily::auditor::theorem_from_string(o.theorem);
  std::string text;
  std::string verdict;
  switch (theorem) {
    case Theorem::kT1: {
      const auto r = lily::auditor::audit_fixed(lily::auditor::fixed_block_family(spec, seed), o.points, seed);
      text = lily::auditor::report_to_json(r);
      verdict = lily::auditor::to_string(r.verdict);
      break;
    }
    case Theorem::kT2: {
      const auto r = lily::auditor::audit_changing(lily::auditor::changing_block_families(spec, seed), o.points, seed);
      text = lily::auditor::report_to_json(r);
      verdict = lily::auditor::to_string(r.verdict);
      break;
    }
    case Theorem::kT3: {
      const auto r = lily::auditor::audit_observation(lily::auditor::observation_families(spec, seed), o.points, seed);
      text = lily::auditor::report_to_json(r);
      verdict = lily::auditor::to_string(r.verdict);
      break;
    }
    case Theorem::kC1: {
      const auto r = lily::auditor::audit_corollary1(lily::auditor::fixed_block_family(spec, seed), o.points, seed);
      text = lily::auditor::report_to_json(r);
      verdict = lily::auditor::to_string(r.verdict);
      break;
    }
    case Theorem::kC2: {
      const auto r = lily::auditor::audit_corollary2(spec.linear_a, spec.config.gn_lambda, spec.config.gn_beta,
                                                     o.points, seed);
      text = lily::auditor::report_to_json(r);
      verdict = lily::auditor::to_string(r.verdict);
      break;
    }
    case Theorem::kC3: {
      const auto r = lily::auditor::audit_modular(spec, o.points, seed);
      text = lily::auditor::modular_to_json(r);
      verdict = lily::auditor::to_string(r.overall);
      break;
    }
  }
  write_json_file(o.out, text);
  spdlog::info("{}: {}", o.theorem, verdict);
  return 0;
}

int cmd_train(const Options& o) {
  const auto ds = lily::datagen::load_dataset(o.data);
  lily::estimator::TrainConfig tc = o.config.empty() ? lily::estimator::TrainConfig{} : read_train_config(o.config);
  if (o.seed) tc.seed = *o.seed;
  const auto result = lily::estimator::train(ds, tc, [](const lily::estimator::EpochRecord& r) {
    spdlog::info("epoch {:3d}  train {:.5f}  val {:.5f}  mcc {:.4f}", r.epoch, r.train_elbo, r.val_elbo, r.mcc);
  });
  lily::estimator::save_checkpoint(o.out, result.params, tc, result.history);
  if (result.diverged) {
    spdlog::error("training diverged: {}", result.message);
    return kFailure;
  }
  spdlog::info("best epoch {}; checkpoint in {}", result.best_epoch, o.out.string());
  return 0;
}

int cmd_adapt(const Options& o) {
  const auto ckpt = lily::estimator::load_checkpoint(o.model);
  const auto ds = lily::datagen::load_dataset(o.data);
  if (o.segment < 0 || o.segment >= ds.num_segments()) throw lily::InvalidInput("--segment outside the dataset");
  if (o.samples < 1 || o.samples > ds.samples_per_segment()) throw lily::InvalidInput("--samples outside the segment");
  const lily::Matrix x = ds.observations.middleRows(ds.segment_begin(o.segment), o.samples);
  lily::estimator::AdaptConfig ac;
  ac.weights = ckpt.cfg.weights();
  ac.seed = o.seed.value_or(0);
  const auto r = lily::estimator::correct_shift(ckpt.params, x, ac);
  const json j{{"segment", o.segment},
               {"samples", o.samples},
               {"theta", std::vector<double>(r.theta.begin(), r.theta.end())},
               {"elbo", r.elbo},
               {"steps", r.steps}};
  write_json_file(o.out, j.dump(2));
  spdlog::info("adapted theta after {} steps, elbo {:.5f}", r.steps, r.elbo);
  return 0;
}

int cmd_eval(const Options& o) {
  const auto ckpt = lily::estimator::load_checkpoint(o.model);
  const auto ds = lily::datagen::load_dataset(o.data);
  std::vector<int> seg(ds.segments.begin(), ds.segments.end());
  for (int s : seg) {
    if (s >= ckpt.params.config.num_segments) throw lily::InvalidInput("dataset has segments the model never saw");
  }
  const lily::Matrix est = lily::estimator::encode_means(ds.observations, seg, ckpt.params);
  const auto report = lily::metrics::mcc(ds.latents, est, lily::metrics::method_from_string(o.method));
  write_json_file(o.out, lily::metrics::report_to_json(report));
  spdlog::info("mcc ({}) = {:.4f}", o.method, report.mcc);
  return 0;
}

int cmd_experiment(const Options& o) {
  lily::harness::ExperimentConfig cfg = lily::harness::load_experiment_config(o.config);
  if (!o.out.empty()) cfg.outputs = o.out;
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.paper_scale) lily::harness::apply_paper_scale(cfg);
  const auto report = lily::harness::run_experiment(cfg);
  spdlog::info("{}: mcc {:.4f} +- {:.4f} over {} seeds ({:.0f} s)", report.name, report.mcc_mean, report.mcc_std,
               report.seeds.size(), report.wall_seconds);
  for (const auto& f : report.failures) spdlog::error("stage {} (seed {}): {}", f.stage, f.seed, f.message);
  return report.failures.empty() ? 0 : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent causal dynamics under modular distribution shifts"};
  app.require_subcommand(1);
  Options o;

  const auto seed_flag = [&o](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>("--seed", [&o](const std::uint64_t& s) { o.seed = s; },
                                           "Seed for all randomness of the command");
  };

  auto* gen = app.add_subcommand("generate", "Generate a dataset from a process config");
  gen->add_option("--config", o.config, "Process or experiment config (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", o.out, "Dataset directory")->required();
  seed_flag(gen);

  auto* audit = app.add_subcommand("audit", "Rank audit of an identifiability condition");
  auto* data_opt = audit->add_option("--data", o.data, "Dataset directory")->check(CLI::ExistingDirectory);
  auto* spec_opt = audit->add_option("--spec", o.spec, "Process config (JSON)")->check(CLI::ExistingFile);
  data_opt->excludes(spec_opt);
  audit->add_option("--theorem", o.theorem, "T1, T2, T3, C1, C2 or C3")
      ->check(CLI::IsMember({"T1", "T2", "T3", "C1", "C2", "C3"}));
  audit->add_option("--points", o.points, "Evaluation points")->check(CLI::PositiveNumber);
  audit->add_option("--out", o.out, "Report JSON")->required();
  seed_flag(audit);

  auto* train = app.add_subcommand("train", "Fit the estimator to a dataset");
  train->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", o.config, "Training or experiment config (JSON)")->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Checkpoint directory")->required();
  seed_flag(train);

  auto* adapt = app.add_subcommand("adapt", "Learn change factors for one segment with the model frozen");
  adapt->add_option("--model", o.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  adapt->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  adapt->add_option("--samples", o.samples, "Rows used from the segment")->check(CLI::PositiveNumber);
  adapt->add_option("--segment", o.segment, "Segment of the dataset to adapt to");
  adapt->add_option("--out", o.out, "Result JSON")->required();
  seed_flag(adapt);

  auto* eval = app.add_subcommand("eval", "MCC of a model's posterior means");
  eval->add_option("--model", o.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--data", o.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--method", o.method, "pearson or spearman")->check(CLI::IsMember({"pearson", "spearman"}));
  eval->add_option("--out", o.out, "MccReport JSON")->required();

  auto* exp = app.add_subcommand("experiment", "Run a full experiment config");
  exp->add_option("--config", o.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", o.out, "Output directory (overrides the config)");
  exp->add_flag("--paper-scale", o.paper_scale, "Use the original sample counts");
  seed_flag(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  if (audit->parsed() && o.data.empty() && o.spec.empty()) {
    std::cerr << "audit: one of --data or --spec is required\n" << audit->help();
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(o);
    if (audit->parsed()) return cmd_audit(o);
    if (train->parsed()) return cmd_train(o);
    if (adapt->parsed()) return cmd_adapt(o);
    if (eval->parsed()) return cmd_eval(o);
    if (exp->parsed()) return cmd_experiment(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFailure;
  }
  return kUsage;
}
