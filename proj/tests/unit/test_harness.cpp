#include "lily/error.hpp"
#include "lily/harness/config.hpp"
#include "lily/harness/experiment.hpp"
#include "lily/harness/plots.hpp"
#include "lily/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

namespace lily::harness {
namespace {

namespace fs = std::filesystem;

ExperimentConfig tiny_experiment(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.name = "tiny";
  cfg.data.regime = datagen::Regime::kFixedHetero;
  cfg.data.n_latent = 3;
  cfg.data.partition = {3, 0, 0};
  cfg.data.samples_per_segment = 300;
  cfg.data.seed = 4;
  cfg.train.max_epochs = 2;
  cfg.train.patience = 2;
  cfg.seeds = {7};
  cfg.outputs = out;
  return cfg;
}

std::vector<std::string> lines_of(const fs::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig cfg = tiny_experiment("somewhere");
  cfg.seeds = {1, 2, 3};
  cfg.audit = true;
  cfg.adapt.enabled = true;
  cfg.adapt.samples = 20;
  cfg.beta_grid = {1e-3, 1e-2};
  cfg.gamma_grid = {0.0};
  cfg.data.coupling = datagen::NoiseCoupling::kNone;
  const ExperimentConfig back = experiment_config_from_json(experiment_config_to_json(cfg));
  EXPECT_EQ(back.name, "tiny");
  EXPECT_EQ(back.seeds, cfg.seeds);
  EXPECT_EQ(back.outputs, cfg.outputs);
  EXPECT_TRUE(back.audit);
  EXPECT_TRUE(back.adapt.enabled);
  EXPECT_EQ(back.adapt.samples, 20);
  EXPECT_EQ(back.beta_grid, cfg.beta_grid);
  EXPECT_EQ(back.gamma_grid, cfg.gamma_grid);
  EXPECT_EQ(back.data.coupling, datagen::NoiseCoupling::kNone);
  EXPECT_EQ(back.data.samples_per_segment, 300);
  EXPECT_EQ(back.train.max_epochs, 2);
  EXPECT_EQ(experiment_config_to_json(back), experiment_config_to_json(cfg));
}

TEST(Config, RejectsNewerSchemaAndBadValues) {
  EXPECT_THROW(experiment_config_from_json("{\"schema_version\": 2}"), InvalidInput);
  EXPECT_THROW(experiment_config_from_json("{\"seeds\": []}"), InvalidInput);
  EXPECT_THROW(experiment_config_from_json("{\"grid\": {\"beta\": [0.1]}}"), InvalidInput);
  EXPECT_THROW(experiment_config_from_json("[1, 2"), InvalidInput);
}

TEST(Config, PaperScaleCounts) {
  ExperimentConfig cfg;
  apply_paper_scale(cfg);
  EXPECT_EQ(cfg.data.samples_per_segment, 100000);
  cfg.data.regime = datagen::Regime::kChangingDyn;
  cfg.data.num_segments = 20;
  apply_paper_scale(cfg);
  EXPECT_EQ(cfg.data.samples_per_segment, 7500);
}

TEST(Summary, MeanAndPopulationStd) {
  const auto [m, s] = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_DOUBLE_EQ(s, std::sqrt(1.25));
}

TEST(Summary, PrincipalCorrelationOfALine) {
  Matrix theta(5, 2);
  Vector truth(5);
  for (int i = 0; i < 5; ++i) {
    truth[i] = i - 2.0;
    theta(i, 0) = 3.0 * truth[i] + 1.0;
    theta(i, 1) = -truth[i];
  }
  Vector proj;
  EXPECT_NEAR(principal_correlation(theta, truth, &proj), 1.0, 1e-12);
  EXPECT_EQ(proj.size(), 5);
}

TEST(Experiment, RepeatedRunIsIdenticalAndWritesArtifacts) {
  const fs::path a = fs::temp_directory_path() / "lily_test_exp_a";
  const fs::path b = fs::temp_directory_path() / "lily_test_exp_b";
  fs::remove_all(a);
  fs::remove_all(b);
  const ExperimentReport ra = run_experiment(tiny_experiment(a));
  const ExperimentReport rb = run_experiment(tiny_experiment(b));
  EXPECT_TRUE(ra.failures.empty());
  ASSERT_EQ(ra.seeds.size(), 1u);
  EXPECT_TRUE(ra.seeds[0].ok);
  EXPECT_EQ(report_to_json(ra, false), report_to_json(rb, false));
  EXPECT_EQ(report_to_json(ra, false).find("wall_seconds"), std::string::npos);

  for (const char* f : {"report.json", "scatter.csv", "mcc_by_epoch.csv", "seed_7/params.bin", "data/meta.json"})
    EXPECT_TRUE(fs::exists(a / f)) << f;
  EXPECT_FALSE(fs::exists(a / "theta_scatter.csv"));

  const auto scatter = lines_of(a / "scatter.csv");
  ASSERT_FALSE(scatter.empty());
  EXPECT_EQ(scatter[0], "seed,component,true,estimated");
  EXPECT_EQ(scatter.size(), 1 + static_cast<std::size_t>(ra.seeds[0].val_true.rows()) * 3);
  EXPECT_EQ(ra.seeds[0].val_true.rows(), 30);

  const auto curve = lines_of(a / "mcc_by_epoch.csv");
  EXPECT_EQ(curve[0], "seed,epoch,train_elbo,val_elbo,mcc");
  EXPECT_EQ(curve.size(), 1 + ra.seeds[0].history.size());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Plots, EmptyReportSkipsEveryFile) {
  const fs::path dir = fs::temp_directory_path() / "lily_test_plots_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto notices = emit_plots(ExperimentReport{}, dir);
  EXPECT_EQ(notices.size(), 2u);
  EXPECT_TRUE(fs::is_empty(dir));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace lily::harness
