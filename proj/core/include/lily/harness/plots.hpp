#pragma once

#include "lily/harness/experiment.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lily::harness {

/// Writes scatter.csv (seed,component,true,estimated), mcc_by_epoch.csv
/// (seed,epoch,train_elbo,val_elbo,mcc) and theta_scatter.csv
/// (seed,segment,truth,projection,theta_0,...). Files whose stage did not
/// run are skipped; the returned notices name them.
std::vector<std::string> emit_plots(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace lily::harness
