#pragma once

#include "lily/datagen/dataset.hpp"
#include "lily/estimator/elbo.hpp"
#include "lily/numerics/rng.hpp"

#include <span>
#include <vector>

namespace lily::estimator {

/// A window of L + 1 rows starting at dataset row `start`.
struct WindowRef {
  int segment = 0;
  Eigen::Index start = 0;
};

/// Train windows come from the first (1 - val_fraction) of every segment,
/// validation windows and rows from the last val_fraction, so no window
/// straddles the boundary.
struct WindowSplit {
  std::vector<WindowRef> train;
  std::vector<WindowRef> val;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> val_rows;
};

/// Throws InvalidInput if a segment is too short to give both splits a
/// window.
WindowSplit split_windows(const datagen::Dataset& ds, int lag, double val_fraction);

/// Every window of a contiguous run of rows (all in one segment).
std::vector<WindowRef> windows_in(int segment, Eigen::Index first_row, Eigen::Index rows, int lag);

/// Gathers the windows and draws fresh standard-normal noise from `rng`.
WindowBatch make_batch(const Matrix& observations, std::span<const WindowRef> windows, int lag, int latent_dim,
                       Rng& rng);

/// Same, with segment indices replaced by `segment` (for adaptation data).
WindowBatch make_batch_as(const Matrix& observations, std::span<const WindowRef> windows, int lag, int latent_dim,
                          int segment, Rng& rng);

}  // namespace lily::estimator
