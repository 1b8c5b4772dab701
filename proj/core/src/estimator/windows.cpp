#include "lily/estimator/windows.hpp"

#include "lily/error.hpp"

#include <cmath>

namespace lily::estimator {

std::vector<WindowRef> windows_in(int segment, Eigen::Index first_row, Eigen::Index rows, int lag) {
  std::vector<WindowRef> out;
  for (Eigen::Index s = 0; s + lag < rows; ++s) out.push_back({segment, first_row + s});
  return out;
}

WindowSplit split_windows(const datagen::Dataset& ds, int lag, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidInput("val_fraction must lie in (0, 1)");
  const Eigen::Index per = ds.samples_per_segment();
  const Eigen::Index val = static_cast<Eigen::Index>(std::floor(val_fraction * static_cast<double>(per)));
  const Eigen::Index train = per - val;
  if (val < lag + 1 || train < lag + 1) throw InvalidInput("segments too short for the train/validation split");
  WindowSplit split;
  for (int k = 0; k < ds.num_segments(); ++k) {
    const Eigen::Index begin = ds.segment_begin(k);
    for (const auto& w : windows_in(k, begin, train, lag)) split.train.push_back(w);
    for (const auto& w : windows_in(k, begin + train, val, lag)) split.val.push_back(w);
    for (Eigen::Index r = 0; r < train; ++r) split.train_rows.push_back(begin + r);
    for (Eigen::Index r = train; r < per; ++r) split.val_rows.push_back(begin + r);
  }
  return split;
}

WindowBatch make_batch(const Matrix& observations, std::span<const WindowRef> windows, int lag, int latent_dim,
                       Rng& rng) {
  WindowBatch b;
  b.windows = static_cast<int>(windows.size());
  b.length = lag + 1;
  b.x.resize(static_cast<Eigen::Index>(b.windows) * b.length, observations.cols());
  b.noise.resize(b.x.rows(), latent_dim);
  b.segments.reserve(windows.size());
  Eigen::Index row = 0;
  for (const auto& w : windows) {
    if (w.start < 0 || w.start + lag >= observations.rows()) throw InvalidInput("window outside the observations");
    b.x.middleRows(row, b.length) = observations.middleRows(w.start, b.length);
    b.segments.push_back(w.segment);
    row += b.length;
  }
  for (Eigen::Index i = 0; i < b.noise.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.noise.cols(); ++j) b.noise(i, j) = rng.normal();
  }
  return b;
}

WindowBatch make_batch_as(const Matrix& observations, std::span<const WindowRef> windows, int lag, int latent_dim,
                          int segment, Rng& rng) {
  WindowBatch b = make_batch(observations, windows, lag, latent_dim, rng);
  for (auto& s : b.segments) s = segment;
  return b;
}

}  // namespace lily::estimator
