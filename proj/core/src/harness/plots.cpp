#include "lily/harness/plots.hpp"

#include "lily/io.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lily::harness {
namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

}  // namespace

std::vector<std::string> emit_plots(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::vector<std::string> notices;
  std::filesystem::create_directories(dir);
  bool any_trained = false;
  bool any_adapted = false;
  for (const auto& s : report.seeds) {
    any_trained = any_trained || s.ok;
    any_adapted = any_adapted || s.adapted;
  }

  if (any_trained) {
    std::ostringstream scatter;
    scatter << "seed,component,true,estimated\n";
    std::ostringstream curve;
    curve << "seed,epoch,train_elbo,val_elbo,mcc\n";
    for (const auto& s : report.seeds) {
      if (!s.ok) continue;
      for (Eigen::Index i = 0; i < s.val_true.rows(); ++i) {
        for (Eigen::Index k = 0; k < s.val_true.cols(); ++k) {
          scatter << s.seed << ',' << k << ',' << fmt(s.val_true(i, k)) << ',' << fmt(s.val_est(i, k)) << '\n';
        }
      }
      for (const auto& h : s.history) {
        curve << s.seed << ',' << h.epoch << ',' << fmt(h.train_elbo) << ',' << fmt(h.val_elbo) << ','
              << fmt(h.mcc) << '\n';
      }
    }
    io::write_text(dir / "scatter.csv", scatter.str());
    io::write_text(dir / "mcc_by_epoch.csv", curve.str());
  } else {
    notices.push_back("scatter.csv and mcc_by_epoch.csv skipped: no trained seed");
  }

  if (any_adapted) {
    std::ostringstream theta;
    int width = 0;
    for (const auto& s : report.seeds) {
      if (s.adapted) width = std::max(width, static_cast<int>(s.adapt.theta_hat.cols()));
    }
    theta << "seed,segment,truth,projection";
    for (int d = 0; d < width; ++d) theta << ",theta_" << d;
    theta << '\n';
    for (const auto& s : report.seeds) {
      if (!s.adapted) continue;
      for (Eigen::Index i = 0; i < s.adapt.theta_hat.rows(); ++i) {
        theta << s.seed << ',' << i << ',' << fmt(s.adapt.truth[i]) << ',' << fmt(s.adapt.projection[i]);
        for (int d = 0; d < width; ++d) {
          theta << ',' << (d < s.adapt.theta_hat.cols() ? fmt(s.adapt.theta_hat(i, d)) : std::string());
        }
        theta << '\n';
      }
    }
    io::write_text(dir / "theta_scatter.csv", theta.str());
  } else {
    notices.push_back("theta_scatter.csv skipped: no adaptation stage");
  }
  return notices;
}

}  // namespace lily::harness
