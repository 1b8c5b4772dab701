#pragma once

#include "lily/datagen/process.hpp"
#include "lily/numerics/matrix.hpp"

#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

namespace lily::auditor {

/// Vector-valued map of the stacked history with an optional Jacobian. A
/// missing Jacobian is filled in by central differences.
struct HistoryMap {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;  // outputs x history_dim

  Matrix jacobian_at(const Vector& history) const;
};

enum class DensityKind { kGaussianAdditive, kHeteroskedastic, kGeneralizedNormalLinear, kIidMarginal, kCustom };

std::string_view to_string(DensityKind kind);

/// eta_k(z_k | history) = log p(z_{k,t} | z_{t-1}, ..., z_{t-L}) for one
/// context. Build with the factory functions below.
struct DensityFamily {
  DensityKind kind = DensityKind::kGaussianAdditive;
  int n = 0;            // components audited
  int history_dim = 0;  // length of the stacked history (0: no dependence)

  HistoryMap q;     // conditional mean (gaussian_additive, heteroskedastic)
  Vector sigma;     // per-component noise sd (gaussian_additive)
  HistoryMap b;     // per-component inverse noise sd (heteroskedastic)
  Matrix a;         // n x history_dim (generalized_normal_linear)
  double lambda = 1.0;
  double beta = 2.0;
  Vector mean;      // iid_marginal Gaussian marginals
  Vector var;
  std::function<double(int k, double z_k, const Vector& history)> custom;

  /// Optional evaluation support: matching rows of current values and
  /// stacked histories, usually from a stationary trajectory. Empty means
  /// standard normal draws.
  Matrix support_z;
  Matrix support_history;
};

DensityFamily gaussian_additive(HistoryMap q, Vector sigma, int history_dim);
/// eta = -log(2 pi)/2 + log b - b^2 (z - q)^2 / 2.
DensityFamily heteroskedastic(HistoryMap q, HistoryMap b, int n, int history_dim);
/// z = A history + e with p(e) proportional to exp(-lambda |e|^beta).
DensityFamily generalized_normal_linear(Matrix a, double lambda, double beta);
/// History-free Gaussian marginals.
DensityFamily iid_marginal(Vector mean, Vector var);
/// Arbitrary log-density; derivatives come from finite differences.
DensityFamily custom_density(int n, int history_dim, std::function<double(int, double, const Vector&)> log_density);

/// eta_k at (z_k, history). Throws NumericDomain where the density is zero
/// or undefined.
double log_density(const DensityFamily& family, int k, double z_k, const Vector& history);

/// Checks family shapes; throws InvalidInput.
void validate(const DensityFamily& family);

/// Integral of exp(eta_k(. | history)) over the real line, by Simpson's
/// rule after the substitution z = center + t / (1 - t^2).
double normalization_integral(const DensityFamily& family, int k, const Vector& history, double center);

/// Families of the three blocks of a generated process. The support is a
/// stationary trajectory simulated from `seed` (pooled over segments).
DensityFamily fixed_block_family(const datagen::LatentProcessSpec& spec, std::uint64_t seed);
/// One family per segment, sharing the support.
std::vector<DensityFamily> changing_block_families(const datagen::LatentProcessSpec& spec, std::uint64_t seed);
std::vector<DensityFamily> observation_families(const datagen::LatentProcessSpec& spec, std::uint64_t seed);

}  // namespace lily::auditor
