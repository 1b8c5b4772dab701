#pragma once

#include "lily/auditor/density.hpp"

#include <vector>

namespace lily::auditor {

/// Partial derivatives of eta_k at one (z_t, history) pair. v and v_ring run
/// over the stacked history.
struct DerivativeBundle {
  double d1 = 0.0;  // d eta / d z_k
  double d2 = 0.0;  // d^2 eta / d z_k^2
  Vector v;         // d^2 eta / d z_k d h_l
  Vector v_ring;    // d^3 eta / d z_k^2 d h_l
};

/// Analytic for the four built-in kinds, finite differences for custom.
DerivativeBundle derivatives_at(const DensityFamily& family, int k, const Vector& z_t, const Vector& history);

/// derivatives_at for every component k, sharing the map evaluations.
std::vector<DerivativeBundle> derivatives_all(const DensityFamily& family, const Vector& z_t, const Vector& history);

/// Central differences with two Richardson steps on log_density, whatever the
/// kind. Steps grow with derivative order (1e-3 for d1, 1e-2 for d2 and v,
/// 5e-2 outer step for v_ring): round-off in the nested third derivative
/// scales like eps / step^3, truncation like step^6.
DerivativeBundle derivatives_numeric(const DensityFamily& family, int k, const Vector& z_t, const Vector& history);

}  // namespace lily::auditor
