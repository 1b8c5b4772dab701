#include "lily/auditor/derivatives.hpp"

#include "lily/error.hpp"

#include <cmath>
#include <functional>

namespace lily::auditor {
namespace {

using Fn1 = std::function<double(double)>;

// Two Richardson steps on central differences at s, s/2, s/4 (error O(s^6)).
template <typename Diff>
double richardson(const Diff& d, double s) {
  const double a = d(s);
  const double b = d(0.5 * s);
  const double c = d(0.25 * s);
  const double ab = (4.0 * b - a) / 3.0;
  const double bc = (4.0 * c - b) / 3.0;
  return (16.0 * bc - ab) / 15.0;
}

double richardson_d1(const Fn1& f, double x, double s) {
  return richardson([&](double h) { return (f(x + h) - f(x - h)) / (2.0 * h); }, s);
}

double richardson_d2(const Fn1& f, double x, double s) {
  const double fx = f(x);
  return richardson([&](double h) { return (f(x + h) - 2.0 * fx + f(x - h)) / (h * h); }, s);
}

constexpr double kStepD1 = 1e-3;
constexpr double kStepInner = 1e-2;
constexpr double kStepOuterV = 1e-2;
constexpr double kStepOuterVRing = 5e-2;

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_point(const DensityFamily& f, int k, const Vector& z_t, const Vector& history) {
  if (k < 0 || k >= f.n) throw InvalidInput("component index out of range");
  if (z_t.size() != f.n) throw InvalidInput("z_t length does not match the family");
  if (history.size() != f.history_dim) throw InvalidInput("history length does not match the family");
}

}  // namespace

DerivativeBundle derivatives_numeric(const DensityFamily& f, int k, const Vector& z_t, const Vector& history) {
  check_point(f, k, z_t, history);
  const double z = z_t[k];
  DerivativeBundle out;
  auto at = [&](const Vector& h) { return Fn1([&f, k, &h](double x) { return log_density(f, k, x, h); }); };
  out.d1 = richardson_d1(at(history), z, kStepD1);
  out.d2 = richardson_d2(at(history), z, kStepInner);
  out.v.resize(f.history_dim);
  out.v_ring.resize(f.history_dim);
  Vector shifted = history;
  for (int l = 0; l < f.history_dim; ++l) {
    auto along = [&](const std::function<double(const Fn1&)>& inner) {
      return Fn1([&, l, inner](double u) {
        shifted[l] = history[l] + u;
        const double value = inner(at(shifted));
        shifted[l] = history[l];
        return value;
      });
    };
    out.v[l] = richardson_d1(along([z](const Fn1& g) { return richardson_d1(g, z, kStepInner); }), 0.0, kStepOuterV);
    out.v_ring[l] =
        richardson_d1(along([z](const Fn1& g) { return richardson_d2(g, z, kStepInner); }), 0.0, kStepOuterVRing);
  }
  if (!std::isfinite(out.d1) || !std::isfinite(out.d2) || !out.v.allFinite() || !out.v_ring.allFinite()) {
    throw NumericDomain("finite-difference derivatives are not finite");
  }
  return out;
}

namespace {

// Map values and Jacobians at one history, computed once for all components.
struct MapCache {
  Vector q, b;
  Matrix dq, db;
};

MapCache evaluate_maps(const DensityFamily& f, const Vector& history) {
  MapCache c;
  if (f.kind == DensityKind::kGaussianAdditive || f.kind == DensityKind::kHeteroskedastic) {
    c.q = f.q.value(history);
    c.dq = f.q.jacobian_at(history);
    if (c.q.size() < f.n || c.dq.rows() < f.n || c.dq.cols() != f.history_dim) {
      throw InvalidInput("mean map output does not match the family shape");
    }
  }
  if (f.kind == DensityKind::kHeteroskedastic) {
    c.b = f.b.value(history);
    c.db = f.b.jacobian_at(history);
    if (c.b.size() < f.n || c.db.rows() < f.n || c.db.cols() != f.history_dim) {
      throw InvalidInput("scale map output does not match the family shape");
    }
  }
  return c;
}

DerivativeBundle analytic(const DensityFamily& f, const MapCache& c, int k, const Vector& z_t,
                          const Vector& history) {
  const double z = z_t[k];
  DerivativeBundle out;
  switch (f.kind) {
    case DensityKind::kGaussianAdditive: {
      const double inv_var = 1.0 / (f.sigma[k] * f.sigma[k]);
      out.d1 = -(z - c.q[k]) * inv_var;
      out.d2 = -inv_var;
      out.v = c.dq.row(k).transpose() * inv_var;
      out.v_ring = Vector::Zero(f.history_dim);
      break;
    }
    case DensityKind::kHeteroskedastic: {
      const double b = c.b[k];
      if (!(b > 0.0)) throw NumericDomain("heteroskedastic scale b must be positive");
      const double r = z - c.q[k];
      const Vector db = c.db.row(k).transpose();
      const Vector dq = c.dq.row(k).transpose();
      out.d1 = -b * b * r;
      out.d2 = -b * b;
      out.v = -2.0 * b * r * db + b * b * dq;
      out.v_ring = -2.0 * b * db;
      break;
    }
    case DensityKind::kGeneralizedNormalLinear: {
      const double e = z - f.a.row(k).dot(history);
      const double ae = std::abs(e);
      const double lb = f.lambda * f.beta;
      if (ae == 0.0 && f.beta < 3.0 && f.beta != 2.0) {
        throw NumericDomain("generalized normal derivatives are singular at zero residual");
      }
      const Vector c = f.a.row(k).transpose();
      out.d1 = -lb * sign_of(e) * std::pow(ae, f.beta - 1.0);
      out.d2 = -lb * (f.beta - 1.0) * std::pow(ae, f.beta - 2.0);
      out.v = lb * (f.beta - 1.0) * std::pow(ae, f.beta - 2.0) * c;
      if (f.beta == 2.0) {
        out.v_ring = Vector::Zero(f.history_dim);
      } else {
        out.v_ring = lb * (f.beta - 1.0) * (f.beta - 2.0) * sign_of(e) * std::pow(ae, f.beta - 3.0) * c;
      }
      break;
    }
    case DensityKind::kIidMarginal: {
      out.d1 = -(z - f.mean[k]) / f.var[k];
      out.d2 = -1.0 / f.var[k];
      out.v = Vector::Zero(f.history_dim);
      out.v_ring = Vector::Zero(f.history_dim);
      break;
    }
    case DensityKind::kCustom: return derivatives_numeric(f, k, z_t, history);
  }
  if (!std::isfinite(out.d1) || !std::isfinite(out.d2) || !out.v.allFinite() || !out.v_ring.allFinite()) {
    throw NumericDomain("derivatives are not finite at the evaluation point");
  }
  return out;
}

}  // namespace

DerivativeBundle derivatives_at(const DensityFamily& f, int k, const Vector& z_t, const Vector& history) {
  check_point(f, k, z_t, history);
  return analytic(f, evaluate_maps(f, history), k, z_t, history);
}

std::vector<DerivativeBundle> derivatives_all(const DensityFamily& f, const Vector& z_t, const Vector& history) {
  check_point(f, 0, z_t, history);
  const MapCache cache = evaluate_maps(f, history);
  std::vector<DerivativeBundle> out;
  out.reserve(static_cast<std::size_t>(f.n));
  for (int k = 0; k < f.n; ++k) out.push_back(analytic(f, cache, k, z_t, history));
  return out;
}

}  // namespace lily::auditor
