#include "lily/auditor/audit.hpp"

#include "lily/auditor/derivatives.hpp"
#include "lily/datagen/generators.hpp"
#include "lily/error.hpp"
#include "lily/numerics/rng.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <utility>

namespace lily::auditor {
namespace {

constexpr int kGridPerComponent = 8;
constexpr int kReruns = 2;  // extra seeds tried before calling a deficiency reproducible

// Draws current values and histories, from the support when present.
class PointSampler {
 public:
  PointSampler(const DensityFamily& f, Rng& rng) : f_(f), rng_(rng) {}

  Vector z() {
    if (f_.support_z.rows() > 0) return f_.support_z.row(pick()).transpose();
    return normal(f_.n);
  }
  Vector history() {
    if (f_.support_history.rows() > 0) return f_.support_history.row(pick()).transpose();
    return normal(f_.history_dim);
  }

 private:
  Eigen::Index pick() { return static_cast<Eigen::Index>(rng_.uniform_index(static_cast<std::uint64_t>(f_.support_z.rows()))); }
  Vector normal(int size) {
    Vector v(size);
    for (int i = 0; i < size; ++i) v[i] = rng_.normal();
    return v;
  }

  const DensityFamily& f_;
  Rng& rng_;
};

// Fills the 2n x width block for one (z_t, history) pair.
using BlockFiller = std::function<void(const Vector& z, const Vector& history, Eigen::Ref<Matrix> block)>;

struct Attempt {
  int min_rank = 0;
  Matrix worst;
  RankReport worst_report;
  Matrix points;
  std::vector<bool> row_nonzero;
};

void note_nonzero_rows(const Matrix& m, std::vector<bool>& flags) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!flags[static_cast<std::size_t>(r)] && (m.row(r).array() != 0.0).any()) flags[static_cast<std::size_t>(r)] = true;
  }
}

// One matrix per sampled z_t; columns run over a grid of histories.
Attempt pointwise(const DensityFamily& sampler_family, int rows, int width, int num_points, std::uint64_t seed,
                  const BlockFiller& fill) {
  Rng rng(seed);
  PointSampler sampler(sampler_family, rng);
  const int grid = grid_size(sampler_family.n);
  Attempt a;
  a.min_rank = rows + 1;
  a.points.resize(num_points, sampler_family.n);
  a.row_nonzero.assign(static_cast<std::size_t>(rows), false);
  Matrix m(rows, static_cast<Eigen::Index>(grid) * width);
  for (int p = 0; p < num_points; ++p) {
    const Vector z = sampler.z();
    a.points.row(p) = z.transpose();
    m.setZero();
    for (int g = 0; g < grid; ++g) fill(z, sampler.history(), m.middleCols(static_cast<Eigen::Index>(g) * width, width));
    note_nonzero_rows(m, a.row_nonzero);
    RankReport report = rank_with_tolerance(m);
    if (report.numeric_rank < a.min_rank) {
      a.min_rank = report.numeric_rank;
      a.worst = m;
      a.worst_report = std::move(report);
    }
  }
  return a;
}

// A single matrix whose columns run over the sampled z_t (no history).
Attempt pooled(const DensityFamily& sampler_family, int rows, int width, int num_points, std::uint64_t seed,
               const BlockFiller& fill) {
  Rng rng(seed);
  PointSampler sampler(sampler_family, rng);
  Attempt a;
  a.points.resize(num_points, sampler_family.n);
  a.row_nonzero.assign(static_cast<std::size_t>(rows), false);
  a.worst = Matrix::Zero(rows, static_cast<Eigen::Index>(num_points) * width);
  const Vector no_history(0);
  for (int p = 0; p < num_points; ++p) {
    const Vector z = sampler.z();
    a.points.row(p) = z.transpose();
    fill(z, no_history, a.worst.middleCols(static_cast<Eigen::Index>(p) * width, width));
  }
  note_nonzero_rows(a.worst, a.row_nonzero);
  a.worst_report = rank_with_tolerance(a.worst);
  a.min_rank = a.worst_report.numeric_rank;
  return a;
}

ConditionReport decide(Theorem theorem, int rows, int num_points, std::uint64_t seed,
                       const std::function<Attempt(std::uint64_t)>& attempt) {
  Attempt first = attempt(seed);
  ConditionReport r;
  r.theorem = theorem;
  r.num_points = num_points;
  r.seed = seed;
  for (int i = 0; i < rows; ++i) {
    if (!first.row_nonzero[static_cast<std::size_t>(i)]) r.zero_rows.push_back(i);
  }
  if (!r.zero_rows.empty()) {
    r.verdict = Verdict::kUnidentifiable;
  } else if (first.min_rank == rows) {
    r.verdict = Verdict::kIdentifiable;
  } else {
    int deficient = 1;
    for (int i = 1; i <= kReruns; ++i) {
      if (attempt(seed + static_cast<std::uint64_t>(i)).min_rank < rows) ++deficient;
    }
    r.verdict = deficient == 1 + kReruns ? Verdict::kUnidentifiable : Verdict::kInconclusive;
  }
  r.stacked_matrix = std::move(first.worst);
  r.rank_report = std::move(first.worst_report);
  r.eval_points = std::move(first.points);
  return r;
}

void require_points(int num_points) {
  if (num_points <= 0) throw InvalidInput("num_points must be positive");
}

void require_contexts(const std::vector<DensityFamily>& families, bool history_free) {
  if (families.size() < 2) throw InvalidInput("multi-context audits need at least two contexts");
  for (const DensityFamily& f : families) {
    validate(f);
    if (f.n != families.front().n || f.history_dim != families.front().history_dim) {
      throw InvalidInput("contexts must share n and history length");
    }
    if (history_free && f.history_dim != 0) throw InvalidInput("observation-change contexts must not depend on history");
  }
}

ConditionReport vacuous(Theorem theorem, std::uint64_t seed) {
  ConditionReport r;
  r.theorem = theorem;
  r.verdict = Verdict::kIdentifiable;
  r.seed = seed;
  r.vacuous = true;
  return r;
}

// Stationary run of z_t = A h + e used as support for the linear audit; empty
// if A is not stable enough to produce one.
void linear_support(DensityFamily& f, std::uint64_t seed) {
  const int n = f.n;
  if (f.history_dim % n != 0) throw InvalidInput("A must be n x (n * lag)");
  const int lag = f.history_dim / n;
  constexpr int kBurn = 100;
  constexpr int kRows = 1024;
  Rng rng = Rng(seed).derive({0x5eedULL});
  Vector h(f.history_dim);
  for (int i = 0; i < h.size(); ++i) h[i] = rng.normal();
  Matrix z(kRows, n), hist(kRows, f.history_dim);
  for (int t = 0; t < kBurn + kRows; ++t) {
    Vector next = f.a * h;
    for (int k = 0; k < n; ++k) next[k] += datagen::sample_generalized_normal(rng, f.lambda, f.beta);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e6) return;
    if (t >= kBurn) {
      z.row(t - kBurn) = next.transpose();
      hist.row(t - kBurn) = h.transpose();
    }
    for (int tau = lag - 1; tau > 0; --tau) h.segment(tau * n, n) = h.segment((tau - 1) * n, n);
    h.head(n) = next;
  }
  f.support_z = std::move(z);
  f.support_history = std::move(hist);
}

}  // namespace

int grid_size(int n) { return kGridPerComponent * n; }

std::string_view to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::kT1: return "T1";
    case Theorem::kT2: return "T2";
    case Theorem::kT3: return "T3";
    case Theorem::kC1: return "C1";
    case Theorem::kC2: return "C2";
    case Theorem::kC3: return "C3";
  }
  return "unknown";
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kIdentifiable: return "identifiable";
    case Verdict::kUnidentifiable: return "unidentifiable";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "unknown";
}

Theorem theorem_from_string(std::string_view name) {
  for (Theorem t : {Theorem::kT1, Theorem::kT2, Theorem::kT3, Theorem::kC1, Theorem::kC2, Theorem::kC3}) {
    if (to_string(t) == name) return t;
  }
  throw InvalidInput("unknown theorem '" + std::string(name) + "'");
}

Verdict verdict_from_string(std::string_view name) {
  for (Verdict v : {Verdict::kIdentifiable, Verdict::kUnidentifiable, Verdict::kInconclusive}) {
    if (to_string(v) == name) return v;
  }
  throw InvalidInput("unknown verdict '" + std::string(name) + "'");
}

ConditionReport audit_fixed(const DensityFamily& family, int num_points, std::uint64_t seed) {
  require_points(num_points);
  validate(family);
  const int n = family.n;
  // A history-free family gets one zero column per grid point.
  const int width = std::max(family.history_dim, 1);
  const BlockFiller fill = [&](const Vector& z, const Vector& h, Eigen::Ref<Matrix> block) {
    if (family.history_dim == 0) return;
    const std::vector<DerivativeBundle> d = derivatives_all(family, z, h);
    for (int k = 0; k < n; ++k) {
      block.row(2 * k) = d[k].v.transpose();
      block.row(2 * k + 1) = d[k].v_ring.transpose();
    }
  };
  return decide(Theorem::kT1, 2 * n, num_points, seed,
                [&](std::uint64_t s) { return pointwise(family, 2 * n, width, num_points, s, fill); });
}

ConditionReport audit_changing(const std::vector<DensityFamily>& families, int num_points, std::uint64_t seed) {
  require_points(num_points);
  require_contexts(families, false);
  const DensityFamily& base = families.front();
  const int n = base.n;
  const int hd = base.history_dim;
  const int m = static_cast<int>(families.size());
  const int width = m * hd + (m - 1);
  const BlockFiller fill = [&](const Vector& z, const Vector& h, Eigen::Ref<Matrix> block) {
    std::vector<std::vector<DerivativeBundle>> d;
    d.reserve(static_cast<std::size_t>(m));
    for (const DensityFamily& f : families) d.push_back(derivatives_all(f, z, h));
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < m; ++r) {
        block.row(2 * k).segment(r * hd, hd) = d[r][k].v.transpose();
        block.row(2 * k + 1).segment(r * hd, hd) = d[r][k].v_ring.transpose();
      }
      for (int r = 1; r < m; ++r) {
        block(2 * k, m * hd + r - 1) = d[r][k].d2 - d[r - 1][k].d2;
        block(2 * k + 1, m * hd + r - 1) = d[r][k].d1 - d[r - 1][k].d1;
      }
    }
  };
  return decide(Theorem::kT2, 2 * n, num_points, seed,
                [&](std::uint64_t s) { return pointwise(base, 2 * n, width, num_points, s, fill); });
}

ConditionReport audit_observation(const std::vector<DensityFamily>& families, int num_points, std::uint64_t seed) {
  require_points(num_points);
  require_contexts(families, true);
  const DensityFamily& base = families.front();
  const int n = base.n;
  const int m = static_cast<int>(families.size());
  const int width = m - 1;
  const BlockFiller fill = [&](const Vector& z, const Vector& h, Eigen::Ref<Matrix> block) {
    std::vector<std::vector<DerivativeBundle>> d;
    for (const DensityFamily& f : families) d.push_back(derivatives_all(f, z, h));
    for (int k = 0; k < n; ++k) {
      for (int r = 1; r < m; ++r) {
        block(2 * k, r - 1) = d[r][k].d2 - d[r - 1][k].d2;
        block(2 * k + 1, r - 1) = d[r][k].d1 - d[r - 1][k].d1;
      }
    }
  };
  return decide(Theorem::kT3, 2 * n, num_points, seed,
                [&](std::uint64_t s) { return pooled(base, 2 * n, width, num_points, s, fill); });
}

ModularAudit audit_modular(const datagen::LatentProcessSpec& spec, int num_points, std::uint64_t seed) {
  datagen::validate(spec);
  const datagen::Partition& p = spec.config.partition;
  ModularAudit out;
  out.blocks.push_back(p.fixed > 0 ? audit_fixed(fixed_block_family(spec, seed), num_points, seed)
                                   : vacuous(Theorem::kT1, seed));
  out.blocks.push_back(p.changing > 0 ? audit_changing(changing_block_families(spec, seed), num_points, seed)
                                      : vacuous(Theorem::kT2, seed));
  out.blocks.push_back(p.obs > 0 ? audit_observation(observation_families(spec, seed), num_points, seed)
                                 : vacuous(Theorem::kT3, seed));
  bool all = true;
  bool any_unidentifiable = false;
  for (const ConditionReport& r : out.blocks) {
    all = all && r.verdict == Verdict::kIdentifiable;
    any_unidentifiable = any_unidentifiable || r.verdict == Verdict::kUnidentifiable;
  }
  out.overall = all ? Verdict::kIdentifiable : (any_unidentifiable ? Verdict::kUnidentifiable : Verdict::kInconclusive);
  return out;
}

ConditionReport audit_corollary1(const DensityFamily& family, int num_points, std::uint64_t seed) {
  require_points(num_points);
  validate(family);
  if (family.kind != DensityKind::kHeteroskedastic) throw InvalidInput("corollary 1 needs a heteroskedastic family");
  const int n = family.n;
  const int hd = family.history_dim;
  if (hd == 0) throw InvalidInput("corollary 1 needs a history");
  const BlockFiller fill = [&](const Vector& z, const Vector& h, Eigen::Ref<Matrix> block) {
    const Vector q = family.q.value(h);
    const Vector b = family.b.value(h);
    const Matrix dq = family.q.jacobian_at(h);
    const Matrix db = family.b.jacobian_at(h);
    for (int k = 0; k < n; ++k) {
      if (!(b[k] > 0.0)) throw NumericDomain("corollary 1 needs b > 0 at every sampled point");
      block.row(2 * k) = b[k] * db.row(k);
      block.row(2 * k + 1) = b[k] * (z[k] - q[k]) * db.row(k) - b[k] * b[k] * dq.row(k);
    }
  };
  return decide(Theorem::kC1, 2 * n, num_points, seed,
                [&](std::uint64_t s) { return pointwise(family, 2 * n, hd, num_points, s, fill); });
}

ConditionReport audit_corollary1(const HistoryMap& q, const HistoryMap& b, int n, int history_dim, int num_points,
                                 std::uint64_t seed) {
  return audit_corollary1(heteroskedastic(q, b, n, history_dim), num_points, seed);
}

ConditionReport audit_corollary2(const Matrix& a, double lambda, double beta, int num_points, std::uint64_t seed) {
  require_points(num_points);
  if (a.rows() == 0 || a.cols() == 0) throw InvalidInput("A must be non-empty");
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    if ((a.row(r).array() == 0.0).all()) {
      throw InvalidInput("row " + std::to_string(r) + " of A has no nonzero entry");
    }
  }
  if (!(lambda > 0.0)) throw InvalidInput("lambda must be positive");
  if (!(beta >= 2.0) || beta == 3.0) throw InvalidInput("corollary 2 needs beta > 2 and beta != 3 (beta = 2 as the Gaussian check)");
  DensityFamily family = generalized_normal_linear(a, lambda, beta);
  linear_support(family, seed);
  const int n = family.n;
  const int hd = family.history_dim;
  const BlockFiller fill = [&](const Vector& z, const Vector& h, Eigen::Ref<Matrix> block) {
    const Vector e = z - a * h;
    for (int k = 0; k < n; ++k) {
      const double ae = std::abs(e[k]);
      const double sign = e[k] > 0.0 ? 1.0 : (e[k] < 0.0 ? -1.0 : 0.0);
      const double lead = lambda * beta * (beta - 1.0);
      block.row(2 * k) = -lead * std::pow(ae, beta - 2.0) * a.row(k);
      if (beta != 2.0) {
        if (ae == 0.0 && beta < 3.0) throw NumericDomain("zero residual makes |e|^(beta-3) singular");
        block.row(2 * k + 1) = -lead * (beta - 2.0) * sign * std::pow(ae, beta - 3.0) * a.row(k);
      }
    }
  };
  return decide(Theorem::kC2, 2 * n, num_points, seed,
                [&](std::uint64_t s) { return pointwise(family, 2 * n, hd, num_points, s, fill); });
}

}  // namespace lily::auditor
